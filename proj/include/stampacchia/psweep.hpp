#pragma once

#include "stampacchia/fem.hpp"
#include "stampacchia/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stampacchia {

struct SweepOptions {
  std::vector<double> contrasts{1.0, 10.0, 100.0};
  std::vector<double> ps{1.8, 1.9, 2.0, 2.1, 2.2};
  int samples = 8;
  std::uint64_t seed = 1;
  int macro_cells = 4;
  SolverOptions solver;
};

struct SweepRow {
  std::size_t contrast_index = 0;
  std::size_t p_index = 0;
  std::size_t sample = 0;
  double contrast = 0.0;
  double p = 0.0;
  double ratio = 0.0;  ///< ||grad u||_p / (sum_j ||f_j||_{p'}^2)^{1/2}
  std::string status = "ok";
};

struct SweepResult {
  std::vector<double> contrasts;  ///< sorted
  std::vector<double> ps;         ///< sorted
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<SweepRow> rows;      ///< ordered by (contrast, p, sample)
  std::vector<double> max_ratio;   ///< per contrast, over completed rows

  /// max over samples of the ratio at (contrast index, p index).
  double column_max(std::size_t contrast_index, std::size_t p_index) const;
};

double dual_exponent(double p);

/// Checkerboard solves with random gradient-form data; failed solves are
/// recorded with status "failed: <reason>" and ratio NaN.
SweepResult run_sweep(const MeshPtr& mesh, const SweepOptions& options);

/// CSV with columns contrast,p,sample,ratio,status.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

} // namespace stampacchia
