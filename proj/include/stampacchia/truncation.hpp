#pragma once

#include "stampacchia/fem.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stampacchia {

/// Nodal truncation zeta_i = sgn(u_i) max(|u_i| - k, 0), with sgn(0) = 0.
FeFunction truncate(const FeFunction& u, double k);

/// Exact area of {x : |u(x)| > k} for the piecewise-linear u.
double level_set_measure(const FeFunction& u, double k);

/// Area of {x in triangle : l(x) > k} for the linear function with vertex
/// values `vals` on a triangle of the given area. Nonincreasing in k under
/// floating-point evaluation.
double superlevel_area(std::array<double, 3> vals, double area, double k);

enum class ScanFlag { Ok, Undefined, Violation };

std::string to_string(ScanFlag flag);

struct TruncationRow {
  double k = 0.0;
  double norm2_zeta = 0.0;
  double norm2_grad_zeta = 0.0;
  double measure = 0.0;  ///< |A_k|
  double ratio = 0.0;    ///< ||zeta_k||_2 / ||grad zeta_k||_2 when defined
  ScanFlag flag = ScanFlag::Ok;
};

struct TruncationScan {
  std::vector<TruncationRow> rows;  ///< sorted by k
  double gamma = 0.0;               ///< supremum of the defined ratios
  double k_at_gamma = 0.0;
  double sup_norm = 0.0;
  int grid_size = 0;
  double coarse_step = 0.0;
  double refined_step = 0.0;

  std::vector<double> levels() const;
  std::size_t violations() const;
};

TruncationRow truncation_row(const FeFunction& u, double k);

/// Evaluates the rows on an explicit level list (sorted, deduplicated).
TruncationScan scan_levels(const FeFunction& u, std::vector<double> levels);

/// gamma_u on a uniform grid over [0, ||u||_inf) refined once (10x) around
/// the arg-max. Throws NotMeanZero unless |mean u| <= 1e-10 ||u||_2.
TruncationScan gamma_constant(const FeFunction& u, int grid_size = 256);

/// CSV with columns k,norm2_zeta,norm2_grad_zeta,measure_Ak,ratio,flag.
void write_scan_csv(std::ostream& os, const TruncationScan& scan);

} // namespace stampacchia
