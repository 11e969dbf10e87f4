#pragma once

#include "stampacchia/bounds.hpp"
#include "stampacchia/psweep.hpp"
#include "stampacchia/reports.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stampacchia {

struct DomainSpec {
  std::string family = "rectangle";  ///< rectangle | lshape | cusp | file
  int nx = 32;
  int ny = 32;
  double width = 1.0;
  double height = 1.0;
  int n = 16;
  double beta = 2.0;
  int vertical = 0;
  std::string path;
};

struct CoefficientSpec {
  std::string type = "identity";  ///< identity | diagonal | checkerboard | file
  double a = 1.0;
  double b = 1.0;
  double contrast = 1.0;
  int cells = 4;
  std::string path;  ///< one "m00 m01 m10 m11" line per element
};

struct RhsSpec {
  std::string form = "gradient";  ///< gradient | boundary
  bool random = false;
  int samples = 1;
  double kappa = 0.0;
  std::array<double, 2> f{0.0, 0.0};
  std::string f0 = "zero";  ///< zero | constant | cos_pi_x
  double f0_value = 0.0;
  double g = 0.0;
};

struct ChecksSpec {
  bool bound = false;
  bool analytic = false;
  double analytic_tol = 1e-2;
  bool sweep = false;
  int embedding_certificate_samples = 0;
};

struct ExperimentConfig {
  DomainSpec domain;
  CoefficientSpec coefficient;
  RhsSpec rhs;
  BoundExponents exponents;
  std::vector<double> p_norms;
  SolverOptions solver;
  ChecksSpec checks;
  SweepOptions sweep;
  int grid_size = 256;
  std::string output = "out";
  std::uint64_t seed = 0;
};

/// Throws ConfigInvalid naming the offending field path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

TriMesh build_mesh(const DomainSpec& spec);
CoefficientField build_coefficient(const CoefficientSpec& spec, const TriMesh& mesh);
/// Deterministic functional, or `samples` random ones from the "rhs" stream.
std::vector<NeumannFunctional> build_rhs(const ExperimentConfig& cfg, const TriMesh& mesh);

enum class Stage { Mesh, Constants, Solve, VerifyBound, Sweep, All };

struct RunOutcome {
  int exit_code = 0;  ///< 0 pass, 1 check failure
  Json summary;
  std::vector<std::string> files;
};

/// Runs the requested part of the pipeline and writes its report files into
/// cfg.output. Errors propagate with a stage label prefixed to the message.
RunOutcome run_experiment(const ExperimentConfig& cfg, Stage stage, std::ostream* log = nullptr);

/// Pass/fail flags derived only from report contents.
Json summarize_checks(const Json& reports);

} // namespace stampacchia
