#pragma once

#include "stampacchia/fem.hpp"
#include "stampacchia/solver.hpp"
#include "stampacchia/truncation.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace stampacchia {

struct BoundExponents {
  double q = 8.0;
  double r = 4.0;
  int d = 2;

  /// 1/2 - 1/q - 1/r
  double delta() const noexcept { return 0.5 - 1.0 / q - 1.0 / r; }
  /// Throws ExponentPrecondition unless q > d, q > 2, r > 2 and delta > 0.
  void check() const;
};

/// 2^{(1/2-1/q)/delta} (E/nu) sqrt((1 + gamma^2) area^delta) sqrt(f_norm_sq)
double linfty_bound(double E, double nu, double gamma_u, double area, double q, double r, double f_norm_sq,
                    int d = 2);

/// Level beyond which a nonincreasing phi with
/// phi(h) <= C (h-k)^{-alpha} phi(k)^beta for h > k >= 0 vanishes:
/// (C phi0^{beta-1} 2^{alpha beta/(beta-1)})^{1/alpha}.
double stampacchia_extinction(double C, double alpha, double beta, double phi0);

struct GradientRow {
  double k = 0.0;
  double lhs = 0.0;  ///< ||grad zeta_k||_2^2
  double rhs = 0.0;  ///< |A_k|^{1-2/q} f_norm_sq / nu^2
  double slack = 0.0;
};

struct DecayRow {
  double k = 0.0;
  double h = 0.0;
  double measure_obs = 0.0;    ///< |A_h|
  double measure_bound = 0.0;  ///< (h-k)^{-r} (E/nu)^r (1+gamma^2)^{r/2} F^{r/2} |A_k|^{(1-2/q) r/2}
  double slack = 0.0;
};

struct DecayConstants {
  double nu = 1.0;
  double E = 1.0;
  double gamma_u = 0.0;
};

struct DecayCheck {
  std::vector<GradientRow> gradient_rows;
  std::vector<DecayRow> decay_rows;
  std::size_t gradient_failures = 0;
  std::size_t decay_failures = 0;
  double min_gradient_slack = 0.0;
  double min_decay_slack = 0.0;

  bool pass() const noexcept { return gradient_failures == 0 && decay_failures == 0; }
};

/// Checks the gradient estimate and the level-set decay inequality on the
/// levels of `scan` (every pair h > k for the decay rows).
DecayCheck verify_decay(const TruncationScan& scan, double f_norm_sq, const DecayConstants& constants,
                        const BoundExponents& exponents);

/// Same, from a solve of a gradient-form functional with kappa = 0.
DecayCheck verify_decay(const SolveReport& solve, const NeumannFunctional& T, const DecayConstants& constants,
                        const BoundExponents& exponents, const TruncationScan& scan);

struct BoundReport {
  BoundExponents exponents;
  double delta = 0.0;
  double nu = 0.0;
  double E = 0.0;
  double gamma_u = 0.0;
  double area = 0.0;
  double f_norm_sq = 0.0;
  double rhs_bound = 0.0;
  double observed_sup = 0.0;
  bool bound_holds = false;
  DecayCheck decay;

  bool pass() const noexcept { return bound_holds && decay.pass(); }
  /// linfty_bound recomputed from the stored factors.
  double recompute_bound() const;
};

/// Full chain on one solved problem: gamma_u scan, decay check, L-infinity
/// bound with the discrete constants. `T` must be gradient-form, kappa = 0.
BoundReport evaluate_bound(const SolveReport& solve, const NeumannFunctional& T, double nu, double E,
                           const BoundExponents& exponents, int grid_size = 256,
                           TruncationScan* scan_out = nullptr);

/// Gradient-form functional, kappa = 0, element-wise standard-normal f
/// scaled so that (sum_j ||f_j||_q^2)^{1/2} = 1.
NeumannFunctional random_gradient_functional(const TriMesh& mesh, double q, std::mt19937_64& gen);

struct OperatorNormFamily {
  MeshPtr mesh;
  CoefficientField mu;
  double q = 8.0;
  SolverOptions solver;
};

struct OperatorNormResult {
  double c_hat = 0.0;
  std::vector<double> ratios;  ///< ||u||_inf / f_norm per sample, in sample order
  std::vector<double> gammas;  ///< gamma_u per sample (only when requested)
};

/// max over samples of ||u||_inf / (sum_j ||f_j||_q^2)^{1/2}; sample i uses
/// substream(seed, "operator-norm", i), so results do not depend on threads.
OperatorNormResult empirical_operator_norm(const OperatorNormFamily& family, int samples, std::uint64_t seed,
                                           double data_scale = 1.0, bool with_gamma = false);

/// CSV with columns k,h,measure_obs,measure_bound,slack.
void write_decay_csv(std::ostream& os, const DecayCheck& check);

} // namespace stampacchia
