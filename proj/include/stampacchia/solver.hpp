#pragma once

#include "stampacchia/fem.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace stampacchia {

struct SolverOptions {
  double tol = 1e-10;         ///< relative Euclidean residual ||Ku - b|| / ||b||
  double tol_compat = 1e-10;  ///< relative tolerance on T(1)
  int max_iterations = 0;     ///< 0 selects 20 * vertex count
  bool jacobi = false;
  std::vector<double> p_norms;  ///< gradient p-norms to report
};

struct SolveReport {
  FeFunction u;
  int iterations = 0;
  double relative_residual = 0.0;
  double norm_inf = 0.0;
  double norm_2 = 0.0;
  double grad_norm_2 = 0.0;
  std::vector<std::pair<double, double>> grad_norm_p{};  ///< (p, ||grad u||_p)
  double dual_norm_2 = 0.0;
};

/// u - (1/|Omega|) int u.
FeFunction project_mean_zero(const FeFunction& u);

/// K u, computed element by element from nodal differences; adding a
/// constant to u leaves the result unchanged.
Vector apply_operator(const TriMesh& mesh, const CoefficientField& mu, const FeFunction& u);

/// Exact discrete (W^{1,2})* norm of T via the Riesz problem (M + K_I) w = b.
double dual_norm_2(const TriMesh& mesh, const NeumannFunctional& T);
double dual_norm_2(const TriMesh& mesh, const Vector& load);

struct KrylovResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients for K x = b on {x : w.x = 0} with w = M 1. Requires
/// sum(b) = 0 up to rounding. Non-symmetric K falls back to a projected
/// BiCGSTAB with the same projections.
KrylovResult projected_krylov(const SparseMatrix& K, const Vector& weights, const Vector& b, const Vector& x0,
                              double tol, int max_iterations, bool jacobi, bool symmetric = true);

/// Solves A_perp u = T on the mean-zero subspace. Throws
/// IncompatibleFunctional when |T(1)| exceeds the compatibility tolerance
/// and NonConvergence when the iteration cap is reached.
SolveReport solve_neumann(const MeshPtr& mesh, const CoefficientField& mu, const NeumannFunctional& T,
                          const SolverOptions& options = {}, const std::optional<Vector>& initial_guess = {});

} // namespace stampacchia
