#include "stampacchia/solver.hpp"

#include "stampacchia/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>

namespace stampacchia {

namespace {

// x - (w.x / sum w) 1, the M-orthogonal removal of constants.
void project_weighted(Vector& x, const Vector& w, double total) { x.array() -= w.dot(x) / total; }

// Euclidean removal of constants; keeps residuals in range(K).
void project_euclidean(Vector& r) { r.array() -= r.mean(); }

} // namespace

FeFunction project_mean_zero(const FeFunction& u) {
  const Vector w = basis_integrals(u.mesh());
  Vector v = u.values();
  project_weighted(v, w, w.sum());
  return u.with_values(std::move(v));
}

Vector apply_operator(const TriMesh& mesh, const CoefficientField& mu, const FeFunction& u) {
  if (mu.size() != mesh.num_triangles()) throw DimensionMismatch("coefficient field does not match mesh");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto geo = element_geometry(mesh, e);
    const Vector2 flux = mu[e] * u.gradient(e);
    const auto& t = mesh.triangles()[e];
    for (int i = 0; i < 3; ++i) out[t[i]] += geo.area * flux.dot(geo.grad_phi[i]);
  }
  return out;
}

double dual_norm_2(const TriMesh& mesh, const Vector& load) {
  if (static_cast<std::size_t>(load.size()) != mesh.num_vertices())
    throw DimensionMismatch("load vector length differs from vertex count");
  if (load.squaredNorm() == 0.0) return 0.0;
  SparseMatrix A = assemble_mass(mesh) + assemble_stiffness_identity(mesh);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw NonConvergence("factorization of M + K_I failed");
  const Vector w = ldlt.solve(load);
  if (ldlt.info() != Eigen::Success) throw NonConvergence("Riesz solve failed");
  return std::sqrt(std::max(load.dot(w), 0.0));
}

double dual_norm_2(const TriMesh& mesh, const NeumannFunctional& T) {
  return dual_norm_2(mesh, assemble_load(mesh, T));
}

KrylovResult projected_krylov(const SparseMatrix& K, const Vector& weights, const Vector& b, const Vector& x0,
                              double tol, int max_iterations, bool jacobi, bool symmetric) {
  const double total = weights.sum();
  KrylovResult res;
  res.x = x0;
  project_weighted(res.x, weights, total);

  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    res.converged = true;
    return res;
  }

  Vector dinv = Vector::Ones(b.size());
  if (jacobi) {
    const Vector d = K.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) dinv[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  }

  Vector r = b - K * res.x;
  project_euclidean(r);
  double rnorm = r.norm();
  if (rnorm <= tol * bnorm) {
    res.relative_residual = rnorm / bnorm;
    res.converged = true;
    return res;
  }

  if (symmetric) {
    Vector z = dinv.cwiseProduct(r);
    Vector p = z;
    project_weighted(p, weights, total);
    double rz = r.dot(z);
    for (int it = 1; it <= max_iterations; ++it) {
      const Vector Kp = K * p;
      const double pKp = p.dot(Kp);
      if (!(pKp > 0.0)) break;
      const double alpha = rz / pKp;
      res.x += alpha * p;
      r -= alpha * Kp;
      project_euclidean(r);
      rnorm = r.norm();
      res.iterations = it;
      if (rnorm <= tol * bnorm) {
        res.converged = true;
        break;
      }
      z = dinv.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      project_weighted(p, weights, total);
      rz = rz_new;
    }
  } else {
    // Right-preconditioned BiCGSTAB; every update direction is projected.
    const Vector r_hat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Vector v = Vector::Zero(b.size());
    Vector p = Vector::Zero(b.size());
    for (int it = 1; it <= max_iterations; ++it) {
      const double rho_new = r_hat.dot(r);
      if (rho_new == 0.0) break;
      p = r + (rho_new / rho) * (alpha / omega) * (p - omega * v);
      rho = rho_new;
      Vector y = dinv.cwiseProduct(p);
      project_weighted(y, weights, total);
      v = K * y;
      alpha = rho / r_hat.dot(v);
      const Vector s = r - alpha * v;
      Vector zs = dinv.cwiseProduct(s);
      project_weighted(zs, weights, total);
      const Vector t = K * zs;
      const double tt = t.dot(t);
      omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
      res.x += alpha * y + omega * zs;
      r = s - omega * t;
      project_euclidean(r);
      rnorm = r.norm();
      res.iterations = it;
      if (rnorm <= tol * bnorm) {
        res.converged = true;
        break;
      }
      if (omega == 0.0) break;
    }
  }
  project_weighted(res.x, weights, total);
  // True residual, not the recursively updated one.
  Vector rt = b - K * res.x;
  project_euclidean(rt);
  res.relative_residual = rt.norm() / bnorm;
  res.converged = res.converged && res.relative_residual <= 10.0 * tol;
  return res;
}

SolveReport solve_neumann(const MeshPtr& mesh, const CoefficientField& mu, const NeumannFunctional& T,
                          const SolverOptions& options, const std::optional<Vector>& initial_guess) {
  const TriMesh& m = *mesh;
  const Vector b = assemble_load(m, T);
  const double compat = b.sum();
  const double scale = T.compatibility_scale(m);
  if (std::abs(compat) > options.tol_compat * scale) {
    std::ostringstream msg;
    msg << "T(1) = " << compat << " exceeds " << options.tol_compat << " * " << scale << "; no solution exists";
    throw IncompatibleFunctional(msg.str());
  }

  const SparseMatrix K = assemble_stiffness(m, mu);
  const Vector w = basis_integrals(m);
  const auto n = static_cast<Eigen::Index>(m.num_vertices());
  Vector x0 = initial_guess ? *initial_guess : Vector::Zero(n);
  if (x0.size() != n) throw DimensionMismatch("initial guess length differs from vertex count");

  const int cap = options.max_iterations > 0 ? options.max_iterations : 20 * static_cast<int>(n);
  Vector rhs = b;
  rhs.array() -= rhs.mean();  // remove the rounding-level incompatibility
  const auto kr = projected_krylov(K, w, rhs, x0, options.tol, cap, options.jacobi, mu.symmetric());
  if (!kr.converged) {
    std::ostringstream msg;
    msg << "Krylov iteration stopped after " << kr.iterations << " iterations with relative residual "
        << kr.relative_residual;
    throw NonConvergence(msg.str());
  }

  SolveReport rep{FeFunction(mesh, kr.x)};
  rep.iterations = kr.iterations;
  rep.relative_residual = kr.relative_residual;
  rep.norm_inf = rep.u.max_abs();
  rep.norm_2 = lp_norm(rep.u, 2.0);
  rep.grad_norm_2 = grad_lp_norm(rep.u, 2.0);
  for (double p : options.p_norms) rep.grad_norm_p.emplace_back(p, grad_lp_norm(rep.u, p));
  rep.dual_norm_2 = dual_norm_2(m, b);
  return rep;
}

} // namespace stampacchia
