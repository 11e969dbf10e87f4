#include "stampacchia/constants.hpp"

#include "stampacchia/errors.hpp"
#include "stampacchia/rng.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stampacchia {

double symmetric_part_min_eigenvalue(const Matrix2& mu) {
  const double a = mu(0, 0);
  const double c = mu(1, 1);
  const double b = 0.5 * (mu(0, 1) + mu(1, 0));
  return 0.5 * (a + c) - std::hypot(0.5 * (a - c), b);
}

double spectral_norm(const Matrix2& mu) {
  const double fro2 = mu.squaredNorm();
  const double det = mu.determinant();
  const double disc = std::sqrt(std::max(fro2 * fro2 - 4.0 * det * det, 0.0));
  return std::sqrt(0.5 * (fro2 + disc));
}

Ellipticity ellipticity_constants(std::span<const Matrix2> mu) {
  if (mu.empty()) throw NotElliptic("no coefficient matrices");
  Ellipticity out{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& m : mu) {
    if (!m.allFinite()) throw NotElliptic("coefficient matrix has non-finite entries");
    out.nu = std::min(out.nu, symmetric_part_min_eigenvalue(m));
    out.mu_sup = std::max(out.mu_sup, spectral_norm(m));
  }
  if (!(out.nu > 0.0)) throw NotElliptic("smallest eigenvalue of the symmetric part is " + std::to_string(out.nu));
  return out;
}

namespace {

// Solves K x = b for the singular Neumann stiffness (kernel = constants) by
// pinning vertex 0; requires sum(b) = 0.
class PinnedSolver {
public:
  explicit PinnedSolver(const SparseMatrix& K) : n_(K.rows()) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index k = 0; k < K.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(K, k); it; ++it)
        if (it.row() > 0 && it.col() > 0) trip.emplace_back(it.row() - 1, it.col() - 1, it.value());
    SparseMatrix reduced(n_ - 1, n_ - 1);
    reduced.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(reduced);
    if (ldlt_.info() != Eigen::Success) throw NonConvergence("factorization of the pinned stiffness failed");
  }

  Vector solve(const Vector& b) const {
    Vector x = Vector::Zero(n_);
    x.tail(n_ - 1) = ldlt_.solve(b.tail(n_ - 1));
    return x;
  }

private:
  Eigen::Index n_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

void remove_mean(Vector& v, const Vector& w, double total) { v.array() -= w.dot(v) / total; }

// Integrals of |v|^(r-2) v phi_i by the six-point rule, and ||v||_r^r.
double power_gradient(const TriMesh& mesh, const Vector& v, double r, Vector* grad) {
  const auto& rule = six_point_rule();
  if (grad) grad->setZero(v.size());
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    const double area = mesh.element_areas()[e];
    for (int q = 0; q < TriangleQuadrature::size; ++q) {
      const auto& l = rule.barycentric[q];
      const double val = l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]];
      const double a = std::abs(val);
      const double pw = r == 2.0 ? 1.0 : std::pow(a, r - 2.0);
      total += area * rule.weight[q] * pw * a * a;
      if (grad)
        for (int i = 0; i < 3; ++i) (*grad)[t[i]] += area * rule.weight[q] * pw * val * l[i];
    }
  }
  return total;
}

// ||v||_2^2 + ||grad v||_2^2 summed elementwise; the assembled form
// v^T (M + K) v cancels badly on near-degenerate elements.
double w_norm_sq(const TriMesh& mesh, const Vector& v) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    const auto geo = element_geometry(mesh, e);
    const double a = v[t[0]], b = v[t[1]], c = v[t[2]];
    const Vector2 g = a * geo.grad_phi[0] + b * geo.grad_phi[1] + c * geo.grad_phi[2];
    s += geo.area * ((a * a + b * b + c * c + (a + b + c) * (a + b + c)) / 12.0 + g.squaredNorm());
  }
  return s;
}

struct AscentContext {
  const TriMesh& mesh;
  double r;
  SparseMatrix A;  // M + K_I
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;

  AscentContext(const TriMesh& m, double r_) : mesh(m), r(r_), A(assemble_mass(m) + assemble_stiffness_identity(m)) {
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) throw NonConvergence("factorization of M + K_I failed");
  }

  double w_norm(const Vector& v) const { return std::sqrt(w_norm_sq(mesh, v)); }

  double ratio(const Vector& v) const {
    const double wn = w_norm(v);
    if (wn == 0.0) return 0.0;
    return std::pow(power_gradient(mesh, v, r, nullptr), 1.0 / r) / wn;
  }

  EmbeddingProbe ascend(Vector v, const std::string& origin, int max_it, double stagnation) const {
    EmbeddingProbe probe;
    probe.origin = origin;
    double wn = w_norm(v);
    if (wn == 0.0) {
      probe.v = v;
      return probe;
    }
    v /= wn;
    double current = ratio(v);
    Vector best = v;
    double best_ratio = current;
    Vector g(v.size());
    for (int it = 1; it <= max_it; ++it) {
      power_gradient(mesh, v, r, &g);
      Vector next = ldlt.solve(g);
      wn = w_norm(next);
      if (!(wn > 0.0) || !next.allFinite()) break;
      next /= wn;
      const double value = ratio(next);
      probe.iterations = it;
      const double change = std::abs(value - current);
      v = std::move(next);
      current = value;
      if (value > best_ratio) {
        best_ratio = value;
        best = v;
      }
      if (change <= stagnation * std::abs(value)) {
        probe.converged = true;
        break;
      }
    }
    probe.v = std::move(best);
    probe.ratio = best_ratio;
    return probe;
  }
};

void absorb(EmbeddingResult& res, EmbeddingProbe probe) {
  if (probe.ratio > res.E) {
    res.E = probe.ratio;
    res.maximizer = probe.v;
    res.maximizer_origin = probe.origin;
    res.converged = probe.converged;
  }
  res.probes.push_back(std::move(probe));
}

Vector random_nodal(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(gen);
  return v;
}

} // namespace

PoincareResult poincare_constant(const TriMesh& mesh, const PoincareOptions& options) {
  if (!is_edge_connected(mesh)) throw DisconnectedMesh("mesh triangles are not edge-connected");
  const SparseMatrix K = assemble_stiffness_identity(mesh);
  const SparseMatrix M = assemble_mass(mesh);
  const Vector w = basis_integrals(mesh);
  const double total = w.sum();
  const PinnedSolver solver(K);

  auto gen = substream(options.seed, "poincare");
  Vector v = random_nodal(mesh.num_vertices(), gen);
  remove_mean(v, w, total);
  v /= std::sqrt(v.dot(M * v));

  PoincareResult res;
  double lambda = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vector rhs = M * v;
    rhs.array() -= rhs.mean();
    Vector x = solver.solve(rhs);
    remove_mean(x, w, total);
    const double mx = x.dot(M * x);
    const double next = x.dot(K * x) / mx;
    v = x / std::sqrt(mx);
    res.iterations = it;
    res.rayleigh_change = std::abs(next - lambda) / next;
    lambda = next;
    if (res.rayleigh_change <= options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonConvergence("inverse iteration did not reach the Rayleigh quotient tolerance");

  // Geometric scale: thin elements inflate trace(K) without affecting lambda_2.
  const auto box = mesh.bounding_box();
  const double diam_sq = (box[2] - box[0]) * (box[2] - box[0]) + (box[3] - box[1]) * (box[3] - box[1]);
  if (!(lambda > 1e-10 / diam_sq)) throw DisconnectedMesh("lambda_2 is numerically zero");

  const Vector Mv = M * v;
  res.residual = (K * v - lambda * Mv).norm() / (lambda * Mv.norm());
  res.lambda_2 = lambda;
  res.c_poincare = 1.0 / std::sqrt(lambda);
  res.eigenvector = std::move(v);
  return res;
}

double embedding_ratio(const TriMesh& mesh, const Vector& v, double r) {
  const double wn = std::sqrt(w_norm_sq(mesh, v));
  if (wn == 0.0) return 0.0;
  return std::pow(power_gradient(mesh, v, r, nullptr), 1.0 / r) / wn;
}

EmbeddingResult embedding_constant(const TriMesh& mesh, double r, const EmbeddingOptions& options) {
  if (!(r >= 2.0) || std::isinf(r)) throw PreconditionViolation("embedding exponent must satisfy 2 <= r < inf");
  const AscentContext ctx(mesh, r);
  const auto n = mesh.num_vertices();

  EmbeddingResult res;
  res.r = r;
  absorb(res, ctx.ascend(Vector::Ones(static_cast<Eigen::Index>(n)), "constant", options.max_iterations,
                         options.stagnation));

  if (options.hat_start) {
    // Single hat with the largest exact ratio ||phi_i||_r / ||phi_i||_W.
    Vector pw = Vector::Zero(static_cast<Eigen::Index>(n));
    const double factor = 2.0 / ((r + 1.0) * (r + 2.0));
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e)
      for (int i : mesh.triangles()[e]) pw[i] += factor * mesh.element_areas()[e];
    const Vector diag = ctx.A.diagonal();
    Eigen::Index best = 0;
    double best_ratio = -1.0;
    for (Eigen::Index i = 0; i < pw.size(); ++i) {
      const double ratio = std::pow(pw[i], 1.0 / r) / std::sqrt(diag[i]);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = i;
      }
    }
    Vector hat = Vector::Zero(static_cast<Eigen::Index>(n));
    hat[best] = 1.0;
    absorb(res, ctx.ascend(hat, "hat", options.max_iterations, options.stagnation));
  }

  for (int s = 0; s < options.random_starts; ++s) {
    auto gen = substream(options.seed, "embedding-start", static_cast<std::uint64_t>(s));
    absorb(res, ctx.ascend(random_nodal(n, gen), "random-" + std::to_string(s), options.max_iterations,
                           options.stagnation));
  }
  for (std::size_t s = 0; s < options.extra_starts.size(); ++s) {
    if (static_cast<std::size_t>(options.extra_starts[s].size()) != n)
      throw DimensionMismatch("extra start has wrong length");
    absorb(res, ctx.ascend(options.extra_starts[s], "seeded-" + std::to_string(s), options.max_iterations,
                           options.stagnation));
  }
  return res;
}

EmbeddingCertificate certify_embedding(const TriMesh& mesh, EmbeddingResult& result, int samples,
                                       std::uint64_t seed) {
  const AscentContext ctx(mesh, result.r);
  EmbeddingCertificate cert;
  cert.samples = samples;
  cert.E_before = result.E;

  auto gen = substream(seed, "embedding-certificate");
  std::vector<Vector> violators;
  std::vector<Vector> drawn;
  drawn.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    drawn.push_back(random_nodal(mesh.num_vertices(), gen));
    if (ctx.ratio(drawn.back()) > result.E) violators.push_back(drawn.back());
  }
  cert.initial_violations = static_cast<int>(violators.size());
  for (std::size_t i = 0; i < violators.size(); ++i)
    absorb(result, ctx.ascend(violators[i], "violator-" + std::to_string(i), 200, 1e-8));

  for (const auto& v : drawn)
    if (ctx.ratio(v) > result.E) ++cert.final_violations;
  cert.E_after = result.E;
  return cert;
}

ConstantsReport compute_constants(const TriMesh& mesh, const CoefficientField& mu, std::optional<double> r,
                                  const PoincareOptions& poincare, const EmbeddingOptions& embedding) {
  ConstantsReport rep;
  const auto ell = ellipticity_constants(mu.matrices());
  rep.nu = ell.nu;
  rep.mu_sup = ell.mu_sup;
  rep.area = mesh.total_area();
  rep.poincare = poincare_constant(mesh, poincare);
  if (r) rep.embedding = embedding_constant(mesh, *r, embedding);
  return rep;
}

Vector interpolate_to(const FeFunction& coarse, const TriMesh& fine) {
  const PointLocator locator(coarse.mesh());
  const auto& vals = coarse.values();
  Vector out(static_cast<Eigen::Index>(fine.num_vertices()));
  for (std::size_t i = 0; i < fine.num_vertices(); ++i) {
    const Point& p = fine.vertices()[i];
    const int e = locator.locate(p);
    auto l = locator.barycentric(e, p);
    // Clamp points just outside the coarse polygon onto its closure.
    double sum = 0.0;
    for (double& x : l) {
      x = std::max(x, 0.0);
      sum += x;
    }
    const auto& t = coarse.mesh().triangles()[static_cast<std::size_t>(e)];
    out[static_cast<Eigen::Index>(i)] = (l[0] * vals[t[0]] + l[1] * vals[t[1]] + l[2] * vals[t[2]]) / sum;
  }
  return out;
}

} // namespace stampacchia
