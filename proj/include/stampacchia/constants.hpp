#pragma once

#include "stampacchia/fem.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stampacchia {

struct Ellipticity {
  double nu = 0.0;      ///< min over elements of the smallest eigenvalue of (mu + mu^T)/2
  double mu_sup = 0.0;  ///< max over elements of the spectral norm of mu
};

/// Closed-form 2x2 eigenvalues. Throws NotElliptic when nu <= 0.
Ellipticity ellipticity_constants(std::span<const Matrix2> mu);

double symmetric_part_min_eigenvalue(const Matrix2& mu);
double spectral_norm(const Matrix2& mu);

struct PoincareOptions {
  double tol = 1e-8;  ///< relative change of the Rayleigh quotient
  int max_iterations = 2000;
  std::uint64_t seed = 0x5eed;
};

struct PoincareResult {
  double c_poincare = 0.0;
  double lambda_2 = 0.0;
  int iterations = 0;
  double rayleigh_change = 0.0;
  double residual = 0.0;  ///< ||K v - lambda M v|| / ||lambda M v||
  Vector eigenvector;     ///< M-normalized, M-orthogonal to constants
};

/// Smallest nonzero eigenvalue of K_I v = lambda M v by inverse iteration
/// with the constants deflated. Throws DisconnectedMesh when the mesh is not
/// edge-connected or lambda_2 is numerically zero, NonConvergence when the
/// iteration cap is hit.
PoincareResult poincare_constant(const TriMesh& mesh, const PoincareOptions& options = {});

struct EmbeddingOptions {
  int random_starts = 5;
  int max_iterations = 200;
  double stagnation = 1e-8;
  std::uint64_t seed = 0xe4b;
  bool hat_start = true;            ///< also start from the best single hat function
  std::vector<Vector> extra_starts;  ///< e.g. a coarse maximizer interpolated to this mesh
};

struct EmbeddingProbe {
  std::string origin;
  Vector v;  ///< normalized, ||v||_{W^{1,2}} = 1
  double ratio = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct EmbeddingResult {
  double r = 0.0;
  double E = 0.0;  ///< max over probes; a lower bound of the discrete optimum
  Vector maximizer;
  std::string maximizer_origin;
  std::vector<EmbeddingProbe> probes;
  bool converged = false;  ///< the maximizing ascent stagnated before the cap
};

/// ||v||_r / ||v||_{W^{1,2}} with the six-point rule for ||v||_r.
double embedding_ratio(const TriMesh& mesh, const Vector& v, double r);

/// Multi-start normalized fixed-point ascent on ||v||_r subject to
/// ||v||_{W^{1,2}} = 1. Requires r >= 2 (r = 2 is the trivial limit E = 1).
EmbeddingResult embedding_constant(const TriMesh& mesh, double r, const EmbeddingOptions& options = {});

struct EmbeddingCertificate {
  int samples = 0;
  int initial_violations = 0;
  int final_violations = 0;
  double E_before = 0.0;
  double E_after = 0.0;
};

/// Tests ||v||_r <= E ||v||_W on random nodal vectors; every violator seeds a
/// new ascent whose probe is added to `result` (E can only grow).
EmbeddingCertificate certify_embedding(const TriMesh& mesh, EmbeddingResult& result, int samples,
                                       std::uint64_t seed);

struct ConstantsReport {
  double nu = 0.0;
  double mu_sup = 0.0;
  double area = 0.0;
  PoincareResult poincare;
  std::optional<EmbeddingResult> embedding;
};

ConstantsReport compute_constants(const TriMesh& mesh, const CoefficientField& mu, std::optional<double> r,
                                  const PoincareOptions& poincare = {}, const EmbeddingOptions& embedding = {});

/// Nodal interpolation of `coarse` onto the vertices of `fine`.
Vector interpolate_to(const FeFunction& coarse, const TriMesh& fine);

} // namespace stampacchia
