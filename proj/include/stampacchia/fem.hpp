#pragma once

#include "stampacchia/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace stampacchia {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

using MeshPtr = std::shared_ptr<const TriMesh>;

inline MeshPtr share(TriMesh mesh) { return std::make_shared<const TriMesh>(std::move(mesh)); }

/// Constant gradients of the three P1 basis functions on element e.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vector2, 3> grad_phi;
};

ElementGeometry element_geometry(const TriMesh& mesh, std::size_t e);

/// Symmetric 6-point rule on the reference triangle, exact for degree 4.
struct TriangleQuadrature {
  static constexpr int size = 6;
  std::array<std::array<double, 3>, size> barycentric;
  std::array<double, size> weight;  ///< sums to 1
};

const TriangleQuadrature& six_point_rule();

/// Per-element 2x2 coefficient matrix with certified ellipticity and bound.
class CoefficientField {
public:
  /// Certifies nu and mu_sup from the matrices; throws NotElliptic.
  explicit CoefficientField(std::vector<Matrix2> mu);

  static CoefficientField identity(const TriMesh& mesh);
  static CoefficientField constant(const TriMesh& mesh, const Matrix2& mu);
  /// diag(1,1) and diag(contrast,contrast) alternating on a cells x cells
  /// macro grid over the bounding box; the cell of an element is the cell of
  /// its centroid and cell (0,0) carries the identity.
  static CoefficientField checkerboard(const TriMesh& mesh, double contrast, int cells = 4);

  const std::vector<Matrix2>& matrices() const noexcept { return mu_; }
  const Matrix2& operator[](std::size_t e) const { return mu_[e]; }
  std::size_t size() const noexcept { return mu_.size(); }
  double nu() const noexcept { return nu_; }
  double mu_sup() const noexcept { return mu_sup_; }
  bool symmetric() const noexcept;

  CoefficientField scaled(double factor) const;

private:
  std::vector<Matrix2> mu_;
  double nu_ = 0.0;
  double mu_sup_ = 0.0;
};

/// Continuous piecewise-linear function given by its nodal values.
class FeFunction {
public:
  FeFunction(MeshPtr mesh, Vector values);

  static FeFunction constant(MeshPtr mesh, double value);
  static FeFunction interpolate(MeshPtr mesh, const std::function<double(const Point&)>& f);

  const TriMesh& mesh() const noexcept { return *mesh_; }
  const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
  const Vector& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

  /// Element gradient from nodal differences, so adding a constant to every
  /// nodal value leaves it unchanged whenever the differences are exact.
  Vector2 gradient(std::size_t e) const;

  double integral() const;
  double mean() const;
  double max_abs() const;

  FeFunction with_values(Vector values) const { return FeFunction(mesh_, std::move(values)); }
  FeFunction scaled(double factor) const { return with_values(values_ * factor); }

private:
  MeshPtr mesh_;
  Vector values_;
};

/// Right-hand side T of the Neumann problem.
///
/// Gradient form:  T(v) = kappa * int v + sum_j int f_j d_j v   (f element-constant)
/// Boundary form:  T(v) = int f0 v + int_{boundary} g v          (f0 per element, g per edge)
struct NeumannFunctional {
  enum class Form { Gradient, Boundary };

  Form form = Form::Gradient;
  double kappa = 0.0;
  std::vector<Vector2> f;
  std::vector<double> f0;
  std::vector<double> g;
  double q_exponent = 2.0;

  static NeumannFunctional gradient(std::vector<Vector2> f, double kappa = 0.0, double q = 2.0);
  static NeumannFunctional boundary(std::vector<double> f0, std::vector<double> g, double q = 2.0);
  static NeumannFunctional zero(const TriMesh& mesh);

  /// T(v) evaluated directly from the data.
  double apply(const FeFunction& v) const;

  /// sum_j ||f_j||_q^2 for the gradient form.
  double f_norm_sq(const TriMesh& mesh, double q) const;
  double f_norm_sq(const TriMesh& mesh) const { return f_norm_sq(mesh, q_exponent); }

  /// Scale used for the compatibility test |T(1)| <= tol * scale.
  double compatibility_scale(const TriMesh& mesh) const;

  NeumannFunctional scaled(double factor) const;
};

SparseMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientField& mu);
SparseMatrix assemble_stiffness_identity(const TriMesh& mesh);
SparseMatrix assemble_mass(const TriMesh& mesh);

/// Local matrices, exposed for testing.
Eigen::Matrix3d local_stiffness(const TriMesh& mesh, std::size_t e, const Matrix2& mu);
Eigen::Matrix3d local_mass(const TriMesh& mesh, std::size_t e);

/// b[i] = T(phi_i).
Vector assemble_load(const TriMesh& mesh, const NeumannFunctional& T);

/// M * 1, i.e. the integrals of the basis functions.
Vector basis_integrals(const TriMesh& mesh);

/// ||u||_p. p = inf uses nodal values, p = 2 is exact, other p use the
/// six-point rule on |u|^p.
double lp_norm(const FeFunction& u, double p);
/// ||grad u||_p with the Euclidean pointwise norm; exact (gradients are
/// element-constant).
double grad_lp_norm(const FeFunction& u, double p);
double w12_norm(const FeFunction& u);
/// ||f||_p of an element-constant scalar field.
double elementwise_lp_norm(const TriMesh& mesh, const std::vector<double>& values, double p);

/// ||u - exact||_2 by the six-point rule.
double l2_error(const FeFunction& u, const std::function<double(const Point&)>& exact);

/// Sparse matrix as `i j value` lines.
void write_matrix_coo(std::ostream& os, const SparseMatrix& a);

} // namespace stampacchia
