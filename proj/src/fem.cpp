#include "stampacchia/fem.hpp"

#include "stampacchia/constants.hpp"
#include "stampacchia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace stampacchia {

ElementGeometry element_geometry(const TriMesh& mesh, std::size_t e) {
  const auto& t = mesh.triangles()[e];
  const auto& v = mesh.vertices();
  const Point& p0 = v[t[0]];
  const Point& p1 = v[t[1]];
  const Point& p2 = v[t[2]];
  ElementGeometry g;
  g.area = mesh.element_areas()[e];
  const double two_a = 2.0 * g.area;
  g.grad_phi[0] = Vector2(p1.y - p2.y, p2.x - p1.x) / two_a;
  g.grad_phi[1] = Vector2(p2.y - p0.y, p0.x - p2.x) / two_a;
  g.grad_phi[2] = Vector2(p0.y - p1.y, p1.x - p0.x) / two_a;
  return g;
}

const TriangleQuadrature& six_point_rule() {
  static const TriangleQuadrature rule = [] {
    constexpr double a1 = 0.44594849091596488631832925388305;
    constexpr double w1 = 0.22338158967801146569500700843312;
    constexpr double a2 = 0.091576213509770743459571463402202;
    constexpr double w2 = 0.10995174365532186763832632490021;
    TriangleQuadrature q;
    q.barycentric = {{{a1, a1, 1.0 - 2.0 * a1},
                      {a1, 1.0 - 2.0 * a1, a1},
                      {1.0 - 2.0 * a1, a1, a1},
                      {a2, a2, 1.0 - 2.0 * a2},
                      {a2, 1.0 - 2.0 * a2, a2},
                      {1.0 - 2.0 * a2, a2, a2}}};
    q.weight = {w1, w1, w1, w2, w2, w2};
    return q;
  }();
  return rule;
}

// --- CoefficientField ---------------------------------------------------------

CoefficientField::CoefficientField(std::vector<Matrix2> mu) : mu_(std::move(mu)) {
  const auto c = ellipticity_constants(mu_);
  nu_ = c.nu;
  mu_sup_ = c.mu_sup;
}

CoefficientField CoefficientField::identity(const TriMesh& mesh) {
  return constant(mesh, Matrix2::Identity());
}

CoefficientField CoefficientField::constant(const TriMesh& mesh, const Matrix2& mu) {
  return CoefficientField(std::vector<Matrix2>(mesh.num_triangles(), mu));
}

CoefficientField CoefficientField::checkerboard(const TriMesh& mesh, double contrast, int cells) {
  if (!(contrast >= 1.0)) throw PreconditionViolation("checkerboard contrast must be >= 1");
  if (cells < 1) throw PreconditionViolation("checkerboard needs at least one macro cell");
  const auto box = mesh.bounding_box();
  const double w = box[2] - box[0];
  const double h = box[3] - box[1];
  std::vector<Matrix2> mu;
  mu.reserve(mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const Point c = mesh.centroid(e);
    const int i = std::clamp(static_cast<int>((c.x - box[0]) / w * cells), 0, cells - 1);
    const int j = std::clamp(static_cast<int>((c.y - box[1]) / h * cells), 0, cells - 1);
    mu.push_back((i + j) % 2 == 0 ? Matrix2::Identity() : Matrix2(contrast * Matrix2::Identity()));
  }
  return CoefficientField(std::move(mu));
}

bool CoefficientField::symmetric() const noexcept {
  return std::all_of(mu_.begin(), mu_.end(), [](const Matrix2& m) { return m(0, 1) == m(1, 0); });
}

CoefficientField CoefficientField::scaled(double factor) const {
  std::vector<Matrix2> mu = mu_;
  for (auto& m : mu) m *= factor;
  return CoefficientField(std::move(mu));
}

// --- FeFunction -----------------------------------------------------------------

FeFunction::FeFunction(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw PreconditionViolation("FeFunction needs a mesh");
  if (static_cast<std::size_t>(values_.size()) != mesh_->num_vertices())
    throw DimensionMismatch("nodal vector length differs from vertex count");
}

FeFunction FeFunction::constant(MeshPtr mesh, double value) {
  const auto n = static_cast<Eigen::Index>(mesh->num_vertices());
  return FeFunction(std::move(mesh), Vector::Constant(n, value));
}

FeFunction FeFunction::interpolate(MeshPtr mesh, const std::function<double(const Point&)>& f) {
  Vector v(static_cast<Eigen::Index>(mesh->num_vertices()));
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i) v[static_cast<Eigen::Index>(i)] = f(mesh->vertices()[i]);
  return FeFunction(std::move(mesh), std::move(v));
}

Vector2 FeFunction::gradient(std::size_t e) const {
  const auto& t = mesh_->triangles()[e];
  const auto g = element_geometry(*mesh_, e);
  return (values_[t[1]] - values_[t[0]]) * g.grad_phi[1] + (values_[t[2]] - values_[t[0]]) * g.grad_phi[2];
}

double FeFunction::integral() const {
  double s = 0.0;
  const auto& tris = mesh_->triangles();
  for (std::size_t e = 0; e < tris.size(); ++e) {
    const auto& t = tris[e];
    s += mesh_->element_areas()[e] * (values_[t[0]] + values_[t[1]] + values_[t[2]]) / 3.0;
  }
  return s;
}

double FeFunction::mean() const { return integral() / mesh_->total_area(); }

double FeFunction::max_abs() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

// --- NeumannFunctional -------------------------------------------------------------

NeumannFunctional NeumannFunctional::gradient(std::vector<Vector2> f, double kappa, double q) {
  NeumannFunctional T;
  T.form = Form::Gradient;
  T.f = std::move(f);
  T.kappa = kappa;
  T.q_exponent = q;
  return T;
}

NeumannFunctional NeumannFunctional::boundary(std::vector<double> f0, std::vector<double> g, double q) {
  NeumannFunctional T;
  T.form = Form::Boundary;
  T.f0 = std::move(f0);
  T.g = std::move(g);
  T.q_exponent = q;
  return T;
}

NeumannFunctional NeumannFunctional::zero(const TriMesh& mesh) {
  return gradient(std::vector<Vector2>(mesh.num_triangles(), Vector2::Zero()));
}

namespace {

void check_data(const TriMesh& mesh, const NeumannFunctional& T) {
  if (T.form == NeumannFunctional::Form::Gradient) {
    if (T.f.size() != mesh.num_triangles())
      throw DimensionMismatch("gradient-form data needs one vector per element");
  } else {
    if (T.f0.size() != mesh.num_triangles())
      throw DimensionMismatch("boundary-form f0 needs one value per element");
    if (T.g.size() != mesh.boundary_edges().size())
      throw DimensionMismatch("boundary-form g needs one value per boundary edge");
  }
}

} // namespace

double NeumannFunctional::apply(const FeFunction& v) const {
  const TriMesh& mesh = v.mesh();
  check_data(mesh, *this);
  const auto& vals = v.values();
  double s = 0.0;
  if (form == Form::Gradient) {
    s += kappa * v.integral();
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e)
      s += mesh.element_areas()[e] * f[e].dot(v.gradient(e));
  } else {
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
      const auto& t = mesh.triangles()[e];
      s += f0[e] * mesh.element_areas()[e] * (vals[t[0]] + vals[t[1]] + vals[t[2]]) / 3.0;
    }
    const auto& edges = mesh.boundary_edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
      s += g[k] * edges[k].length * 0.5 * (vals[edges[k].a] + vals[edges[k].b]);
  }
  return s;
}

double NeumannFunctional::f_norm_sq(const TriMesh& mesh, double q) const {
  if (form != Form::Gradient) throw PreconditionViolation("f_norm_sq needs a gradient-form functional");
  check_data(mesh, *this);
  double total = 0.0;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> fj(f.size());
    for (std::size_t e = 0; e < f.size(); ++e) fj[e] = f[e][j];
    const double n = elementwise_lp_norm(mesh, fj, q);
    total += n * n;
  }
  return total;
}

double NeumannFunctional::compatibility_scale(const TriMesh& mesh) const {
  check_data(mesh, *this);
  double s = 0.0;
  if (form == Form::Gradient) {
    s += std::abs(kappa) * mesh.total_area();
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
      const auto geo = element_geometry(mesh, e);
      for (const auto& gp : geo.grad_phi) s += geo.area * std::abs(f[e].dot(gp));
    }
  } else {
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) s += mesh.element_areas()[e] * std::abs(f0[e]);
    for (std::size_t k = 0; k < g.size(); ++k) s += mesh.boundary_edges()[k].length * std::abs(g[k]);
  }
  return s;
}

NeumannFunctional NeumannFunctional::scaled(double factor) const {
  NeumannFunctional T = *this;
  T.kappa *= factor;
  for (auto& x : T.f) x *= factor;
  for (auto& x : T.f0) x *= factor;
  for (auto& x : T.g) x *= factor;
  return T;
}

// --- assembly --------------------------------------------------------------------

Eigen::Matrix3d local_stiffness(const TriMesh& mesh, std::size_t e, const Matrix2& mu) {
  const auto g = element_geometry(mesh, e);
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k(i, j) = g.area * (mu * g.grad_phi[j]).dot(g.grad_phi[i]);
  return k;
}

Eigen::Matrix3d local_mass(const TriMesh& mesh, std::size_t e) {
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (mesh.element_areas()[e] / 12.0);
}

namespace {

template <class Local>
SparseMatrix assemble(const TriMesh& mesh, Local local) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    const Eigen::Matrix3d a = local(e);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(t[i], t[j], a(i, j));
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

} // namespace

SparseMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientField& mu) {
  if (mu.size() != mesh.num_triangles())
    throw DimensionMismatch("coefficient field has " + std::to_string(mu.size()) + " elements, mesh has " +
                            std::to_string(mesh.num_triangles()));
  return assemble(mesh, [&](std::size_t e) { return local_stiffness(mesh, e, mu[e]); });
}

SparseMatrix assemble_stiffness_identity(const TriMesh& mesh) {
  return assemble(mesh, [&](std::size_t e) { return local_stiffness(mesh, e, Matrix2::Identity()); });
}

SparseMatrix assemble_mass(const TriMesh& mesh) {
  return assemble(mesh, [&](std::size_t e) { return local_mass(mesh, e); });
}

Vector assemble_load(const TriMesh& mesh, const NeumannFunctional& T) {
  check_data(mesh, T);
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    const auto geo = element_geometry(mesh, e);
    for (int i = 0; i < 3; ++i) {
      if (T.form == NeumannFunctional::Form::Gradient)
        b[t[i]] += T.kappa * geo.area / 3.0 + geo.area * T.f[e].dot(geo.grad_phi[i]);
      else
        b[t[i]] += T.f0[e] * geo.area / 3.0;
    }
  }
  if (T.form == NeumannFunctional::Form::Boundary) {
    const auto& edges = mesh.boundary_edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const double half = 0.5 * T.g[k] * edges[k].length;
      b[edges[k].a] += half;
      b[edges[k].b] += half;
    }
  }
  return b;
}

Vector basis_integrals(const TriMesh& mesh) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e)
    for (int i : mesh.triangles()[e]) w[i] += mesh.element_areas()[e] / 3.0;
  return w;
}

// --- norms ----------------------------------------------------------------------------

double lp_norm(const FeFunction& u, double p) {
  if (!(p >= 1.0)) throw PreconditionViolation("lp_norm needs p >= 1");
  if (std::isinf(p)) return u.max_abs();
  const TriMesh& mesh = u.mesh();
  const auto& v = u.values();
  double s = 0.0;
  if (p == 2.0) {
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
      const auto& t = mesh.triangles()[e];
      const Eigen::Vector3d ue(v[t[0]], v[t[1]], v[t[2]]);
      s += ue.dot(local_mass(mesh, e) * ue);
    }
    return std::sqrt(std::max(s, 0.0));
  }
  const auto& rule = six_point_rule();
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    double local = 0.0;
    for (int q = 0; q < TriangleQuadrature::size; ++q) {
      const auto& l = rule.barycentric[q];
      const double val = l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]];
      local += rule.weight[q] * std::pow(std::abs(val), p);
    }
    s += mesh.element_areas()[e] * local;
  }
  return std::pow(s, 1.0 / p);
}

double grad_lp_norm(const FeFunction& u, double p) {
  if (!(p >= 1.0)) throw PreconditionViolation("grad_lp_norm needs p >= 1");
  const TriMesh& mesh = u.mesh();
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) m = std::max(m, u.gradient(e).norm());
    return m;
  }
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const double g = u.gradient(e).norm();
    s += mesh.element_areas()[e] * (p == 2.0 ? g * g : std::pow(g, p));
  }
  return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

double w12_norm(const FeFunction& u) {
  const double a = lp_norm(u, 2.0);
  const double b = grad_lp_norm(u, 2.0);
  return std::sqrt(a * a + b * b);
}

double elementwise_lp_norm(const TriMesh& mesh, const std::vector<double>& values, double p) {
  if (!(p >= 1.0)) throw PreconditionViolation("elementwise_lp_norm needs p >= 1");
  if (values.size() != mesh.num_triangles()) throw DimensionMismatch("element field length differs from element count");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) s += mesh.element_areas()[e] * std::pow(std::abs(values[e]), p);
  return std::pow(s, 1.0 / p);
}

double l2_error(const FeFunction& u, const std::function<double(const Point&)>& exact) {
  const TriMesh& mesh = u.mesh();
  const auto& v = u.values();
  const auto& verts = mesh.vertices();
  const auto& rule = six_point_rule();
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    double local = 0.0;
    for (int q = 0; q < TriangleQuadrature::size; ++q) {
      const auto& l = rule.barycentric[q];
      const Point x{l[0] * verts[t[0]].x + l[1] * verts[t[1]].x + l[2] * verts[t[2]].x,
                    l[0] * verts[t[0]].y + l[1] * verts[t[1]].y + l[2] * verts[t[2]].y};
      const double d = l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]] - exact(x);
      local += rule.weight[q] * d * d;
    }
    s += mesh.element_areas()[e] * local;
  }
  return std::sqrt(s);
}

void write_matrix_coo(std::ostream& os, const SparseMatrix& a) {
  char buf[96];
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()), static_cast<long>(it.col()),
                    it.value());
      os << buf;
    }
}

} // namespace stampacchia
