#include "stampacchia/bounds.hpp"
#include "stampacchia/constants.hpp"
#include "stampacchia/errors.hpp"
#include "stampacchia/rng.hpp"
#include "stampacchia/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace stampacchia;

namespace {

constexpr double kPi = std::numbers::pi;

Vector random_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(gen);
  return v;
}

NeumannFunctional cosine_data(const TriMesh& mesh) {
  std::vector<double> f0(mesh.num_triangles());
  for (std::size_t e = 0; e < f0.size(); ++e) f0[e] = kPi * kPi * std::cos(kPi * mesh.centroid(e).x);
  return NeumannFunctional::boundary(f0, std::vector<double>(mesh.boundary_edges().size(), 0.0));
}

double relative_linf_error(const FeFunction& u) {
  double err = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    err = std::max(err, std::abs(u.values()[static_cast<Eigen::Index>(i)] - std::cos(kPi * u.mesh().vertices()[i].x)));
  return err;
}

} // namespace

TEST_CASE("mean-zero projection") {
  const auto mesh = share(generate_rectangle(8, 8, 1, 1));
  CHECK(project_mean_zero(FeFunction::constant(mesh, 7.0)).values().lpNorm<Eigen::Infinity>() <= 1e-14);
  auto gen = substream(1, "projection");
  const FeFunction u(mesh, random_vector(mesh->num_vertices(), gen));
  const auto p1 = project_mean_zero(u);
  const auto p2 = project_mean_zero(p1);
  CHECK((p1.values() - p2.values()).lpNorm<Eigen::Infinity>() <= 1e-15);
  const auto x = FeFunction::interpolate(mesh, [](const Point& p) { return p.x; });
  const auto px = project_mean_zero(x);
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i)
    CHECK(px.values()[static_cast<Eigen::Index>(i)] == doctest::Approx(mesh->vertices()[i].x - 0.5).epsilon(1e-14));
}

TEST_CASE("zero data gives the zero solution without iterating") {
  const auto mesh = share(generate_lshape(3));
  const auto rep = solve_neumann(mesh, CoefficientField::identity(*mesh), NeumannFunctional::zero(*mesh));
  CHECK(rep.iterations == 0);
  CHECK(rep.u.values().lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("analytic cosine solution") {
  const auto mesh = share(generate_rectangle(64, 64, 1, 1));
  const auto rep = solve_neumann(mesh, CoefficientField::identity(*mesh), cosine_data(*mesh));
  CHECK(relative_linf_error(rep.u) <= 1e-2);
  CHECK(std::abs(rep.u.mean()) <= 1e-10 * rep.norm_2);
  CHECK(rep.relative_residual <= 1e-10);
}

TEST_CASE("incompatible data is rejected") {
  const auto mesh = share(generate_rectangle(8, 8, 1, 1));
  const auto t = NeumannFunctional::boundary(std::vector<double>(mesh->num_triangles(), 1.0),
                                             std::vector<double>(mesh->boundary_edges().size(), 0.0));
  CHECK_THROWS_AS(solve_neumann(mesh, CoefficientField::identity(*mesh), t), IncompatibleFunctional);
}

TEST_CASE("operator application") {
  const auto mesh = share(generate_lshape(4));
  const auto mu = CoefficientField::checkerboard(*mesh, 9.0);
  CHECK(apply_operator(*mesh, mu, FeFunction::constant(mesh, 1.0)).lpNorm<Eigen::Infinity>() == 0.0);
  auto gen = substream(4, "operator");
  for (int s = 0; s < 50; ++s) {
    const FeFunction u(mesh, random_vector(mesh->num_vertices(), gen));
    const double g = grad_lp_norm(u, 2.0);
    CHECK(apply_operator(*mesh, mu, u).dot(u.values()) >= mu.nu() * g * g * (1 - 1e-12));
  }
  auto dgen = substream(5, "operator");
  const auto t = random_gradient_functional(*mesh, 8.0, dgen);
  const auto rep = solve_neumann(mesh, mu, t);
  const Vector b = assemble_load(*mesh, t);
  CHECK((apply_operator(*mesh, mu, rep.u) - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("dual norm") {
  const auto mesh = share(generate_rectangle(10, 6, 1.5, 1.0));
  CHECK(dual_norm_2(*mesh, NeumannFunctional::zero(*mesh)) == 0.0);
  auto gen = substream(6, "dual");
  const FeFunction w(mesh, random_vector(mesh->num_vertices(), gen));
  const Vector b = (assemble_mass(*mesh) + assemble_stiffness_identity(*mesh)) * w.values();
  CHECK(dual_norm_2(*mesh, b) == doctest::Approx(w12_norm(w)).epsilon(1e-12));
  const auto t = random_gradient_functional(*mesh, 4.0, gen);
  CHECK(dual_norm_2(*mesh, t.scaled(5.0)) == doctest::Approx(5.0 * dual_norm_2(*mesh, t)).epsilon(1e-13));
}

TEST_CASE("uniqueness on the quotient and gauge independence") {
  const auto mesh = share(generate_lshape(6));
  const auto mu = CoefficientField::checkerboard(*mesh, 25.0);
  auto gen = substream(7, "uniqueness");
  const auto t = random_gradient_functional(*mesh, 8.0, gen);
  const auto ref = solve_neumann(mesh, mu, t);
  for (int s = 0; s < 5; ++s) {
    Vector x0 = random_vector(mesh->num_vertices(), gen) * 10.0;
    x0.array() += 100.0;  // arbitrary gauge
    const auto rep = solve_neumann(mesh, mu, t, {}, x0);
    CHECK(w12_norm(rep.u.with_values(rep.u.values() - ref.u.values())) <= 1e-8 * w12_norm(ref.u));
    CHECK(std::abs(rep.u.mean()) <= 1e-10 * rep.norm_2);
  }
  // Constants are in the kernel bit-for-bit: on dyadic values the shift is
  // exact, and residuals ignore the gauge.
  const Vector dyadic = (ref.u.values() * 0x1p30).array().round() * 0x1p-30;
  const Vector shifted = dyadic.array() + 3.0;
  CHECK(apply_operator(*mesh, mu, ref.u.with_values(shifted)) == apply_operator(*mesh, mu, ref.u.with_values(dyadic)));
}

TEST_CASE("Galerkin orthogonality") {
  const auto mesh = share(generate_rectangle(16, 16, 1, 1));
  const auto mu = CoefficientField::checkerboard(*mesh, 4.0);
  auto gen = substream(8, "galerkin");
  const auto t = random_gradient_functional(*mesh, 8.0, gen);
  const auto rep = solve_neumann(mesh, mu, t);
  const Vector au = apply_operator(*mesh, mu, rep.u);
  const Vector b = assemble_load(*mesh, t);
  for (int s = 0; s < 100; ++s) {
    const Vector v = random_vector(mesh->num_vertices(), gen);
    CHECK(std::abs((au - b).dot(v)) <= 1e-9 * b.norm() * v.norm());
  }
}

TEST_CASE("continuity constant with the discrete Poincare constant") {
  const auto mesh = share(generate_rectangle(24, 24, 1, 1));
  const double cp = poincare_constant(*mesh).c_poincare;
  auto gen = substream(9, "continuity");
  for (double contrast : {1.0, 5.0, 50.0}) {
    const auto mu = CoefficientField::checkerboard(*mesh, contrast);
    for (int s = 0; s < 4; ++s) {
      const auto t = random_gradient_functional(*mesh, 4.0, gen);
      const auto rep = solve_neumann(mesh, mu, t);
      CHECK(w12_norm(rep.u) <= (1 + cp * cp) * rep.dual_norm_2 / mu.nu());
    }
  }
  // The first eigenfunction nearly attains the constant, so the square root
  // of (1 + c_P^2) would be too small.
  const auto rep = solve_neumann(mesh, CoefficientField::identity(*mesh), cosine_data(*mesh));
  const double ratio = w12_norm(rep.u) / rep.dual_norm_2;
  CHECK(ratio <= 1 + cp * cp);
  CHECK(ratio >= 0.99 * (1 + cp * cp));
  CHECK(ratio > std::sqrt(1 + cp * cp));
}

TEST_CASE("non-symmetric coefficients and Jacobi scaling") {
  const auto mesh = share(generate_rectangle(16, 16, 1, 1));
  std::vector<Matrix2> m(mesh->num_triangles());
  for (std::size_t e = 0; e < m.size(); ++e) {
    const double s = (e % 3 == 0) ? 0.8 : -0.4;
    m[e] << 2.0, s, -s, 1.5;
  }
  const CoefficientField mu(m);
  CHECK_FALSE(mu.symmetric());
  auto gen = substream(10, "nonsym");
  const auto t = random_gradient_functional(*mesh, 8.0, gen);
  const auto rep = solve_neumann(mesh, mu, t);
  const Vector b = assemble_load(*mesh, t);
  CHECK((apply_operator(*mesh, mu, rep.u) - b).norm() <= 1e-9 * b.norm());

  const auto sym = CoefficientField::checkerboard(*mesh, 30.0);
  SolverOptions plain, jac;
  jac.jacobi = true;
  const auto a = solve_neumann(mesh, sym, t, plain);
  const auto c = solve_neumann(mesh, sym, t, jac);
  CHECK(w12_norm(a.u.with_values(a.u.values() - c.u.values())) <= 1e-8 * w12_norm(a.u));
}

TEST_CASE("iteration cap raises NonConvergence") {
  const auto mesh = share(generate_rectangle(16, 16, 1, 1));
  auto gen = substream(12, "cap");
  SolverOptions opt;
  opt.max_iterations = 2;
  CHECK_THROWS_AS(
      solve_neumann(mesh, CoefficientField::identity(*mesh), random_gradient_functional(*mesh, 8.0, gen), opt),
      NonConvergence);
}

TEST_CASE("reported norms") {
  const auto mesh = share(generate_rectangle(12, 12, 1, 1));
  auto gen = substream(13, "norms");
  SolverOptions opt;
  opt.p_norms = {2.0, 4.0};
  const auto rep = solve_neumann(mesh, CoefficientField::identity(*mesh), random_gradient_functional(*mesh, 8.0, gen), opt);
  CHECK(rep.norm_inf == rep.u.max_abs());
  REQUIRE(rep.grad_norm_p.size() == 2);
  CHECK(rep.grad_norm_p[0].second == doctest::Approx(rep.grad_norm_2).epsilon(1e-14));
  CHECK(rep.grad_norm_p[1].second == grad_lp_norm(rep.u, 4.0));
}
