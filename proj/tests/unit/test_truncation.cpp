#include "stampacchia/errors.hpp"
#include "stampacchia/rng.hpp"
#include "stampacchia/solver.hpp"
#include "stampacchia/truncation.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace stampacchia;

namespace {

struct P {
  double x, y, v;
};

// Sutherland-Hodgman clip of a triangle against {v > k}, with v linear.
double clipped_area(const std::array<P, 3>& tri, double k) {
  std::vector<P> out;
  for (int i = 0; i < 3; ++i) {
    const P& a = tri[i];
    const P& b = tri[(i + 1) % 3];
    const bool ina = a.v > k, inb = b.v > k;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double t = (k - a.v) / (b.v - a.v);
      out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), k});
    }
  }
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& a = out[i];
    const auto& b = out[(i + 1) % out.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

double oracle_measure(const FeFunction& u, double k) {
  const auto& m = u.mesh();
  double s = 0.0;
  for (const auto& t : m.triangles()) {
    std::array<P, 3> pos, neg;
    for (int i = 0; i < 3; ++i) {
      const auto& p = m.vertices()[t[i]];
      const double v = u.values()[t[i]];
      pos[i] = {p.x, p.y, v};
      neg[i] = {p.x, p.y, -v};
    }
    s += clipped_area(pos, k) + clipped_area(neg, k);
  }
  return s;
}

Vector random_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(gen);
  return v;
}

} // namespace

TEST_CASE("truncation examples") {
  const TriMesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  const auto mesh = share(m);
  Vector v(3);
  v << -2, 0, 2;
  const FeFunction u(mesh, v);
  const auto z = truncate(u, 1.0);
  CHECK(z.values()[0] == -1.0);
  CHECK(z.values()[1] == 0.0);
  CHECK(z.values()[2] == 1.0);
  CHECK(truncate(u, 0.0).values() == u.values());
  CHECK(truncate(u, 2.0).values().lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(truncate(u, 5.0).values().lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_THROWS_AS(truncate(u, -0.1), PreconditionViolation);
}

TEST_CASE("level-set measure examples") {
  const auto mesh = share(generate_rectangle(8, 8, 1, 1));
  const auto two = FeFunction::constant(mesh, 2.0);
  CHECK(level_set_measure(two, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(level_set_measure(two, 2.0) == 0.0);
  const auto x = FeFunction::interpolate(mesh, [](const Point& p) { return p.x; });
  CHECK(level_set_measure(x, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(level_set_measure(x, 0.25) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("level-set measure agrees with polygon clipping") {
  const auto mesh = share(generate_lshape(5));
  auto gen = substream(21, "clip");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 30; ++s) {
    const FeFunction u(mesh, random_vector(mesh->num_vertices(), gen));
    for (int j = 0; j < 10; ++j) {
      const double k = unif(gen) * u.max_abs();
      CHECK(level_set_measure(u, k) == doctest::Approx(oracle_measure(u, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("superlevel area edge cases") {
  CHECK(superlevel_area({1, 1, 1}, 0.5, 0.0) == 0.5);
  CHECK(superlevel_area({1, 1, 1}, 0.5, 1.0) == 0.0);
  CHECK(superlevel_area({0, 0, 2}, 1.0, 1.0) == doctest::Approx(0.25));
  CHECK(superlevel_area({2, 2, 0}, 1.0, 1.0) == doctest::Approx(0.75));
  // Nonincreasing in k even across nearly equal vertex values.
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double k = 1.0 + (i - 500) * 1e-15;
    const double a = superlevel_area({1.0, 1.0 + 1e-13, 1.0 - 1e-13}, 1.0, k);
    CHECK(a <= prev);
    prev = a;
  }
}

TEST_CASE("truncation invariants on random functions") {
  const auto mesh = share(generate_rectangle(10, 10, 1, 1));
  auto gen = substream(22, "invariants");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < 40; ++s) {
    // Dyadic values make the subtractions in the truncation exact.
    const Vector raw = random_vector(mesh->num_vertices(), gen);
    const Vector v = (raw * 0x1p20).array().round() * 0x1p-20;
    const FeFunction u(mesh, v);
    CHECK(truncate(u, 0.0).values() == u.values());
    std::vector<double> ks;
    for (int j = 0; j < 12; ++j) ks.push_back(std::round(unif(gen) * u.max_abs() * 0x1p20) * 0x1p-20);
    std::sort(ks.begin(), ks.end());
    double prev_measure = level_set_measure(u, 0.0);
    for (std::size_t a = 0; a < ks.size(); ++a) {
      const auto za = truncate(u, ks[a]);
      for (std::size_t b = a; b < ks.size(); ++b) {
        const auto zb = truncate(u, ks[b]);
        CHECK((za.values() - zb.values()).lpNorm<Eigen::Infinity>() <= ks[b] - ks[a]);
      }
      const double meas = level_set_measure(u, ks[a]);
      CHECK(meas <= prev_measure);
      prev_measure = meas;
      for (std::size_t e = 0; e < mesh->num_triangles(); ++e) {
        const auto& t = mesh->triangles()[e];
        const bool above = v[t[0]] > ks[a] && v[t[1]] > ks[a] && v[t[2]] > ks[a];
        const bool below = v[t[0]] < -ks[a] && v[t[1]] < -ks[a] && v[t[2]] < -ks[a];
        if (above || below) CHECK(za.gradient(e) == u.gradient(e));
      }
    }
    CHECK(level_set_measure(u, u.max_abs()) == 0.0);
  }
}

TEST_CASE("norm of the truncation is nonincreasing and Lipschitz in k") {
  const auto mesh = share(generate_lshape(4));
  auto gen = substream(23, "lipschitz");
  const auto u = project_mean_zero(FeFunction(mesh, random_vector(mesh->num_vertices(), gen)));
  const auto scan = gamma_constant(u, 128);
  const double root_area = std::sqrt(mesh->total_area());
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    const auto& a = scan.rows[i - 1];
    const auto& b = scan.rows[i];
    CHECK(b.norm2_zeta <= a.norm2_zeta * (1 + 1e-14));
    CHECK(a.norm2_zeta - b.norm2_zeta <= (b.k - a.k) * root_area * (1 + 1e-12));
    CHECK(b.measure <= a.measure);
  }
}

TEST_CASE("gamma on x - 1/2 against a dense scan") {
  const auto mesh = share(generate_rectangle(16, 16, 1, 1));
  const auto u = FeFunction::interpolate(mesh, [](const Point& p) { return p.x - 0.5; });
  const auto scan = gamma_constant(u);
  double best = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto row = truncation_row(u, 0.5 * i / 10000.0);
    if (row.flag == ScanFlag::Ok) best = std::max(best, row.ratio);
  }
  CHECK(scan.gamma == doctest::Approx(best).epsilon(0.01));
  CHECK(scan.gamma <= best * (1 + 1e-12));
  CHECK(scan.violations() == 0);
  double scan_max = 0.0;
  for (const auto& r : scan.rows)
    if (r.flag == ScanFlag::Ok) scan_max = std::max(scan_max, r.ratio);
  CHECK(scan.gamma == scan_max);
}

TEST_CASE("gamma is scale invariant") {
  const auto mesh = share(generate_lshape(4));
  auto gen = substream(24, "scale");
  const auto u = project_mean_zero(FeFunction(mesh, random_vector(mesh->num_vertices(), gen)));
  const auto u5 = u.scaled(5.0);
  std::vector<double> ks, ks5;
  for (int i = 0; i < 64; ++i) {
    ks.push_back(u.max_abs() * i / 64.0);
    ks5.push_back(5.0 * ks.back());
  }
  const auto a = scan_levels(u, ks);
  const auto b = scan_levels(u5, ks5);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(b.rows[i].ratio == doctest::Approx(a.rows[i].ratio).epsilon(1e-12));
  CHECK(b.gamma == doctest::Approx(a.gamma).epsilon(1e-12));
  CHECK(gamma_constant(u5).gamma == doctest::Approx(gamma_constant(u).gamma).epsilon(1e-12));
}

TEST_CASE("two-level pattern has finite ratios") {
  const auto mesh = share(generate_rectangle(8, 8, 1, 1));
  Vector v(static_cast<Eigen::Index>(mesh->num_vertices()));
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i) v[static_cast<Eigen::Index>(i)] = (i % 2 == 0) ? 1.0 : -1.0;
  const auto u = project_mean_zero(FeFunction(mesh, v));
  const auto scan = gamma_constant(u);
  for (const auto& r : scan.rows)
    if (r.flag == ScanFlag::Ok) CHECK(std::isfinite(r.ratio));
  CHECK(std::isfinite(scan.gamma));
  CHECK(scan.violations() == 0);
}

TEST_CASE("mean-zero scans have no flagged rows") {
  auto gen = substream(25, "flags");
  for (const auto& m : {generate_rectangle(12, 12, 1, 1), generate_lshape(5), generate_cusp(2.0, 12)}) {
    const auto mesh = share(m);
    for (int s = 0; s < 3; ++s) {
      const auto u = project_mean_zero(FeFunction(mesh, random_vector(mesh->num_vertices(), gen)));
      const auto scan = gamma_constant(u, 64);
      CHECK(scan.violations() == 0);
      CHECK(std::isfinite(scan.gamma));
      CHECK(scan.gamma > 0.0);
    }
  }
}

TEST_CASE("gamma requires a mean-zero function") {
  const auto mesh = share(generate_rectangle(4, 4, 1, 1));
  const auto u = FeFunction::interpolate(mesh, [](const Point& p) { return p.x; });
  CHECK_THROWS_AS(gamma_constant(u), NotMeanZero);
}

TEST_CASE("scan grid layout and CSV header") {
  const auto mesh = share(generate_rectangle(6, 6, 1, 1));
  const auto u = FeFunction::interpolate(mesh, [](const Point& p) { return p.x - 0.5; });
  const auto scan = gamma_constant(u, 32);
  CHECK(scan.grid_size == 32);
  CHECK(scan.coarse_step == doctest::Approx(scan.sup_norm / 32));
  CHECK(scan.refined_step == doctest::Approx(scan.coarse_step / 10));
  const auto ks = scan.levels();
  CHECK(std::is_sorted(ks.begin(), ks.end()));
  CHECK(ks.front() == 0.0);
  CHECK(ks.back() < scan.sup_norm);
  std::ostringstream os;
  write_scan_csv(os, scan);
  const auto text = os.str();
  CHECK(text.rfind("k,norm2_zeta,norm2_grad_zeta,measure_Ak,ratio,flag\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == scan.rows.size() + 1);
}
