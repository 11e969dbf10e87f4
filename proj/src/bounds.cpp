#include "stampacchia/bounds.hpp"

#include "stampacchia/errors.hpp"
#include "stampacchia/parallel.hpp"
#include "stampacchia/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace stampacchia {

void BoundExponents::check() const {
  std::ostringstream msg;
  if (!(q > d)) {
    msg << "q = " << q << " must exceed the dimension d = " << d;
    throw ExponentPrecondition(msg.str());
  }
  if (!(q > 2.0) || !(r > 2.0)) {
    msg << "q = " << q << " and r = " << r << " must both exceed 2";
    throw ExponentPrecondition(msg.str());
  }
  if (!(delta() > 0.0)) {
    msg << "1/2 - 1/q = " << 0.5 - 1.0 / q << " is not > 1/r = " << 1.0 / r;
    throw ExponentPrecondition(msg.str());
  }
}

double linfty_bound(double E, double nu, double gamma_u, double area, double q, double r, double f_norm_sq,
                    int d) {
  const BoundExponents ex{q, r, d};
  ex.check();
  if (!(E > 0.0) || !(nu > 0.0) || !(area > 0.0))
    throw PreconditionViolation("E, nu and area must be positive");
  if (!(gamma_u >= 0.0) || !(f_norm_sq >= 0.0))
    throw PreconditionViolation("gamma_u and f_norm_sq must be nonnegative");
  const double delta = ex.delta();
  return std::pow(2.0, (0.5 - 1.0 / q) / delta) * (E / nu) *
         std::sqrt((1.0 + gamma_u * gamma_u) * std::pow(area, delta)) * std::sqrt(f_norm_sq);
}

double stampacchia_extinction(double C, double alpha, double beta, double phi0) {
  if (!(beta > 1.0)) throw BetaNotSupercritical("beta = " + std::to_string(beta) + " must exceed 1");
  if (!(C > 0.0) || !(alpha > 0.0)) throw PreconditionViolation("C and alpha must be positive");
  if (!(phi0 >= 0.0)) throw PreconditionViolation("phi0 must be nonnegative");
  if (phi0 == 0.0) return 0.0;
  return std::pow(C * std::pow(phi0, beta - 1.0) * std::pow(2.0, alpha * beta / (beta - 1.0)), 1.0 / alpha);
}

DecayCheck verify_decay(const TruncationScan& scan, double f_norm_sq, const DecayConstants& c,
                        const BoundExponents& ex) {
  const double q = ex.q;
  const double r = ex.r;
  const double holder = 1.0 - 2.0 / q;
  const double beta = holder * r / 2.0;
  const double factor = std::pow(c.E / c.nu, r) * std::pow(1.0 + c.gamma_u * c.gamma_u, r / 2.0) *
                        std::pow(f_norm_sq, r / 2.0);

  DecayCheck out;
  out.min_gradient_slack = std::numeric_limits<double>::infinity();
  out.min_decay_slack = std::numeric_limits<double>::infinity();
  const auto& rows = scan.rows;
  out.gradient_rows.reserve(rows.size());
  for (const auto& row : rows) {
    GradientRow g;
    g.k = row.k;
    g.lhs = row.norm2_grad_zeta * row.norm2_grad_zeta;
    g.rhs = std::pow(row.measure, holder) * f_norm_sq / (c.nu * c.nu);
    g.slack = g.rhs - g.lhs;
    if (!(g.slack >= 0.0)) ++out.gradient_failures;
    out.min_gradient_slack = std::min(out.min_gradient_slack, g.slack);
    out.gradient_rows.push_back(g);
  }

  out.decay_rows.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double ak = std::pow(rows[i].measure, beta);
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      DecayRow d;
      d.k = rows[i].k;
      d.h = rows[j].k;
      d.measure_obs = rows[j].measure;
      d.measure_bound = factor * ak / std::pow(d.h - d.k, r);
      d.slack = d.measure_bound - d.measure_obs;
      if (!(d.slack >= 0.0)) ++out.decay_failures;
      out.min_decay_slack = std::min(out.min_decay_slack, d.slack);
      out.decay_rows.push_back(d);
    }
  }
  return out;
}

namespace {

void require_plain_gradient_form(const NeumannFunctional& T) {
  if (T.form != NeumannFunctional::Form::Gradient || T.kappa != 0.0)
    throw PreconditionViolation("the decay chain needs a gradient-form functional with kappa = 0");
}

} // namespace

DecayCheck verify_decay(const SolveReport& solve, const NeumannFunctional& T, const DecayConstants& constants,
                        const BoundExponents& exponents, const TruncationScan& scan) {
  require_plain_gradient_form(T);
  return verify_decay(scan, T.f_norm_sq(solve.u.mesh(), exponents.q), constants, exponents);
}

double BoundReport::recompute_bound() const {
  return linfty_bound(E, nu, gamma_u, area, exponents.q, exponents.r, f_norm_sq, exponents.d);
}

BoundReport evaluate_bound(const SolveReport& solve, const NeumannFunctional& T, double nu, double E,
                           const BoundExponents& exponents, int grid_size, TruncationScan* scan_out) {
  require_plain_gradient_form(T);
  exponents.check();
  const TriMesh& mesh = solve.u.mesh();

  BoundReport rep;
  rep.exponents = exponents;
  rep.delta = exponents.delta();
  rep.nu = nu;
  rep.E = E;
  rep.area = mesh.total_area();
  rep.f_norm_sq = T.f_norm_sq(mesh, exponents.q);

  TruncationScan scan = gamma_constant(solve.u, grid_size);
  rep.gamma_u = scan.gamma;
  rep.rhs_bound = linfty_bound(E, nu, rep.gamma_u, rep.area, exponents.q, exponents.r, rep.f_norm_sq, exponents.d);
  rep.observed_sup = solve.u.max_abs();
  rep.bound_holds = rep.observed_sup <= rep.rhs_bound;
  rep.decay = verify_decay(scan, rep.f_norm_sq, {nu, E, rep.gamma_u}, exponents);
  if (scan_out) *scan_out = std::move(scan);
  return rep;
}

NeumannFunctional random_gradient_functional(const TriMesh& mesh, double q, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector2> f(mesh.num_triangles());
  for (auto& v : f) {
    const double a = normal(gen);
    const double b = normal(gen);
    v = Vector2(a, b);
  }
  auto T = NeumannFunctional::gradient(std::move(f), 0.0, q);
  const double norm = std::sqrt(T.f_norm_sq(mesh, q));
  return norm > 0.0 ? T.scaled(1.0 / norm) : T;
}

OperatorNormResult empirical_operator_norm(const OperatorNormFamily& family, int samples, std::uint64_t seed,
                                           double data_scale, bool with_gamma) {
  if (samples < 1) throw PreconditionViolation("sample count must be positive");
  OperatorNormResult res;
  res.ratios.assign(static_cast<std::size_t>(samples), 0.0);
  if (with_gamma) res.gammas.assign(static_cast<std::size_t>(samples), 0.0);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    auto gen = substream(seed, "operator-norm", i);
    const auto T = random_gradient_functional(*family.mesh, family.q, gen).scaled(data_scale);
    const auto solve = solve_neumann(family.mesh, family.mu, T, family.solver);
    res.ratios[i] = solve.norm_inf / std::sqrt(T.f_norm_sq(*family.mesh, family.q));
    if (with_gamma) res.gammas[i] = gamma_constant(solve.u).gamma;
  });
  res.c_hat = *std::max_element(res.ratios.begin(), res.ratios.end());
  return res;
}

void write_decay_csv(std::ostream& os, const DecayCheck& check) {
  char buf[256];
  os << "k,h,measure_obs,measure_bound,slack\n";
  for (const auto& d : check.decay_rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", d.k, d.h, d.measure_obs, d.measure_bound,
                  d.slack);
    os << buf;
  }
}

} // namespace stampacchia
