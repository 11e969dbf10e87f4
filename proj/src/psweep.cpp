#include "stampacchia/psweep.hpp"

#include "stampacchia/bounds.hpp"
#include "stampacchia/errors.hpp"
#include "stampacchia/parallel.hpp"
#include "stampacchia/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace stampacchia {

double dual_exponent(double p) {
  if (!(p > 1.0)) throw PreconditionViolation("exponent must exceed 1");
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

double SweepResult::column_max(std::size_t ci, std::size_t pi) const {
  double m = 0.0;
  for (const auto& row : rows)
    if (row.contrast_index == ci && row.p_index == pi && row.status == "ok") m = std::max(m, row.ratio);
  return m;
}

SweepResult run_sweep(const MeshPtr& mesh, const SweepOptions& options) {
  if (options.samples < 1) throw PreconditionViolation("sweep needs at least one sample");
  SweepResult res;
  res.contrasts = options.contrasts;
  res.ps = options.ps;
  std::sort(res.contrasts.begin(), res.contrasts.end());
  std::sort(res.ps.begin(), res.ps.end());
  for (double c : res.contrasts)
    if (!(c >= 1.0)) throw PreconditionViolation("contrast values must be >= 1");
  for (double p : res.ps)
    if (!(p > 1.0) || std::isinf(p)) throw PreconditionViolation("p values must lie in (1, inf)");
  res.samples = options.samples;
  res.seed = options.seed;

  const std::size_t nc = res.contrasts.size();
  const std::size_t np = res.ps.size();
  const auto ns = static_cast<std::size_t>(options.samples);
  res.rows.resize(nc * np * ns);

  // One cell per (contrast, sample); the data of sample s is shared by all
  // contrasts.
  parallel_for(nc * ns, [&](std::size_t cell) {
    const std::size_t ci = cell / ns;
    const std::size_t s = cell % ns;
    auto gen = substream(options.seed, "psweep-data", s);
    const auto T = random_gradient_functional(*mesh, 2.0, gen);
    auto slot = [&](std::size_t pi) -> SweepRow& { return res.rows[(ci * np + pi) * ns + s]; };
    for (std::size_t pi = 0; pi < np; ++pi) {
      auto& row = slot(pi);
      row.contrast_index = ci;
      row.p_index = pi;
      row.sample = s;
      row.contrast = res.contrasts[ci];
      row.p = res.ps[pi];
    }
    try {
      const auto mu = CoefficientField::checkerboard(*mesh, res.contrasts[ci], options.macro_cells);
      const auto solve = solve_neumann(mesh, mu, T, options.solver);
      for (std::size_t pi = 0; pi < np; ++pi) {
        const double p = res.ps[pi];
        const double data = std::sqrt(T.f_norm_sq(*mesh, dual_exponent(p)));
        auto& row = slot(pi);
        row.ratio = grad_lp_norm(solve.u, p) / data;
        row.status = std::isfinite(row.ratio) && row.ratio > 0.0 ? "ok" : "failed: non-finite ratio";
      }
    } catch (const Error& e) {
      for (std::size_t pi = 0; pi < np; ++pi) {
        slot(pi).ratio = std::numeric_limits<double>::quiet_NaN();
        slot(pi).status = std::string("failed: ") + e.kind();
      }
    }
  });

  res.max_ratio.assign(nc, 0.0);
  for (const auto& row : res.rows)
    if (row.status == "ok") res.max_ratio[row.contrast_index] = std::max(res.max_ratio[row.contrast_index], row.ratio);
  return res;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  char buf[256];
  os << "contrast,p,sample,ratio,status\n";
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%s\n", row.contrast, row.p, row.sample, row.ratio,
                  row.status.c_str());
    os << buf;
  }
}

} // namespace stampacchia
