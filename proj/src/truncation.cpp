#include "stampacchia/truncation.hpp"

#include "stampacchia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace stampacchia {

FeFunction truncate(const FeFunction& u, double k) {
  if (!(k >= 0.0)) throw PreconditionViolation("truncation level must be >= 0");
  Vector z(u.values().size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = u.values()[i];
    const double excess = std::max(std::abs(x) - k, 0.0);
    z[i] = x > 0.0 ? excess : (x < 0.0 ? -excess : 0.0);
  }
  return u.with_values(std::move(z));
}

double superlevel_area(std::array<double, 3> vals, double area, double k) {
  std::sort(vals.begin(), vals.end());
  const double v0 = vals[0], v1 = vals[1], v2 = vals[2];
  if (k >= v2) return 0.0;
  if (k <= v0) return area;
  // Closed-form piecewise quadratic in k; each branch is a composition of
  // monotone floating-point operations and the lower branch is floored at
  // the value of the upper branch at the breakpoint.
  const auto upper = [&](double level) {
    return std::min(area, area * ((v2 - level) * (v2 - level)) / ((v2 - v0) * (v2 - v1)));
  };
  if (k >= v1) return upper(k);
  const double floor_value = v2 > v1 ? upper(v1) : 0.0;
  const double cut = area * ((k - v0) * (k - v0)) / ((v1 - v0) * (v2 - v0));
  return std::max(area - cut, floor_value);
}

double level_set_measure(const FeFunction& u, double k) {
  if (!(k >= 0.0)) throw PreconditionViolation("level must be >= 0");
  const TriMesh& mesh = u.mesh();
  const auto& v = u.values();
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto& t = mesh.triangles()[e];
    const double a = mesh.element_areas()[e];
    s += superlevel_area({v[t[0]], v[t[1]], v[t[2]]}, a, k);
    s += superlevel_area({-v[t[0]], -v[t[1]], -v[t[2]]}, a, k);
  }
  return s;
}

std::string to_string(ScanFlag flag) {
  switch (flag) {
    case ScanFlag::Ok: return "ok";
    case ScanFlag::Undefined: return "undefined";
    case ScanFlag::Violation: return "violation";
  }
  return "unknown";
}

std::vector<double> TruncationScan::levels() const {
  std::vector<double> ks;
  ks.reserve(rows.size());
  for (const auto& r : rows) ks.push_back(r.k);
  return ks;
}

std::size_t TruncationScan::violations() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const TruncationRow& r) { return r.flag == ScanFlag::Violation; }));
}

TruncationRow truncation_row(const FeFunction& u, double k) {
  const FeFunction zeta = truncate(u, k);
  TruncationRow row;
  row.k = k;
  row.norm2_zeta = lp_norm(zeta, 2.0);
  row.norm2_grad_zeta = grad_lp_norm(zeta, 2.0);
  row.measure = level_set_measure(u, k);
  if (row.norm2_grad_zeta > 0.0) {
    row.ratio = row.norm2_zeta / row.norm2_grad_zeta;
    row.flag = ScanFlag::Ok;
  } else {
    row.flag = row.norm2_zeta > 0.0 ? ScanFlag::Violation : ScanFlag::Undefined;
  }
  return row;
}

TruncationScan scan_levels(const FeFunction& u, std::vector<double> levels) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  TruncationScan scan;
  scan.sup_norm = u.max_abs();
  scan.grid_size = static_cast<int>(levels.size());
  scan.rows.reserve(levels.size());
  for (double k : levels) {
    scan.rows.push_back(truncation_row(u, k));
    const auto& row = scan.rows.back();
    if (row.flag == ScanFlag::Ok && row.ratio > scan.gamma) {
      scan.gamma = row.ratio;
      scan.k_at_gamma = row.k;
    }
  }
  return scan;
}

TruncationScan gamma_constant(const FeFunction& u, int grid_size) {
  if (grid_size < 1) throw PreconditionViolation("grid size must be positive");
  const double norm2 = lp_norm(u, 2.0);
  if (std::abs(u.mean()) > 1e-10 * norm2) throw NotMeanZero("gamma_u requires a mean-zero function");

  const double sup = u.max_abs();
  if (sup == 0.0) {
    auto scan = scan_levels(u, {0.0});
    scan.grid_size = grid_size;
    return scan;
  }
  const double step = sup / grid_size;
  std::vector<double> levels;
  levels.reserve(static_cast<std::size_t>(grid_size) + 21);
  for (int i = 0; i < grid_size; ++i) levels.push_back(i * step);

  auto coarse = scan_levels(u, levels);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < coarse.rows.size(); ++i)
    if (coarse.rows[i].flag == ScanFlag::Ok && coarse.rows[i].ratio == coarse.gamma) {
      arg = i;
      break;
    }

  // One refinement pass at ten times the resolution around the arg-max.
  const double fine = step / 10.0;
  const double center = levels[arg];
  std::vector<TruncationRow> extra;
  for (int j = -10; j <= 10; ++j) {
    const double k = center + j * fine;
    if (j == 0 || k < 0.0 || k >= sup) continue;
    extra.push_back(truncation_row(u, k));
  }

  TruncationScan scan = std::move(coarse);
  scan.rows.insert(scan.rows.end(), extra.begin(), extra.end());
  std::sort(scan.rows.begin(), scan.rows.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  scan.rows.erase(std::unique(scan.rows.begin(), scan.rows.end(), [](const auto& a, const auto& b) { return a.k == b.k; }),
                  scan.rows.end());
  for (const auto& row : scan.rows)
    if (row.flag == ScanFlag::Ok && row.ratio > scan.gamma) {
      scan.gamma = row.ratio;
      scan.k_at_gamma = row.k;
    }
  scan.grid_size = grid_size;
  scan.coarse_step = step;
  scan.refined_step = fine;
  return scan;
}

void write_scan_csv(std::ostream& os, const TruncationScan& scan) {
  char buf[256];
  os << "k,norm2_zeta,norm2_grad_zeta,measure_Ak,ratio,flag\n";
  for (const auto& r : scan.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.k, r.norm2_zeta, r.norm2_grad_zeta,
                  r.measure, r.ratio, to_string(r.flag).c_str());
    os << buf;
  }
}

} // namespace stampacchia
