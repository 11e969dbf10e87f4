#include "stampacchia/reports.hpp"

#include "stampacchia/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace stampacchia {

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

} // namespace

Json to_json(const ConstantsReport& report, bool with_maximizer) {
  Json j;
  j["format_version"] = kReportFormatVersion;
  j["nu"] = report.nu;
  j["mu_sup"] = report.mu_sup;
  j["area"] = report.area;
  j["c_poincare"] = report.poincare.c_poincare;
  j["lambda_2"] = report.poincare.lambda_2;
  j["poincare_diagnostics"] = {{"iterations", report.poincare.iterations},
                               {"rayleigh_change", report.poincare.rayleigh_change},
                               {"residual", report.poincare.residual}};
  if (report.embedding) {
    const auto& e = *report.embedding;
    Json emb;
    emb["r"] = e.r;
    emb["E_r"] = e.E;
    emb["lower_bound"] = true;
    emb["converged"] = e.converged;
    emb["maximizer_origin"] = e.maximizer_origin;
    Json probes = Json::array();
    for (const auto& p : e.probes)
      probes.push_back({{"origin", p.origin}, {"ratio", p.ratio}, {"iterations", p.iterations},
                        {"converged", p.converged}});
    emb["probes"] = probes;
    if (with_maximizer) emb["maximizer"] = vector_json(e.maximizer);
    j["embedding"] = emb;
  } else {
    j["embedding"] = nullptr;
  }
  return j;
}

Json to_json(const EmbeddingCertificate& cert) {
  return {{"samples", cert.samples},
          {"initial_violations", cert.initial_violations},
          {"final_violations", cert.final_violations},
          {"E_before", cert.E_before},
          {"E_after", cert.E_after}};
}

Json to_json(const SolveReport& report) {
  Json j;
  j["iterations"] = report.iterations;
  j["relative_residual"] = report.relative_residual;
  j["mean"] = report.u.mean();
  j["norm_inf"] = report.norm_inf;
  j["norm_2"] = report.norm_2;
  j["grad_norm_2"] = report.grad_norm_2;
  Json gp = Json::array();
  for (const auto& [p, v] : report.grad_norm_p) gp.push_back({{"p", p}, {"value", v}});
  j["grad_norm_p"] = gp;
  j["dual_norm_2"] = report.dual_norm_2;
  return j;
}

Json to_json(const TruncationScan& scan) {
  return {{"gamma_u", scan.gamma},
          {"k_at_gamma", scan.k_at_gamma},
          {"sup_norm", scan.sup_norm},
          {"grid_size", scan.grid_size},
          {"coarse_step", scan.coarse_step},
          {"refined_step", scan.refined_step},
          {"rows", scan.rows.size()},
          {"violations", scan.violations()}};
}

Json to_json(const BoundReport& report) {
  Json j;
  j["q"] = report.exponents.q;
  j["r"] = report.exponents.r;
  j["d"] = report.exponents.d;
  j["delta"] = report.delta;
  j["nu"] = report.nu;
  j["E"] = report.E;
  j["gamma_u"] = report.gamma_u;
  j["area"] = report.area;
  j["f_norm_sq"] = report.f_norm_sq;
  j["rhs_bound"] = report.rhs_bound;
  j["observed_sup"] = report.observed_sup;
  j["bound_holds"] = report.bound_holds;
  j["decay"] = {{"gradient_rows", report.decay.gradient_rows.size()},
                {"gradient_failures", report.decay.gradient_failures},
                {"min_gradient_slack", report.decay.min_gradient_slack},
                {"decay_rows", report.decay.decay_rows.size()},
                {"decay_failures", report.decay.decay_failures},
                {"min_decay_slack", report.decay.min_decay_slack},
                {"pass", report.decay.pass()}};
  j["pass"] = report.pass();
  return j;
}

Json to_json(const SweepResult& result) {
  Json j;
  j["contrasts"] = result.contrasts;
  j["p"] = result.ps;
  j["samples"] = result.samples;
  j["seed"] = result.seed;
  j["max_ratio"] = result.max_ratio;
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.status != "ok";
  j["failed_rows"] = failed;
  return j;
}

std::string serialize(const Json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("IoError", "cannot open " + tmp.string());
    os << content;
    if (!os) throw Error("IoError", "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

} // namespace stampacchia
