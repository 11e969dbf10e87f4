#include "stampacchia/experiment.hpp"

#include "stampacchia/constants.hpp"
#include "stampacchia/errors.hpp"
#include "stampacchia/rng.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace stampacchia {

namespace {

// --- config parsing helpers --------------------------------------------------

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw ConfigInvalid(path + ": " + what);
}

const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double read_number(const Json& obj, const char* key, const std::string& path, double fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) invalid(path + "." + key, "expected a number");
  return v->get<double>();
}

int read_int(const Json& obj, const char* key, const std::string& path, int fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) invalid(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool read_bool(const Json& obj, const char* key, const std::string& path, bool fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) invalid(path + "." + key, "expected true or false");
  return v->get<bool>();
}

std::string read_string(const Json& obj, const char* key, const std::string& path, const std::string& fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) invalid(path + "." + key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> read_numbers(const Json& obj, const char* key, const std::string& path,
                                 std::vector<double> fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) invalid(path + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) invalid(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

const Json& section(const Json& root, const char* key, const Json& empty) {
  const Json* v = find(root, key);
  if (!v) return empty;
  if (!v->is_object()) invalid(key, "expected an object");
  return *v;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_string(const auto& writer, const auto& value) {
  std::ostringstream os;
  writer(os, value);
  return os.str();
}

} // namespace

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) invalid("$", "configuration must be a JSON object");
  const Json empty = Json::object();
  ExperimentConfig cfg;

  const Json& dom = section(j, "domain", empty);
  cfg.domain.family = read_string(dom, "family", "domain", cfg.domain.family);
  cfg.domain.nx = read_int(dom, "nx", "domain", cfg.domain.nx);
  cfg.domain.ny = read_int(dom, "ny", "domain", cfg.domain.ny);
  cfg.domain.width = read_number(dom, "width", "domain", cfg.domain.width);
  cfg.domain.height = read_number(dom, "height", "domain", cfg.domain.height);
  cfg.domain.n = read_int(dom, "n", "domain", cfg.domain.n);
  cfg.domain.beta = read_number(dom, "beta", "domain", cfg.domain.beta);
  cfg.domain.vertical = read_int(dom, "vertical", "domain", cfg.domain.vertical);
  cfg.domain.path = read_string(dom, "path", "domain", cfg.domain.path);
  const auto& fam = cfg.domain.family;
  if (fam != "rectangle" && fam != "lshape" && fam != "cusp" && fam != "file")
    invalid("domain.family", "unknown family '" + fam + "' (rectangle | lshape | cusp | file)");
  if (fam == "rectangle" && (cfg.domain.nx < 1 || cfg.domain.ny < 1)) invalid("domain.nx", "must be >= 1");
  if (fam == "rectangle" && !(cfg.domain.width > 0.0 && cfg.domain.height > 0.0))
    invalid("domain.width", "width and height must be positive");
  if (fam == "lshape" && cfg.domain.n < 1) invalid("domain.n", "must be >= 1");
  if (fam == "cusp" && cfg.domain.n < 2) invalid("domain.n", "must be >= 2");
  if (fam == "cusp" && !(cfg.domain.beta >= 0.0)) invalid("domain.beta", "must be >= 0");
  if (fam == "file" && cfg.domain.path.empty()) invalid("domain.path", "required for family 'file'");

  const Json& coef = section(j, "coefficient", empty);
  cfg.coefficient.type = read_string(coef, "type", "coefficient", cfg.coefficient.type);
  cfg.coefficient.a = read_number(coef, "a", "coefficient", cfg.coefficient.a);
  cfg.coefficient.b = read_number(coef, "b", "coefficient", cfg.coefficient.b);
  cfg.coefficient.contrast = read_number(coef, "contrast", "coefficient", cfg.coefficient.contrast);
  cfg.coefficient.cells = read_int(coef, "cells", "coefficient", cfg.coefficient.cells);
  cfg.coefficient.path = read_string(coef, "path", "coefficient", cfg.coefficient.path);
  const auto& ct = cfg.coefficient.type;
  if (ct != "identity" && ct != "diagonal" && ct != "checkerboard" && ct != "file")
    invalid("coefficient.type", "unknown type '" + ct + "' (identity | diagonal | checkerboard | file)");
  if (ct == "diagonal" && !(cfg.coefficient.a > 0.0 && cfg.coefficient.b > 0.0))
    invalid("coefficient.a", "diagonal entries must be positive");
  if (ct == "checkerboard" && !(cfg.coefficient.contrast >= 1.0)) invalid("coefficient.contrast", "must be >= 1");
  if (ct == "checkerboard" && cfg.coefficient.cells < 1) invalid("coefficient.cells", "must be >= 1");
  if (ct == "file" && cfg.coefficient.path.empty()) invalid("coefficient.path", "required for type 'file'");

  const Json& rhs = section(j, "rhs", empty);
  cfg.rhs.form = read_string(rhs, "form", "rhs", cfg.rhs.form);
  if (cfg.rhs.form != "gradient" && cfg.rhs.form != "boundary")
    invalid("rhs.form", "unknown form '" + cfg.rhs.form + "' (gradient | boundary)");
  const std::string mode = read_string(rhs, "mode", "rhs", "deterministic");
  if (mode != "deterministic" && mode != "random") invalid("rhs.mode", "expected deterministic | random");
  cfg.rhs.random = mode == "random";
  cfg.rhs.samples = read_int(rhs, "samples", "rhs", cfg.rhs.samples);
  if (cfg.rhs.samples < 1) invalid("rhs.samples", "must be >= 1");
  cfg.rhs.kappa = read_number(rhs, "kappa", "rhs", cfg.rhs.kappa);
  const auto f = read_numbers(rhs, "f", "rhs", {0.0, 0.0});
  if (f.size() != 2) invalid("rhs.f", "expected two components");
  cfg.rhs.f = {f[0], f[1]};
  cfg.rhs.f0 = read_string(rhs, "f0", "rhs", cfg.rhs.f0);
  if (cfg.rhs.f0 != "zero" && cfg.rhs.f0 != "constant" && cfg.rhs.f0 != "cos_pi_x")
    invalid("rhs.f0", "unknown preset '" + cfg.rhs.f0 + "' (zero | constant | cos_pi_x)");
  cfg.rhs.f0_value = read_number(rhs, "f0_value", "rhs", cfg.rhs.f0_value);
  cfg.rhs.g = read_number(rhs, "g", "rhs", cfg.rhs.g);
  if (cfg.rhs.random && cfg.rhs.form != "gradient") invalid("rhs.mode", "random data is only supported in gradient form");

  const Json& ex = section(j, "exponents", empty);
  cfg.exponents.q = read_number(ex, "q", "exponents", cfg.exponents.q);
  cfg.exponents.r = read_number(ex, "r", "exponents", cfg.exponents.r);
  cfg.exponents.d = read_int(ex, "d", "exponents", cfg.exponents.d);
  cfg.p_norms = read_numbers(ex, "p", "exponents", {});
  for (std::size_t i = 0; i < cfg.p_norms.size(); ++i)
    if (!(cfg.p_norms[i] >= 1.0)) invalid("exponents.p[" + std::to_string(i) + "]", "must be >= 1");
  if (!(cfg.exponents.r >= 2.0)) invalid("exponents.r", "must be >= 2");

  const Json& sol = section(j, "solver", empty);
  cfg.solver.tol = read_number(sol, "tol", "solver", cfg.solver.tol);
  cfg.solver.tol_compat = read_number(sol, "tol_compat", "solver", cfg.solver.tol_compat);
  cfg.solver.max_iterations = read_int(sol, "max_iterations", "solver", cfg.solver.max_iterations);
  cfg.solver.jacobi = read_bool(sol, "jacobi", "solver", cfg.solver.jacobi);
  if (!(cfg.solver.tol > 0.0)) invalid("solver.tol", "must be positive");
  if (!(cfg.solver.tol_compat > 0.0)) invalid("solver.tol_compat", "must be positive");
  cfg.solver.p_norms = cfg.p_norms;

  const Json& chk = section(j, "checks", empty);
  cfg.checks.bound = read_bool(chk, "bound", "checks", cfg.checks.bound);
  cfg.checks.analytic = read_bool(chk, "analytic", "checks", cfg.checks.analytic);
  cfg.checks.analytic_tol = read_number(chk, "analytic_tol", "checks", cfg.checks.analytic_tol);
  cfg.checks.sweep = read_bool(chk, "sweep", "checks", cfg.checks.sweep);
  cfg.checks.embedding_certificate_samples =
      read_int(chk, "embedding_certificate_samples", "checks", cfg.checks.embedding_certificate_samples);
  if (cfg.checks.bound) {
    try {
      cfg.exponents.check();
    } catch (const ExponentPrecondition& e) {
      invalid("exponents", std::string("bound requested but ") + e.what());
    }
    if (cfg.rhs.form != "gradient" || cfg.rhs.kappa != 0.0)
      invalid("rhs.form", "the bound check needs gradient-form data with kappa = 0");
  }
  if (cfg.checks.analytic && !(cfg.rhs.form == "boundary" && cfg.rhs.f0 == "cos_pi_x"))
    invalid("checks.analytic", "the analytic check needs rhs.form = boundary with f0 = cos_pi_x");

  const Json& sw = section(j, "sweep", empty);
  cfg.sweep.contrasts = read_numbers(sw, "contrasts", "sweep", cfg.sweep.contrasts);
  cfg.sweep.ps = read_numbers(sw, "p", "sweep", cfg.sweep.ps);
  cfg.sweep.samples = read_int(sw, "samples", "sweep", cfg.sweep.samples);
  cfg.sweep.macro_cells = read_int(sw, "macro_cells", "sweep", cfg.sweep.macro_cells);
  for (std::size_t i = 0; i < cfg.sweep.contrasts.size(); ++i)
    if (!(cfg.sweep.contrasts[i] >= 1.0)) invalid("sweep.contrasts[" + std::to_string(i) + "]", "must be >= 1");
  for (std::size_t i = 0; i < cfg.sweep.ps.size(); ++i)
    if (!(cfg.sweep.ps[i] > 1.0)) invalid("sweep.p[" + std::to_string(i) + "]", "must be > 1");
  if (cfg.sweep.samples < 1) invalid("sweep.samples", "must be >= 1");

  cfg.grid_size = read_int(j, "grid_size", "$", cfg.grid_size);
  if (cfg.grid_size < 1) invalid("grid_size", "must be >= 1");
  cfg.output = read_string(j, "output", "$", cfg.output);
  if (const Json* s = find(j, "seed")) {
    if (!s->is_number_unsigned()) invalid("seed", "expected a nonnegative integer");
    cfg.seed = s->get<std::uint64_t>();
  } else if (cfg.rhs.random || cfg.checks.sweep) {
    invalid("seed", "required when random components are configured");
  }
  cfg.sweep.solver = cfg.solver;
  cfg.sweep.solver.p_norms.clear();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigInvalid(path + ": cannot open configuration file");
  Json j;
  try {
    j = Json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigInvalid(path + ": " + e.what());
  }
  auto cfg = parse_config(j);
  // Relative file references resolve against the config location.
  const auto base = std::filesystem::path(path).parent_path();
  if (!cfg.domain.path.empty() && std::filesystem::path(cfg.domain.path).is_relative())
    cfg.domain.path = (base / cfg.domain.path).string();
  if (!cfg.coefficient.path.empty() && std::filesystem::path(cfg.coefficient.path).is_relative())
    cfg.coefficient.path = (base / cfg.coefficient.path).string();
  return cfg;
}

TriMesh build_mesh(const DomainSpec& spec) {
  if (spec.family == "rectangle") return generate_rectangle(spec.nx, spec.ny, spec.width, spec.height);
  if (spec.family == "lshape") return generate_lshape(spec.n);
  if (spec.family == "cusp") return generate_cusp(spec.beta, spec.n, spec.vertical);
  return read_mesh_file(spec.path);
}

CoefficientField build_coefficient(const CoefficientSpec& spec, const TriMesh& mesh) {
  if (spec.type == "identity") return CoefficientField::identity(mesh);
  if (spec.type == "diagonal") {
    Matrix2 m;
    m << spec.a, 0.0, 0.0, spec.b;
    return CoefficientField::constant(mesh, m);
  }
  if (spec.type == "checkerboard") return CoefficientField::checkerboard(mesh, spec.contrast, spec.cells);
  std::ifstream is(spec.path);
  if (!is) throw ConfigInvalid("coefficient.path: cannot open " + spec.path);
  std::vector<Matrix2> mu;
  double a, b, c, d;
  while (is >> a >> b >> c >> d) {
    Matrix2 m;
    m << a, b, c, d;
    mu.push_back(m);
  }
  if (mu.size() != mesh.num_triangles())
    throw ConfigInvalid("coefficient.path: " + std::to_string(mu.size()) + " matrices for " +
                        std::to_string(mesh.num_triangles()) + " elements");
  return CoefficientField(std::move(mu));
}

std::vector<NeumannFunctional> build_rhs(const ExperimentConfig& cfg, const TriMesh& mesh) {
  const auto& spec = cfg.rhs;
  const double q = cfg.exponents.q;
  std::vector<NeumannFunctional> out;
  if (spec.random) {
    for (int s = 0; s < spec.samples; ++s) {
      auto gen = substream(cfg.seed, "rhs", static_cast<std::uint64_t>(s));
      out.push_back(random_gradient_functional(mesh, q, gen));
    }
    return out;
  }
  if (spec.form == "gradient") {
    out.push_back(NeumannFunctional::gradient(
        std::vector<Vector2>(mesh.num_triangles(), Vector2(spec.f[0], spec.f[1])), spec.kappa, q));
    return out;
  }
  std::vector<double> f0(mesh.num_triangles(), 0.0);
  for (std::size_t e = 0; e < f0.size(); ++e) {
    if (spec.f0 == "constant") f0[e] = spec.f0_value;
    if (spec.f0 == "cos_pi_x") {
      const double pi = std::numbers::pi;
      f0[e] = pi * pi * std::cos(pi * mesh.centroid(e).x);
    }
  }
  out.push_back(NeumannFunctional::boundary(std::move(f0), std::vector<double>(mesh.boundary_edges().size(), spec.g), q));
  return out;
}

Json summarize_checks(const Json& reports) {
  Json checks = Json::object();
  bool all = true;
  auto record = [&](const char* name, bool pass, Json detail) {
    detail["pass"] = pass;
    checks[name] = std::move(detail);
    all = all && pass;
  };
  if (reports.contains("mesh")) {
    const auto& m = reports["mesh"];
    record("mesh_valid", m.value("valid", false), {{"violations", m.value("violations", Json::array())}});
  }
  if (reports.contains("analytic")) {
    const auto& a = reports["analytic"];
    const double err = a.value("relative_linf_error", 1.0);
    const double tol = a.value("tolerance", 0.0);
    record("analytic", err <= tol, {{"relative_linf_error", err}, {"tolerance", tol}});
  }
  if (reports.contains("bound")) {
    std::size_t failed = 0, total = 0;
    for (const auto& c : reports["bound"].value("cases", Json::array())) {
      ++total;
      const bool ok = c.value("observed_sup", 1.0) <= c.value("rhs_bound", 0.0) &&
                      c["decay"].value("gradient_failures", 1) == 0 && c["decay"].value("decay_failures", 1) == 0;
      failed += !ok;
    }
    record("bound", failed == 0 && total > 0, {{"cases", total}, {"failed", failed}});
  }
  if (reports.contains("certificate")) {
    const auto& c = reports["certificate"];
    record("embedding_certificate", c.value("final_violations", 1) == 0,
           {{"final_violations", c.value("final_violations", 1)}});
  }
  if (reports.contains("sweep")) {
    const auto& s = reports["sweep"];
    record("sweep", s.value("failed_rows", 1) == 0, {{"failed_rows", s.value("failed_rows", 1)}});
  }
  checks["all"] = all;
  return checks;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, Stage stage, std::ostream* log) {
  namespace fs = std::filesystem;
  RunOutcome out;
  const fs::path dir(cfg.output);
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = (dir / name).string();
    write_file_atomic(path, content);
    out.files.push_back(path);
  };
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << '\n';
  };
  auto staged = [](const char* label, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      const std::string msg = e.what();
      throw Error(e.kind(), std::string("[") + label + "] " + msg.substr(e.kind().size() + 2));
    }
  };

  const bool want_constants = stage == Stage::Constants || stage == Stage::VerifyBound || stage == Stage::All;
  const bool want_solve = stage == Stage::Solve || stage == Stage::VerifyBound || stage == Stage::All;
  const bool want_bound = stage == Stage::VerifyBound || (stage == Stage::All && cfg.checks.bound);
  const bool want_sweep = stage == Stage::Sweep || (stage == Stage::All && cfg.checks.sweep);

  if (want_bound) {
    try {
      cfg.exponents.check();
    } catch (const ExponentPrecondition& e) {
      throw ConfigInvalid(std::string("exponents: ") + e.what());
    }
  }

  Json reports = Json::object();

  const MeshPtr mesh = staged("mesh", [&] { return share(build_mesh(cfg.domain)); });
  {
    const auto validation = validate_mesh(*mesh);
    Json viol = Json::array();
    for (const auto& v : validation.violations) viol.push_back({{"kind", to_string(v.kind)}, {"message", v.message}});
    reports["mesh"] = {{"vertices", mesh->num_vertices()},
                       {"triangles", mesh->num_triangles()},
                       {"boundary_edges", mesh->boundary_edges().size()},
                       {"area", mesh->total_area()},
                       {"valid", validation.ok()},
                       {"violations", viol}};
    std::ostringstream os;
    write_mesh(os, *mesh);
    emit("mesh.txt", os.str());
    say("mesh: " + std::to_string(mesh->num_vertices()) + " vertices, " + std::to_string(mesh->num_triangles()) +
        " triangles");
  }

  std::optional<CoefficientField> mu;
  if (want_constants || want_solve)
    mu = staged("coefficient", [&] { return build_coefficient(cfg.coefficient, *mesh); });

  std::optional<ConstantsReport> constants;
  if (want_constants) {
    constants = staged("constants", [&] {
      EmbeddingOptions eopt;
      eopt.seed = splitmix64(cfg.seed ^ fnv1a("embedding"));
      PoincareOptions popt;
      popt.seed = splitmix64(cfg.seed ^ fnv1a("poincare"));
      return compute_constants(*mesh, *mu, cfg.exponents.r, popt, eopt);
    });
    Json cj = to_json(*constants);
    if (cfg.checks.embedding_certificate_samples > 0) {
      auto cert = staged("constants", [&] {
        return certify_embedding(*mesh, *constants->embedding, cfg.checks.embedding_certificate_samples,
                                 splitmix64(cfg.seed ^ fnv1a("certificate")));
      });
      cj = to_json(*constants);
      cj["certificate"] = to_json(cert);
      reports["certificate"] = to_json(cert);
    }
    emit("constants.json", serialize(cj));
    say("constants: c_poincare = " + std::to_string(constants->poincare.c_poincare) +
        ", E_r = " + std::to_string(constants->embedding->E));
  }

  if (want_solve) {
    const auto functionals = staged("rhs", [&] { return build_rhs(cfg, *mesh); });
    Json cases = Json::array();
    Json bound_cases = Json::array();
    double c_hat = 0.0;
    for (std::size_t i = 0; i < functionals.size(); ++i) {
      const auto& T = functionals[i];
      const auto solve = staged("solve", [&] { return solve_neumann(mesh, *mu, T, cfg.solver); });
      cases.push_back(to_json(solve));
      if (cfg.checks.analytic && i == 0) {
        double err = 0.0, ref = 0.0;
        const double pi = std::numbers::pi;
        for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
          const double exact = std::cos(pi * mesh->vertices()[v].x);
          err = std::max(err, std::abs(solve.u.values()[static_cast<Eigen::Index>(v)] - exact));
          ref = std::max(ref, std::abs(exact));
        }
        reports["analytic"] = {{"relative_linf_error", err / ref},
                               {"l2_error", l2_error(solve.u, [pi](const Point& p) { return std::cos(pi * p.x); })},
                               {"tolerance", cfg.checks.analytic_tol}};
      }
      if (want_bound) {
        TruncationScan scan;
        const auto bound = staged("verify-bound", [&] {
          return evaluate_bound(solve, T, constants->nu, constants->embedding->E, cfg.exponents, cfg.grid_size, &scan);
        });
        char name[64];
        std::snprintf(name, sizeof name, "scan_%03zu.csv", i);
        emit(name, csv_string([](std::ostream& os, const TruncationScan& s) { write_scan_csv(os, s); }, scan));
        std::snprintf(name, sizeof name, "decay_%03zu.csv", i);
        emit(name, csv_string([](std::ostream& os, const DecayCheck& d) { write_decay_csv(os, d); }, bound.decay));
        Json bj = to_json(bound);
        bj["scan"] = to_json(scan);
        bound_cases.push_back(bj);
        c_hat = std::max(c_hat, solve.norm_inf / std::sqrt(bound.f_norm_sq));
      }
    }
    emit("solve.json", serialize({{"cases", cases}}));
    say("solve: " + std::to_string(functionals.size()) + " case(s)");
    if (want_bound) {
      reports["bound"] = {{"cases", bound_cases}, {"c_hat", c_hat}};
      emit("bound.json", serialize(reports["bound"]));
      say("bound: c_hat = " + std::to_string(c_hat));
    }
  }

  if (want_sweep) {
    SweepOptions opt = cfg.sweep;
    opt.seed = splitmix64(cfg.seed ^ fnv1a("psweep"));
    const auto sweep = staged("psweep", [&] { return run_sweep(mesh, opt); });
    emit("sweep.csv", csv_string([](std::ostream& os, const SweepResult& s) { write_sweep_csv(os, s); }, sweep));
    reports["sweep"] = to_json(sweep);
    emit("sweep.json", serialize(reports["sweep"]));
    say("psweep: " + std::to_string(sweep.rows.size()) + " rows");
  }

  static const char* stage_names[] = {"mesh", "constants", "solve", "verify-bound", "psweep", "run"};
  Json summary;
  summary["metadata"] = {{"tool", kToolName},
                         {"version", kToolVersion},
                         {"format_version", kReportFormatVersion},
                         {"timestamp", timestamp_utc()}};
  summary["stage"] = stage_names[static_cast<int>(stage)];
  summary["seed"] = cfg.seed;
  summary["reports"] = reports;
  summary["checks"] = summarize_checks(reports);
  summary["pass"] = summary["checks"]["all"];
  emit("summary.json", serialize(summary));
  out.summary = summary;
  out.exit_code = summary["pass"].get<bool>() ? 0 : 1;
  return out;
}

} // namespace stampacchia
