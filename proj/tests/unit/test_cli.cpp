#include "stampacchia/errors.hpp"
#include "stampacchia/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace stampacchia;
namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "stampacchia-lab-tests";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigInvalid& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json small_config(const std::string& out) {
  Json j = Json::parse(R"({
    "domain": {"family": "rectangle", "nx": 12, "ny": 12},
    "coefficient": {"type": "checkerboard", "contrast": 5},
    "rhs": {"form": "gradient", "mode": "random", "samples": 2},
    "exponents": {"q": 8, "r": 4, "p": [2, 4]},
    "checks": {"bound": true, "sweep": true, "embedding_certificate_samples": 10},
    "sweep": {"contrasts": [1, 10], "p": [1.9, 2.0, 2.1], "samples": 2},
    "grid_size": 64,
    "seed": 42
  })");
  j["output"] = out;
  return j;
}

} // namespace

TEST_CASE("config errors name the offending field") {
  CHECK(config_error(Json::array()).find("$") != std::string::npos);
  CHECK(config_error({{"domain", {{"family", "torus"}}}}).find("domain.family") != std::string::npos);
  CHECK(config_error({{"domain", {{"nx", "eight"}}}}).find("domain.nx") != std::string::npos);
  CHECK(config_error({{"coefficient", {{"type", "checkerboard"}, {"contrast", 0.5}}}}).find("coefficient.contrast") !=
        std::string::npos);
  CHECK(config_error({{"exponents", {{"p", {2, "x"}}}}}).find("exponents.p[1]") != std::string::npos);
  CHECK(config_error({{"solver", {{"tol", -1}}}}).find("solver.tol") != std::string::npos);
  CHECK(config_error({{"rhs", {{"mode", "random"}}}}).find("seed") != std::string::npos);
  CHECK(config_error({{"sweep", {{"p", {1.0}}}}, {"seed", 1}}).find("sweep.p[0]") != std::string::npos);
}

TEST_CASE("bound requests check the exponent precondition at load") {
  const Json j = {{"exponents", {{"q", 4}, {"r", 4}}}, {"checks", {{"bound", true}}}};
  const auto msg = config_error(j);
  CHECK(msg.find("exponents") != std::string::npos);
  CHECK(msg.find("1/r") != std::string::npos);
  // Without a bound request the same exponents load fine.
  CHECK(config_error({{"exponents", {{"q", 4}, {"r", 4}}}}).empty());
}

TEST_CASE("bundled analytic config") {
  auto cfg = load_config(std::string(LAB_SOURCE_DIR) + "/configs/square_analytic.json");
  cfg.output = (kScratch / "analytic").string();
  const auto out = run_experiment(cfg, Stage::All);
  CHECK(out.exit_code == 0);
  const auto& a = out.summary["reports"]["analytic"];
  CHECK(a["relative_linf_error"].get<double>() <= 1e-2);
  CHECK(out.summary["checks"]["analytic"]["pass"].get<bool>());
}

TEST_CASE("reruns are byte-identical apart from the timestamp") {
  const auto dir_a = kScratch / "rerun-a";
  const auto dir_b = kScratch / "rerun-b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const auto a = run_experiment(parse_config(small_config(dir_a.string())), Stage::All);
  const auto b = run_experiment(parse_config(small_config(dir_b.string())), Stage::All);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    const auto name = fs::path(a.files[i]).filename();
    CHECK(name == fs::path(b.files[i]).filename());
    if (name == "summary.json") {
      auto ja = Json::parse(slurp(a.files[i]));
      auto jb = Json::parse(slurp(b.files[i]));
      ja["metadata"].erase("timestamp");
      jb["metadata"].erase("timestamp");
      CHECK(ja == jb);
    } else {
      CHECK(slurp(a.files[i]) == slurp(b.files[i]));
    }
  }
  for (const auto& f : fs::directory_iterator(dir_a)) CHECK(f.path().extension() != ".tmp");
}

TEST_CASE("expected report files and round trips") {
  const auto dir = kScratch / "files";
  fs::remove_all(dir);
  const auto out = run_experiment(parse_config(small_config(dir.string())), Stage::All);
  for (const char* name : {"mesh.txt", "constants.json", "solve.json", "bound.json", "scan_000.csv", "scan_001.csv",
                           "decay_000.csv", "decay_001.csv", "sweep.csv", "sweep.json", "summary.json"})
    CHECK_MESSAGE(fs::exists(dir / name), name);
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() != ".json") continue;
    const auto text = slurp(f.path());
    CHECK(serialize(Json::parse(text)) == text);
  }
  const auto summary = Json::parse(slurp(dir / "summary.json"));
  CHECK(summarize_checks(summary["reports"]) == summary["checks"]);
  CHECK(summary["pass"] == summary["checks"]["all"]);
  CHECK(summary["metadata"].contains("timestamp"));
  CHECK(out.exit_code == (summary["pass"].get<bool>() ? 0 : 1));
  const auto constants = Json::parse(slurp(dir / "constants.json"));
  CHECK(constants["embedding"]["r"] == 4.0);
  CHECK(constants["certificate"]["final_violations"] == 0);
  const auto mesh = read_mesh_file((dir / "mesh.txt").string());
  CHECK(mesh.num_triangles() == 288);
}

TEST_CASE("summary flags follow report contents") {
  Json reports = {{"mesh", {{"valid", true}, {"violations", Json::array()}}},
                  {"analytic", {{"relative_linf_error", 0.02}, {"tolerance", 0.01}}}};
  auto checks = summarize_checks(reports);
  CHECK(checks["mesh_valid"]["pass"] == true);
  CHECK(checks["analytic"]["pass"] == false);
  CHECK(checks["all"] == false);
  reports["analytic"]["relative_linf_error"] = 0.005;
  CHECK(summarize_checks(reports)["all"] == true);
  reports["sweep"] = {{"failed_rows", 2}};
  CHECK(summarize_checks(reports)["all"] == false);
}

TEST_CASE("stage labels on pipeline errors") {
  ExperimentConfig cfg;
  cfg.domain.family = "file";
  cfg.domain.path = (kScratch / "missing.mesh").string();
  cfg.output = (kScratch / "missing").string();
  try {
    run_experiment(cfg, Stage::Mesh);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[mesh]") != std::string::npos);
  }
}

TEST_CASE("command-line front end") {
  const std::string cfg_dir = std::string(LAB_SOURCE_DIR) + "/configs";
  CHECK(run_cli("version") == 0);
  CHECK(run_cli("frobnicate") != 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("run --config " + cfg_dir + "/bad_exponents.json --quiet") == 2);
  CHECK(run_cli("run --config /nonexistent.json --quiet") == 2);

  const auto mesh_dir = kScratch / "cli-mesh";
  fs::remove_all(mesh_dir);
  CHECK(run_cli("mesh --quiet --config " + cfg_dir + "/square_bound.json --out " + mesh_dir.string()) == 0);
  CHECK(slurp(mesh_dir / "mesh.txt").rfind("mesh2d v1\n", 0) == 0);

  const auto c_dir = kScratch / "cli-constants";
  CHECK(run_cli("constants --quiet --config " + cfg_dir + "/square_analytic.json --out " + c_dir.string()) == 0);
  const auto constants = Json::parse(slurp(c_dir / "constants.json"));
  CHECK(std::abs(constants["c_poincare"].get<double>() - 0.3183) <= 0.001);

  // The seed flag overrides the config and changes random data.
  const auto s1 = kScratch / "cli-seed-1";
  const auto s2 = kScratch / "cli-seed-2";
  CHECK(run_cli("solve --quiet --config " + cfg_dir + "/square_bound.json --seed 1 --out " + s1.string()) == 0);
  CHECK(run_cli("solve --quiet --config " + cfg_dir + "/square_bound.json --seed 2 --out " + s2.string()) == 0);
  CHECK(slurp(s1 / "solve.json") != slurp(s2 / "solve.json"));

  // Runtime errors map to exit code 3.
  const auto bad_mesh = kScratch / "bad-mesh.json";
  std::ofstream(bad_mesh) << R"({"domain": {"family": "file", "path": "does-not-exist.mesh"}})";
  CHECK(run_cli("mesh --quiet --config " + bad_mesh.string() + " --out " + (kScratch / "x").string()) == 3);
}
