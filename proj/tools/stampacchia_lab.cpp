// Command-line front end for the experiment pipeline.

#include "stampacchia/errors.hpp"
#include "stampacchia/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace sl = stampacchia;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "experiment configuration (JSON)")->required();
  cmd->add_option("--out", flags.out, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "base seed (overrides config)");
  cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
}

int run_stage(sl::Stage stage, const Flags& flags) {
  try {
    auto cfg = sl::load_config(flags.config);
    if (!flags.out.empty()) cfg.output = flags.out;
    if (flags.seed) cfg.seed = *flags.seed;
    auto outcome = sl::run_experiment(cfg, stage, flags.quiet ? nullptr : &std::cout);
    if (!flags.quiet) {
      for (const auto& [name, check] : outcome.summary["checks"].items())
        if (check.is_object()) std::cout << "check " << name << ": " << (check["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
      std::cout << (outcome.exit_code == 0 ? "PASS" : "FAIL") << " (" << cfg.output << ")\n";
    }
    return outcome.exit_code;
  } catch (const sl::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sl::Error& e) {
    if (e.kind() == "ConfigInvalid") {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neumann-problem regularity lab: meshes, constants, solves, L-infinity bound checks, p-sweeps"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    sl::Stage stage;
  };
  const Entry entries[] = {
      {"mesh", "generate and validate the mesh", sl::Stage::Mesh},
      {"constants", "ellipticity, Poincare and embedding constants", sl::Stage::Constants},
      {"solve", "solve the configured Neumann problem(s)", sl::Stage::Solve},
      {"verify-bound", "solve, scan truncations and check the L-infinity bound", sl::Stage::VerifyBound},
      {"psweep", "gradient-integrability sweep over p and contrast", sl::Stage::Sweep},
      {"run", "full pipeline as configured", sl::Stage::All},
  };
  Flags flags;
  std::optional<sl::Stage> chosen;
  for (const auto& e : entries) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_flags(cmd, flags);
    cmd->callback([&chosen, stage = e.stage] { chosen = stage; });
  }
  bool version = false;
  app.add_subcommand("version", "print tool and format versions")->callback([&version] { version = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  if (version) {
    std::cout << sl::kToolName << ' ' << sl::kToolVersion << '\n'
              << "report format " << sl::kReportFormatVersion << '\n'
              << "mesh format " << sl::kMeshFormat << '\n';
    return 0;
  }
  return run_stage(*chosen, flags);
}
