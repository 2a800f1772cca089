#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"
#include "kzk/experiment/config.hpp"
#include "kzk/experiment/predict.hpp"
#include "kzk/experiment/runner.hpp"
#include "kzk/experiment/validate.hpp"

namespace kzk::cli {

int run(int argc, char** argv) {
  CLI::App app{"Krylov spread complexity across the TFIM quantum phase transition"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* sweep = app.add_subcommand("sweep", "Lanczos sweep over tau_list at the end of the ramp");
  sweep->add_option("--config", config_path, "configuration file")->required();
  sweep->add_option("--out", out_dir, "output directory (overrides out_dir)");

  auto* evolve = app.add_subcommand("evolve", "complexity along the ramp at the field values t_grid");
  evolve->add_option("--config", config_path, "configuration file")->required();
  evolve->add_option("--out", out_dir, "output directory (overrides out_dir)");

  bool inject = false;
  auto* validate = app.add_subcommand("validate", "run the self-check suite and print a JSON report");
  validate->add_option("--config", config_path, "configuration file (checked for validity)");
  validate->add_flag("--inject-det-fault", inject, "add a check that feeds su2_log a unitary with det != 1");

  kzk::GeneralizedCriticalParams gp;
  std::optional<double> C_user;
  auto* predict = app.add_subcommand("predict", "generalized critical-surface scaling prediction");
  predict->add_option("--d", gp.d, "spatial dimension")->required();
  predict->add_option("--D", gp.D, "defect dimension")->required();
  predict->add_option("--alpha", gp.alpha, "scaling exponent alpha")->required();
  predict->add_option("--L", gp.L, "linear size")->required();
  predict->add_option("--tau", gp.tau, "quench time")->required();
  predict->add_option("--C", C_user, "constant C (default: TFIM value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  kzk::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = kzk::load_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      cfg.resolved_threads();
    }
    if (predict->parsed()) gp.validate();
    if (predict->parsed() && C_user && !(*C_user > 0.0)) throw kzk::DomainError("C must be positive");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sweep->parsed()) {
      const auto rep = kzk::run_sweep(cfg);
      for (const auto& e : rep.entries) {
        if (e.ok)
          std::printf("tau=%g K1=%.6g K2=%.6g K3=%.6g kappa1=%.6g (%.1fs)\n", e.tau, e.result.K.K1,
                      e.result.K.K2, e.result.K.K3, e.kappa.K1, e.wall_seconds);
        else
          std::fprintf(stderr, "tau=%g failed: %s\n", e.tau, e.error.c_str());
      }
      std::printf("wrote %s\n", (cfg.out_dir / "manifest.json").string().c_str());
      return rep.ok ? kExitOk : kExitRuntime;
    }
    if (evolve->parsed()) {
      const auto rep = kzk::run_time_evolution(cfg);
      for (const auto& r : rep.rows)
        if (!r.ok) std::fprintf(stderr, "tau=%g g=%g failed: %s\n", r.tau, r.g, r.error.c_str());
      std::printf("wrote %s\n", (cfg.out_dir / "timeseries.csv").string().c_str());
      return rep.ok ? kExitOk : kExitRuntime;
    }
    if (validate->parsed()) {
      const auto rep = kzk::run_validate({inject});
      std::cout << rep.to_json().dump(2) << "\n";
      return rep.all_passed() ? kExitOk : kExitRuntime;
    }
    if (predict->parsed()) {
      std::cout << kzk::run_predict(gp, C_user).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const kzk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace kzk::cli
