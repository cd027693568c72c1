// Command-line driver: run, compare, sweep, doublewell, trajectories.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tunnel/errors.hpp"
#include "tunnel/output.hpp"
#include "tunnel/scenario.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> step;
  std::vector<std::string> formats;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
  auto* config = cmd->add_option("--config", opts.config_path, "Scenario JSON file")->check(CLI::ExistingFile);
  if (config_required) config->required();
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", opts.seed, "Trajectory seed (overrides trajectories.seed)");
  cmd->add_option("--step", opts.step, "RK4 step (overrides step)");
  cmd->add_option("--format", opts.formats, "Output formats: csv, json, svg (repeatable)");
  cmd->add_option("--threads", opts.threads, "Worker threads, 0 = OpenMP default");
}

tunnel::ScenarioConfig load(const CommonOptions& opts) {
  tunnel::ScenarioConfig cfg = tunnel::load_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.seed) {
    if (!cfg.jumps) throw tunnel::ConfigError("--seed needs a trajectories section in the config");
    cfg.jumps->seed = *opts.seed;
  }
  if (opts.step) cfg.step = *opts.step;
  if (!opts.formats.empty()) {
    cfg.formats.clear();
    for (const auto& f : opts.formats) cfg.formats.push_back(tunnel::output_format_from_string(f));
  }
  if (opts.threads) cfg.threads = *opts.threads;
  cfg.validate();
  return cfg;
}

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << f.string() << '\n';
}

int report_comparison(const tunnel::ComparisonReport& report, const std::filesystem::path& dir) {
  tunnel::atomic_write(dir / "compare_report.json", report.to_json().dump(2) + "\n");
  std::cout << (dir / "compare_report.json").string() << '\n';
  if (!report.typo_notes.empty()) {
    tunnel::atomic_write(dir / "typo_notes.md", report.typo_notes_markdown());
    std::cout << (dir / "typo_notes.md").string() << '\n';
  }
  for (const auto& p : report.pairs) {
    std::cout << tunnel::to_string(p.first) << " vs " << tunnel::to_string(p.second)
              << ": max " << p.max_abs << ", mean " << p.mean_abs << ", "
              << (p.pass ? "pass" : "FAIL") << '\n';
  }
  return report.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoherence of a tunnelling particle reduced to a two-level open system"};
  app.require_subcommand(1);

  CommonOptions run_opts, traj_opts, dw_opts, sweep_opts, cmp_opts;
  std::vector<std::string> axes;
  std::string run_dir;

  auto* run_cmd = app.add_subcommand("run", "Propagate a scenario with its configured backends");
  add_common(run_cmd, run_opts);
  auto* traj_cmd = app.add_subcommand("trajectories", "Run only the quantum-jump ensemble");
  add_common(traj_cmd, traj_opts);
  auto* dw_cmd = app.add_subcommand("doublewell", "Export the double-well spectrum and doublet");
  add_common(dw_cmd, dw_opts);
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter and tabulate summaries");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", axes, "name=v1,v2,... with name in omega,k1,k2,theta,v0")->required();
  auto* cmp_cmd = app.add_subcommand("compare", "Pairwise backend deviations and closed-form notes");
  add_common(cmp_cmd, cmp_opts, false);
  cmp_cmd->add_option("--run", run_dir, "Directory written by `run` (instead of --config)")
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run_cmd) {
      const auto outputs = tunnel::run(load(run_opts));
      print_files(outputs.files);
      std::cout << outputs.manifest.string() << '\n';
    } else if (*traj_cmd) {
      tunnel::ScenarioConfig cfg = load(traj_opts);
      cfg.backends = {tunnel::Backend::trajectories};
      cfg.validate();
      const auto outputs = tunnel::run(cfg);
      print_files(outputs.files);
      std::cout << outputs.manifest.string() << '\n';
    } else if (*dw_cmd) {
      print_files(tunnel::export_doublewell(load(dw_opts)));
    } else if (*sweep_cmd) {
      const tunnel::ScenarioConfig cfg = load(sweep_opts);
      const tunnel::SweepAxis axis = tunnel::parse_axis(axes);
      const auto rows = tunnel::sweep(cfg, axis, cfg.threads);
      const auto path = cfg.output_dir / ("sweep_" + axis.parameter + ".csv");
      tunnel::atomic_write(path, tunnel::sweep_csv(axis, rows));
      std::cout << path.string() << '\n';
    } else if (*cmp_cmd) {
      if (run_dir.empty() == cmp_opts.config_path.empty()) {
        throw tunnel::ConfigError("compare needs exactly one of --config or --run");
      }
      if (!run_dir.empty()) {
        std::optional<tunnel::ScenarioConfig> cfg;
        const auto results = tunnel::load_run(run_dir, &cfg);
        const std::filesystem::path out = cmp_opts.out_dir.empty() ? std::filesystem::path(run_dir)
                                                                   : std::filesystem::path(cmp_opts.out_dir);
        return report_comparison(tunnel::compare(results, cfg ? &*cfg : nullptr), out);
      }
      const tunnel::ScenarioConfig cfg = load(cmp_opts);
      const auto result = tunnel::simulate(cfg);
      return report_comparison(tunnel::compare(result.results, &cfg), cfg.output_dir);
    }
  } catch (const tunnel::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const tunnel::ResolutionError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    // ConfigError and DomainError.
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const tunnel::StructuralError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
