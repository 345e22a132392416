#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "alpinn/harness/config.hpp"
#include "alpinn/harness/runner.hpp"

namespace h = alpinn::harness;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> paper_defaults;
  int jobs = 0;
  std::string save_model;
  std::string load_model;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config_path, "Sectioned key = value config file (defaults when omitted)");
  cmd->add_option("--paper-defaults", c.paper_defaults, "Best hyperparameters for <problem> <model>")->expected(2);
  cmd->add_option("--jobs", c.jobs, "Concurrent trainings (default: ALPINN_JOBS or hardware threads)");
  cmd->add_option("--load-model", c.load_model, "Start every trial from these parameters");
  cmd->allow_extras();
}

/// File, then tuned defaults, then `--key value` / `--key=value` overrides.
h::ExperimentConfig build_config(const Common& c, const std::vector<std::string>& extras) {
  h::ExperimentConfig cfg = c.config_path.empty() ? h::ExperimentConfig{} : h::load_config(c.config_path);
  if (!c.paper_defaults.empty()) h::apply_paper_defaults(cfg, c.paper_defaults[0], c.paper_defaults[1]);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw h::ConfigError(0, "unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    std::string value;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw h::ConfigError(0, "--" + arg + ": missing value");
      value = extras[++i];
    }
    h::set_key(cfg, arg, value);
  }
  if (!c.load_model.empty()) cfg.load_model = c.load_model;
  h::validate(cfg);
  return cfg;
}

/// Rewrites `--key value` as `--key=value` so a value is never taken for the positional config path.
std::vector<std::string> join_values(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    const bool takes_one = arg.rfind("--", 0) == 0 && arg.size() > 2 && arg.find('=') == std::string::npos &&
                           arg != "--verbose" && arg != "--help" && arg != "--paper-defaults";
    if (takes_one && i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0) arg += "=" + std::string(argv[++i]);
    out.push_back(arg);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void report(const h::RunArtifacts& a) {
  std::printf("%s %s %s: mean best error %.4e", a.row.problem.c_str(), a.row.model.c_str(), a.row.strategy.c_str(),
              a.row.mean_best_err);
  if (a.row.n_trials >= 2) std::printf(" +- %.2e", a.row.std_best_err);
  std::printf(" over %d trial(s), %d diverged%s\n", a.row.n_trials, a.row.diverged_count,
              a.poor_fit ? " [poor_fit]" : "");
  std::printf("artifacts in %s\n", a.dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed network training under penalty, Lagrangian and augmented Lagrangian losses"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  Common train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train n_trials networks and write CSV, SVG and model artifacts");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--save-model", train_opts.save_model, "Also copy the best parameters to this path");

  Common sweep_opts;
  std::vector<std::string> vary;
  auto* sweep_cmd = app.add_subcommand("sweep", "One run per value of a config key");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--vary", vary, "key=v1,v2,...")->required();

  std::string plot_dir;
  std::string plot_kind = "trajectory";
  auto* plot_cmd = app.add_subcommand("plot", "Render an SVG from a run or sweep directory");
  plot_cmd->add_option("dir", plot_dir, "Run or sweep directory")->required();
  plot_cmd->add_option("--kind", plot_kind, "trajectory | heatmap | beta_sweep | lambda_norm");

  Common bench_opts;
  std::string strategies = "vanilla,al";
  int bench_epochs = 200;
  auto* bench_cmd = app.add_subcommand("bench", "Mean ms per epoch for each strategy on one problem and model");
  add_common(bench_cmd, bench_opts);
  bench_cmd->add_option("--strategies", strategies, "Comma-separated strategies");
  bench_cmd->add_option("--epochs", bench_epochs, "Epochs per strategy");

  try {
    app.parse(join_values(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*train_cmd) {
      const h::ExperimentConfig cfg = build_config(train_opts, train_cmd->remaining());
      const h::RunArtifacts a = h::run(cfg, train_opts.jobs);
      if (!train_opts.save_model.empty() && !a.model.empty()) {
        std::filesystem::copy_file(a.model, train_opts.save_model, std::filesystem::copy_options::overwrite_existing);
      }
      report(a);
      return a.exit_code;
    }
    if (*sweep_cmd) {
      const h::ExperimentConfig cfg = build_config(sweep_opts, sweep_cmd->remaining());
      if (vary.size() != 1) throw h::ConfigError(0, "--vary: give exactly one key=v1,v2,... list");
      const auto eq = vary.front().find('=');
      if (eq == std::string::npos) throw h::ConfigError(0, "--vary: expected key=v1,v2,...");
      const h::SweepResult s = h::sweep(cfg, vary.front().substr(0, eq), split(vary.front().substr(eq + 1), ','),
                                        sweep_opts.jobs);
      for (const auto& a : s.runs) report(a);
      std::printf("sweep table %s\n", s.table.string().c_str());
      return s.exit_code;
    }
    if (*plot_cmd) {
      const auto out = h::plot(plot_dir, h::parse_plot_kind(plot_kind));
      std::printf("%s\n", out.string().c_str());
      return 0;
    }
    if (*bench_cmd) {
      const h::ExperimentConfig cfg = build_config(bench_opts, bench_cmd->remaining());
      std::vector<alpinn::Strategy> list;
      for (const auto& s : split(strategies, ',')) list.push_back(alpinn::parse_strategy(s));
      const auto rows = h::bench(cfg, list, bench_epochs);
      for (const auto& r : rows) {
        std::printf("%-9s %-6s %9.2f ms/epoch (sd %.2f)\n", r.strategy.c_str(), r.model.c_str(), r.ms_mean, r.ms_std);
      }
      return 0;
    }
  } catch (const h::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
