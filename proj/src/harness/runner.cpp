#include "alpinn/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "alpinn/harness/csv.hpp"
#include "alpinn/harness/svg.hpp"

namespace alpinn::harness {

int default_jobs() {
  if (const char* env = std::getenv("ALPINN_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
    spdlog::warn("ignoring ALPINN_JOBS='{}' (expected a positive integer)", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, int jobs) {
  validate(cfg);
  const PdeProblem prob = problem(cfg);
  const Architecture arch = architecture(cfg, prob);
  const BalancerConfig bal = balancer_config(cfg);
  const std::string hash = config_hash(cfg);
  std::vector<TrialResult> out(static_cast<std::size_t>(cfg.n_trials));
  parallel_for(out.size(), jobs > 0 ? jobs : default_jobs(), [&](std::size_t i) {
    TrialResult& t = out[i];
    t.seed = cfg.seed + i;
    t.record = train(prob, arch, bal, cfg.grid, train_options(cfg, t.seed));
    t.summary = summarize(t.record, hash, t.seed);
    t.status = t.record.diverged ? "diverged" : t.record.stopped_early ? "early_stop" : "ok";
    if (t.record.diverged) {
      spdlog::warn("{} {} seed {} diverged at epoch {}: {}", cfg.problem, to_string(cfg.strategy), t.seed,
                   t.record.rows.size() + 1, t.record.message);
    }
  });
  return out;
}

std::string trajectory_csv(const TrainRecord& record, std::size_t n_groups) {
  std::vector<std::string> header{"epoch", "total_loss", "residual_loss"};
  for (std::size_t g = 0; g < n_groups; ++g) header.push_back("constraint_loss_g" + std::to_string(g + 1));
  for (std::size_t g = 0; g < n_groups; ++g) header.push_back("lambda_l2_g" + std::to_string(g + 1));
  header.push_back("rel_l2_error");
  header.push_back("wall_ms");
  CsvWriter w(header);
  for (const EpochRow& r : record.rows) {
    std::vector<std::string> f{std::to_string(r.epoch), csv_number(r.total_loss), csv_number(r.residual_loss)};
    for (std::size_t g = 0; g < n_groups; ++g) {
      f.push_back(g < r.constraint_loss.size() ? csv_number(r.constraint_loss[g]) : std::string());
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      f.push_back(g < r.lambda_norm.size() ? csv_number(r.lambda_norm[g]) : std::string());
    }
    f.push_back(csv_number(r.rel_l2));
    f.push_back(csv_number(r.wall_ms));
    w.row(f);
  }
  return w.text();
}

std::string trials_csv(const std::vector<TrialResult>& trials, bool timing) {
  CsvWriter w({"seed", "status", "best_error", "best_epoch", "final_error", "epochs_run", "mean_epoch_ms",
               "lambda_norm_max", "lambda_norm_final", "message"});
  for (const TrialResult& t : trials) {
    const TrialSummary& s = t.summary;
    w.row({std::to_string(t.seed), t.status, csv_number(std::isfinite(s.best_error) ? s.best_error : NAN),
           std::to_string(s.best_epoch), csv_number(s.final_error), std::to_string(s.epochs_run),
           csv_number(timing ? s.mean_epoch_ms : 0.0), csv_number(s.lambda_norm_max), csv_number(s.lambda_norm_final),
           t.record.message});
  }
  return w.text();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  CsvWriter w({"problem", "model", "strategy", "n_trials", "mean_best_err", "std_best_err", "mean_final_err",
               "diverged_count"});
  for (const AggregateRow& r : rows) {
    w.row({r.problem, r.model, r.strategy, std::to_string(r.n_trials), csv_number(r.mean_best_err),
           csv_number(r.std_best_err), csv_number(r.mean_final_err), std::to_string(r.diverged_count)});
  }
  return w.text();
}

std::string heatmap_csv(const PdeProblem& prob, const Architecture& arch, std::span<const double> theta, int eval_n) {
  const EvalGrid grid = make_eval_grid(prob, eval_n);
  const Evaluation ev = evaluate(arch, theta, grid);
  const int d = prob.input_dim();
  const Eigen::Index n = grid.n_per_axis;
  const Eigen::Index count = d == 2 ? grid.points.cols() : n * n;
  const Eigen::Index first = grid.points.cols() - count;
  const int ax0 = d - 2;
  CsvWriter w({prob.axis_names[static_cast<std::size_t>(ax0)], prob.axis_names[static_cast<std::size_t>(ax0 + 1)],
               "abs_err"});
  for (Eigen::Index j = first; j < grid.points.cols(); ++j) {
    w.row({csv_number(grid.points(ax0, j)), csv_number(grid.points(ax0 + 1, j)), csv_number(ev.abs_err(0, j))});
  }
  return w.text();
}

namespace {

std::string model_label(const ExperimentConfig& cfg) {
  if (cfg.model != "mlp") return cfg.model;
  std::string s = "mlp";
  for (int w : cfg.hidden) s += "-" + std::to_string(w);
  return s;
}

}  // namespace

RunArtifacts run(const ExperimentConfig& cfg, int jobs) {
  validate(cfg);
  const PdeProblem prob = problem(cfg);
  const Architecture arch = architecture(cfg, prob);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialResult> trials = run_trials(cfg, jobs);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunArtifacts a;
  a.dir = cfg.dir;
  fs::create_directories(a.dir);
  a.config = a.dir / "config.ini";
  write_text(a.config, serialize(cfg));

  const std::size_t n_groups = prob.constraints.size();
  for (const TrialResult& t : trials) {
    const fs::path p = a.dir / ("trajectory_seed" + std::to_string(t.seed) + ".csv");
    write_text(p, trajectory_csv(t.record, n_groups));
    a.trajectories.push_back(p);
  }
  a.trials = a.dir / "trials.csv";
  write_text(a.trials, trials_csv(trials, cfg.timing));

  std::vector<TrialSummary> summaries;
  for (const auto& t : trials) summaries.push_back(t.summary);
  a.row = aggregate(summaries);
  a.row.problem = cfg.problem;
  a.row.model = model_label(cfg);
  a.row.strategy = std::string(to_string(cfg.strategy));
  a.aggregate = a.dir / "aggregate.csv";
  write_text(a.aggregate, aggregate_csv({a.row}));

  const TrialResult* best = nullptr;
  for (const auto& t : trials) {
    if (t.record.diverged || !std::isfinite(t.summary.best_error)) continue;
    if (best == nullptr || t.summary.best_error < best->summary.best_error) best = &t;
  }
  if (best == nullptr) best = &trials.front();
  a.heatmap_csv = a.dir / "heatmap.csv";
  write_text(a.heatmap_csv, heatmap_csv(prob, arch, best->record.best_params, cfg.eval_n));
  a.heatmap_svg = plot(a.dir, PlotKind::heatmap);
  if (cfg.save_model) {
    a.model = a.dir / "model.bin";
    save_params(a.model, best->record.best_params);
  }

  const bool all_diverged = a.row.diverged_count == a.row.n_trials;
  a.poor_fit = all_diverged || !(a.row.mean_best_err <= 0.5);
  a.exit_code = all_diverged ? 2 : 0;
  if (a.poor_fit && !all_diverged) {
    spdlog::warn("{} {} {}: mean best error {:.3e} is above 0.5 (poor fit)", cfg.problem, a.row.model,
                 a.row.strategy, a.row.mean_best_err);
  }
  if (all_diverged) spdlog::error("every trial diverged");

  nlohmann::ordered_json j;
  j["config_hash"] = config_hash(cfg);
  j["problem"] = cfg.problem;
  j["model"] = a.row.model;
  j["strategy"] = a.row.strategy;
  j["n_trials"] = a.row.n_trials;
  j["diverged_count"] = a.row.diverged_count;
  j["mean_best_err"] = std::isfinite(a.row.mean_best_err) ? nlohmann::ordered_json(a.row.mean_best_err) : nlohmann::ordered_json();
  j["poor_fit"] = a.poor_fit;
  j["best_seed"] = best->seed;
  j["exit_code"] = a.exit_code;
  if (cfg.timing) j["seconds"] = seconds;
  a.summary = a.dir / "summary.json";
  write_text(a.summary, j.dump(2) + "\n");
  return a;
}

SweepResult sweep(const ExperimentConfig& cfg, const std::string& key, const std::vector<std::string>& values,
                  int jobs) {
  if (values.empty()) throw ConfigError(0, "sweep: no values given for '" + key + "'");
  std::vector<ExperimentConfig> configs;
  for (const std::string& v : values) {
    ExperimentConfig c = cfg;
    set_key(c, key, v);
    c.dir = (fs::path(cfg.dir) / (key + "=" + v)).string();
    validate(c);
    configs.push_back(std::move(c));
  }
  SweepResult s;
  s.key = key;
  s.values = values;
  CsvWriter w({"key", "value", "epochs", "n_trials", "mean_best_err", "std_best_err", "mean_final_err",
               "diverged_count"});
  bool any_ok = false;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    spdlog::info("sweep {} = {}", key, values[i]);
    s.runs.push_back(run(configs[i], jobs));
    const AggregateRow& r = s.runs.back().row;
    any_ok = any_ok || s.runs.back().exit_code == 0;
    w.row({key, values[i], std::to_string(configs[i].epochs), std::to_string(r.n_trials), csv_number(r.mean_best_err),
           csv_number(r.std_best_err), csv_number(r.mean_final_err), std::to_string(r.diverged_count)});
  }
  s.table = fs::path(cfg.dir) / "sweep.csv";
  w.save(s.table);
  s.exit_code = any_ok ? 0 : 2;
  return s;
}

std::vector<BenchRow> bench(const ExperimentConfig& cfg, const std::vector<Strategy>& strategies, int epochs) {
  validate(cfg);
  if (strategies.empty()) throw ConfigError(0, "bench: no strategies given");
  if (epochs < 10) throw ConfigError(0, "bench: need at least 10 epochs");
  const PdeProblem prob = problem(cfg);
  const Architecture arch = architecture(cfg, prob);
  std::vector<std::unique_ptr<Trainer>> trainers;
  for (Strategy s : strategies) {
    ExperimentConfig c = cfg;
    c.strategy = s;
    TrainOptions o = train_options(c, cfg.seed);
    o.eval_n = 2;
    trainers.push_back(std::make_unique<Trainer>(prob, arch, balancer_config(c), cfg.grid, o));
  }
  std::vector<std::vector<double>> ms(strategies.size());
  std::vector<bool> alive(strategies.size(), true);
  for (int e = 0; e < epochs; ++e) {
    for (std::size_t k = 0; k < trainers.size(); ++k) {
      if (!alive[k]) continue;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        trainers[k]->step(false);
      } catch (const std::exception& ex) {
        spdlog::warn("bench: {} stopped at epoch {}: {}", to_string(strategies[k]), e + 1, ex.what());
        alive[k] = false;
        continue;
      }
      ms[k].push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
  }
  std::vector<BenchRow> rows;
  CsvWriter w({"strategy", "model", "ms_mean", "ms_std"});
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    BenchRow r;
    r.strategy = std::string(to_string(strategies[k]));
    r.model = model_label(cfg);
    if (ms[k].size() >= 10) {
      r.ms_mean = epoch_timing(ms[k]);
      r.ms_std = sample_std(std::span<const double>(ms[k]).subspan(5));
    } else {
      r.ms_mean = r.ms_std = std::numeric_limits<double>::quiet_NaN();
    }
    w.row({r.strategy, r.model, csv_number(r.ms_mean), csv_number(r.ms_std)});
    rows.push_back(r);
  }
  w.save(fs::path(cfg.dir) / "bench.csv");
  return rows;
}

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "trajectory") return PlotKind::trajectory;
  if (name == "heatmap") return PlotKind::heatmap;
  if (name == "beta_sweep") return PlotKind::beta_sweep;
  if (name == "lambda_norm") return PlotKind::lambda_norm;
  throw std::invalid_argument("unknown plot kind '" + std::string(name) +
                              "' (expected trajectory, heatmap, beta_sweep or lambda_norm)");
}

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::trajectory: return "trajectory";
    case PlotKind::heatmap: return "heatmap";
    case PlotKind::beta_sweep: return "beta_sweep";
    case PlotKind::lambda_norm: return "lambda_norm";
  }
  return "?";
}

namespace {

/// Trajectory files of a run directory ordered by seed.
std::vector<std::pair<std::uint64_t, fs::path>> trajectory_files(const fs::path& dir) {
  static const std::regex pattern(R"(trajectory_seed(\d+)\.csv)");
  std::vector<std::pair<std::uint64_t, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.emplace_back(std::stoull(m[1].str()), entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Sweep subdirectories in sweep.csv order, falling back to name order.
std::vector<std::pair<std::string, fs::path>> sweep_runs(const fs::path& dir) {
  std::vector<std::pair<std::string, fs::path>> out;
  if (fs::exists(dir / "sweep.csv")) {
    const CsvTable t = CsvTable::load(dir / "sweep.csv");
    const auto keys = t.strings("key");
    const auto values = t.strings("value");
    for (std::size_t i = 0; i < t.rows(); ++i) {
      out.emplace_back(keys[i] + "=" + values[i], dir / (keys[i] + "=" + values[i]));
    }
    return out;
  }
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && !trajectory_files(entry.path()).empty()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& p : subdirs) out.emplace_back(p.filename().string(), p);
  return out;
}

std::vector<double> finite_only_x(const std::vector<double>& x, const std::vector<double>& y, std::vector<double>& ys) {
  std::vector<double> xs;
  ys.clear();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  return xs;
}

Series load_series(const fs::path& csv, const std::string& column, const std::string& label) {
  const CsvTable t = CsvTable::load(csv);
  if (t.rows() == 0) throw std::runtime_error(csv.string() + ": no rows to plot");
  Series s;
  s.label = label;
  s.x = finite_only_x(t.numbers("epoch"), t.numbers(column), s.y);
  return s;
}

fs::path plot_series(const fs::path& dir, PlotKind kind) {
  const bool lambda = kind == PlotKind::lambda_norm;
  LineChart chart;
  chart.x_label = "epoch";
  chart.log_y = true;
  const auto files = trajectory_files(dir);
  if (!files.empty()) {
    if (lambda) {
      const CsvTable t = CsvTable::load(files.front().second);
      if (t.rows() == 0) throw std::runtime_error(files.front().second.string() + ": no rows to plot");
      for (int g = 1; t.has("lambda_l2_g" + std::to_string(g)); ++g) {
        chart.series.push_back(load_series(files.front().second, "lambda_l2_g" + std::to_string(g),
                                           "group " + std::to_string(g)));
      }
      if (chart.series.empty()) throw std::runtime_error(files.front().second.string() + ": missing column 'lambda_l2_g1'");
    } else {
      for (const auto& [seed, path] : files) {
        chart.series.push_back(load_series(path, "total_loss", "seed " + std::to_string(seed)));
      }
    }
  } else {
    const auto runs = sweep_runs(dir);
    if (runs.empty()) throw std::runtime_error(dir.string() + ": no trajectory CSVs found");
    for (const auto& [label, sub] : runs) {
      const auto sub_files = trajectory_files(sub);
      if (sub_files.empty()) throw std::runtime_error(sub.string() + ": no trajectory CSVs found");
      chart.series.push_back(load_series(sub_files.front().second, lambda ? "lambda_l2_g1" : "total_loss", label));
    }
  }
  chart.title = lambda ? "L2 norm of the multipliers" : "Total loss";
  chart.y_label = lambda ? "||lambda||" : "loss";
  const fs::path out = dir / (std::string(to_string(kind)) + ".svg");
  write_text(out, render_line_chart(chart));
  return out;
}

}  // namespace

fs::path plot(const fs::path& dir, PlotKind kind) {
  switch (kind) {
    case PlotKind::trajectory:
    case PlotKind::lambda_norm: return plot_series(dir, kind);
    case PlotKind::heatmap: {
      const CsvTable t = CsvTable::load(dir / "heatmap.csv");
      if (t.rows() == 0) throw std::runtime_error((dir / "heatmap.csv").string() + ": no rows to plot");
      if (t.header().size() != 3) throw std::runtime_error("heatmap.csv: expected two coordinates and abs_err");
      Heatmap map;
      map.x_label = t.header()[0];
      map.y_label = t.header()[1];
      map.value_label = "|u - u_nn|";
      map.title = "Pointwise absolute error";
      map.x = t.numbers(map.x_label);
      map.y = t.numbers(map.y_label);
      map.value = t.numbers("abs_err");
      const fs::path out = dir / "heatmap.svg";
      write_text(out, render_heatmap(map));
      return out;
    }
    case PlotKind::beta_sweep: {
      const CsvTable t = CsvTable::load(dir / "sweep.csv");
      if (t.rows() == 0) throw std::runtime_error((dir / "sweep.csv").string() + ": no rows to plot");
      Series s;
      s.label = "mean best error";
      const auto keys = t.strings("key");
      s.x = t.numbers("value");
      s.y = t.numbers("mean_best_err");
      s.y_err = t.numbers("std_best_err");
      const auto epochs = t.numbers("epochs");
      LineChart chart;
      chart.title = "Error against " + keys.front();
      chart.x_label = keys.front();
      chart.y_label = "relative L2 error";
      chart.log_x = std::all_of(s.x.begin(), s.x.end(), [](double v) { return v > 0.0; });
      chart.log_y = true;
      chart.markers = true;
      char note[96];
      std::snprintf(note, sizeof note, "%.0f epochs per run", epochs.front());
      chart.note = note;
      chart.series.push_back(std::move(s));
      const fs::path out = dir / "beta_sweep.svg";
      write_text(out, render_line_chart(chart));
      return out;
    }
  }
  throw std::invalid_argument("plot: unknown kind");
}

}  // namespace alpinn::harness
