#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "alpinn/harness/config.hpp"
#include "alpinn/metrics.hpp"
#include "alpinn/optim.hpp"

namespace alpinn::harness {

namespace fs = std::filesystem;

/// ALPINN_JOBS when set to a positive integer, else the hardware thread count.
int default_jobs();

/// Runs fn(0..n-1) on at most `jobs` worker threads; rethrows the first failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct TrialResult {
  std::uint64_t seed = 0;
  TrainRecord record;
  TrialSummary summary;
  std::string status;  // ok | early_stop | diverged
};

/// Trials for seeds seed..seed+n_trials-1, ordered by seed.
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, int jobs);

struct RunArtifacts {
  fs::path dir;
  fs::path config;
  std::vector<fs::path> trajectories;
  fs::path trials;
  fs::path aggregate;
  fs::path heatmap_csv;
  fs::path heatmap_svg;
  fs::path model;  // empty when save_model is off
  fs::path summary;
  AggregateRow row;
  bool poor_fit = false;  // mean best error above 0.5 or no trial survived
  int exit_code = 0;      // 0 ok, 2 every trial diverged
};

/// Trains every trial and writes all artifacts into cfg.dir from the calling thread.
RunArtifacts run(const ExperimentConfig& cfg, int jobs = 0);

/// Pieces of `run`, exposed for the bindings and tests.
std::string trajectory_csv(const TrainRecord& record, std::size_t n_groups);
std::string trials_csv(const std::vector<TrialResult>& trials, bool timing);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
/// Pointwise absolute error of `theta` on the evaluation grid, as CSV with
/// two coordinate columns. 3D problems use the final time slice and output 0.
std::string heatmap_csv(const PdeProblem& problem, const Architecture& arch, std::span<const double> theta,
                        int eval_n);

struct SweepResult {
  std::string key;
  std::vector<std::string> values;
  std::vector<RunArtifacts> runs;
  fs::path table;
  int exit_code = 0;
};

/// One run per value of `key`, each in cfg.dir/<key>=<value>, plus sweep.csv.
SweepResult sweep(const ExperimentConfig& cfg, const std::string& key, const std::vector<std::string>& values,
                  int jobs = 0);

struct BenchRow {
  std::string strategy;
  std::string model;
  double ms_mean = 0.0;
  double ms_std = 0.0;
};

/// Interleaved timing pass: every strategy advances one epoch in turn so drift
/// in machine load hits all of them equally. Writes cfg.dir/bench.csv.
std::vector<BenchRow> bench(const ExperimentConfig& cfg, const std::vector<Strategy>& strategies, int epochs = 200);

enum class PlotKind { trajectory, heatmap, beta_sweep, lambda_norm };
PlotKind parse_plot_kind(std::string_view name);
std::string_view to_string(PlotKind kind);

/// Renders from the CSVs in `dir` and writes <kind>.svg there; returns its path.
/// Throws without writing anything when the inputs are missing or empty.
fs::path plot(const fs::path& dir, PlotKind kind);

}  // namespace alpinn::harness
