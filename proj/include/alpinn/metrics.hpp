#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alpinn/optim.hpp"

namespace alpinn {

struct TrialSummary {
  std::string config_hash;
  std::uint64_t seed = 0;
  double final_error = std::numeric_limits<double>::quiet_NaN();
  double best_error = std::numeric_limits<double>::quiet_NaN();
  double final_mse = std::numeric_limits<double>::quiet_NaN();
  double best_mse = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;
  int epochs_run = 0;
  double mean_epoch_ms = 0.0;
  double lambda_norm_max = 0.0;
  double lambda_norm_final = 0.0;
  bool diverged = false;
};

struct AggregateRow {
  std::string problem;
  std::string model;
  std::string strategy;
  int n_trials = 0;
  double mean_best_err = std::numeric_limits<double>::quiet_NaN();
  double std_best_err = std::numeric_limits<double>::quiet_NaN();  // NaN when fewer than 2 trials
  double mean_final_err = std::numeric_limits<double>::quiet_NaN();
  int diverged_count = 0;
};

/// Mean and sample standard deviation of the best errors of the trials that
/// did not diverge. All trials must share one config hash.
AggregateRow aggregate(std::span<const TrialSummary> trials);

/// Mean ms per epoch excluding the first 5 epochs; needs at least 10.
double epoch_timing(std::span<const double> epoch_ms);
double epoch_timing(const TrainRecord& record);

TrialSummary summarize(const TrainRecord& record, std::string config_hash, std::uint64_t seed);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string content_hash(std::string_view text);

double sample_std(std::span<const double> xs);

}  // namespace alpinn
