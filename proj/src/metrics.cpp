#include "alpinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace alpinn {

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

AggregateRow aggregate(std::span<const TrialSummary> trials) {
  AggregateRow row;
  row.n_trials = static_cast<int>(trials.size());
  if (trials.empty()) return row;
  for (const auto& t : trials) {
    if (t.config_hash != trials.front().config_hash) {
      throw std::invalid_argument("aggregate: trials come from different configs (" + trials.front().config_hash +
                                  " vs " + t.config_hash + ")");
    }
  }
  // sort by seed so the sums do not depend on the order trials finished in
  std::vector<TrialSummary> sorted(trials.begin(), trials.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
  std::vector<double> best, final;
  for (const auto& t : sorted) {
    if (t.diverged) {
      ++row.diverged_count;
      continue;
    }
    best.push_back(t.best_error);
    final.push_back(t.final_error);
  }
  if (!best.empty()) {
    row.mean_best_err = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
    row.mean_final_err = std::accumulate(final.begin(), final.end(), 0.0) / static_cast<double>(final.size());
    row.std_best_err = sample_std(best);
  }
  return row;
}

double epoch_timing(std::span<const double> ms) {
  constexpr std::size_t warmup = 5;
  if (ms.size() < 10) throw std::invalid_argument("epoch_timing: need at least 10 epochs");
  return std::accumulate(ms.begin() + warmup, ms.end(), 0.0) / static_cast<double>(ms.size() - warmup);
}

double epoch_timing(const TrainRecord& record) { return epoch_timing(record.epoch_ms); }

TrialSummary summarize(const TrainRecord& rec, std::string config_hash, std::uint64_t seed) {
  TrialSummary s;
  s.config_hash = std::move(config_hash);
  s.seed = seed;
  s.diverged = rec.diverged;
  s.best_error = rec.best_error;
  s.best_mse = rec.best_mse;
  s.best_epoch = rec.best_epoch;
  s.final_error = rec.final_error;
  s.final_mse = rec.final_mse;
  s.epochs_run = static_cast<int>(rec.rows.size());
  if (!rec.epoch_ms.empty()) {
    s.mean_epoch_ms = rec.epoch_ms.size() >= 10 ? epoch_timing(rec)
                                                : std::accumulate(rec.epoch_ms.begin(), rec.epoch_ms.end(), 0.0) /
                                                      static_cast<double>(rec.epoch_ms.size());
  }
  for (const auto& row : rec.rows) {
    for (double l : row.lambda_norm) s.lambda_norm_max = std::max(s.lambda_norm_max, l);
  }
  if (!rec.rows.empty()) {
    const auto& last = rec.rows.back().lambda_norm;
    s.lambda_norm_final = last.empty() ? 0.0 : *std::max_element(last.begin(), last.end());
  }
  return s;
}

std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace alpinn
