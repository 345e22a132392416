#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alpinn/balancers.hpp"
#include "alpinn/network.hpp"
#include "alpinn/optim.hpp"
#include "alpinn/problems.hpp"

namespace alpinn::harness {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what);
  int line() const { return line_; }  // 0 when not tied to a line

 private:
  int line_;
};

struct ExperimentConfig {
  // [experiment]
  std::string problem = "helmholtz";
  std::string model = "M2";  // M1..M4, branched, or mlp (uses `hidden`)
  std::vector<int> hidden{64, 64};
  bool residual = false;
  FeatureMap feature_map = FeatureMap::none;
  double feature_scale = 1.0;
  InitScheme init = InitScheme::kaiming_uniform;
  double nu = 0.01;
  // [balancer]
  Strategy strategy = Strategy::augmented_lagrangian;
  double beta = 500.0;
  double beta_slope = 0.0;
  double eta_lambda = 1.0;
  double lra_alpha = 0.1;
  int lra_every = 10;
  bool measure_weights = false;
  // [training]
  int epochs = 1000;
  double eta_theta = 1e-4;
  int n_trials = 1;
  std::uint64_t seed = 0;
  int eval_every = 100;
  int eval_n = 0;
  bool early_stop = true;
  int patience = 20;
  bool timing = false;
  std::string load_model;  // initial parameters for every trial when set
  // [grid]
  GridSpec grid;  // zero fields take the problem's defaults
  // [output]
  std::string dir = "runs/out";
  bool save_model = true;
};

/// Every key as "section.key", in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one key; `key` may be "section.key" or a bare key. Throws ConfigError.
void set_key(ExperimentConfig& cfg, std::string_view key, std::string_view value, int line = 0);
std::string get_key(const ExperimentConfig& cfg, std::string_view key);

/// Sectioned `key = value` text with `#` comments, then validated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& cfg);

/// Range and consistency checks; throws ConfigError naming the key.
void validate(const ExperimentConfig& cfg);

/// Best (beta, eta_lambda, eta_theta) per problem and model; also sets
/// problem, model, strategy = al and the default grid.
void apply_paper_defaults(ExperimentConfig& cfg, std::string_view problem, std::string_view model);

/// Hash of the serialized config without the seed and output keys, shared by all trials of a run.
std::string config_hash(const ExperimentConfig& cfg);

Architecture architecture(const ExperimentConfig& cfg, const PdeProblem& problem);
BalancerConfig balancer_config(const ExperimentConfig& cfg);
TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed);
PdeProblem problem(const ExperimentConfig& cfg);

}  // namespace alpinn::harness
