#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alpinn/ad/graph.hpp"
#include "alpinn/balancers.hpp"
#include "alpinn/network.hpp"
#include "alpinn/problems.hpp"

namespace alpinn {

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(std::size_t index, double value);
  std::size_t index() const { return index_; }
  double value() const { return value_; }

 private:
  std::size_t index_;
  double value_;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::size_t n_params, double lr);

/// One bias-corrected Adam step. Throws NonFiniteGradient before touching any
/// state if a gradient entry is NaN or infinite.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct EvalGrid {
  Eigen::MatrixXd points;  // dim x N
  Eigen::MatrixXd exact;   // outputs x N
  int n_per_axis = 0;
};

/// n_per_axis <= 0 picks 100 for 2D problems and 21 for 3D.
EvalGrid make_eval_grid(const PdeProblem& problem, int n_per_axis = 0);

struct Evaluation {
  double rel_l2 = 0.0;
  double mse = 0.0;
  Eigen::MatrixXd abs_err;  // outputs x N
};

/// Relative L2 error over every output and grid point.
Evaluation evaluate(const Architecture& arch, std::span<const double> theta, const EvalGrid& grid);
/// Same metrics for an arbitrary prediction.
Evaluation compare(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& exact);

struct TrainOptions {
  int epochs = 1000;
  double eta_theta = 1e-3;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::kaiming_uniform;
  int eval_every = 100;
  int eval_n = 0;
  bool early_stop = true;
  int patience = 20;
  bool timing = false;  // record wall-clock ms in rows (rows are otherwise reproducible bytes)
  std::vector<double> initial_params;  // overrides the seeded init when nonempty
};

struct EpochRow {
  int epoch = 0;
  double total_loss = 0.0;
  double residual_loss = 0.0;
  std::vector<double> constraint_loss;  // unweighted mean squared constraint residual per group
  std::vector<double> lambda_norm;
  double rel_l2 = std::numeric_limits<double>::quiet_NaN();  // NaN on epochs without evaluation
  double mse = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;

  bool evaluated() const { return rel_l2 == rel_l2; }
};

struct TrainRecord {
  std::vector<EpochRow> rows;
  std::vector<double> epoch_ms;  // always measured, independent of TrainOptions::timing
  int best_epoch = 0;
  double best_error = std::numeric_limits<double>::infinity();
  double best_mse = std::numeric_limits<double>::infinity();
  std::vector<double> best_params;
  std::vector<double> final_params;
  double final_error = std::numeric_limits<double>::quiet_NaN();
  double final_mse = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  bool stopped_early = false;
  std::string message;
  BalancerState balancer;
};

/// Full-batch descent-ascent loop for one network on one problem.
class Trainer {
 public:
  Trainer(PdeProblem problem, Architecture arch, const BalancerConfig& balancer, const GridSpec& grid,
          TrainOptions opts);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// One epoch: forward, loss, reverse, Adam on theta, then ascent on the
  /// balancer variables. Evaluates the pre-step parameters when `evaluate` is set.
  /// Throws NonFiniteGradient, or std::runtime_error on a non-finite loss.
  EpochRow step(bool evaluate);

  /// Loss pieces and pointwise residuals at the current parameters, without updating anything.
  LossBreakdown loss(std::vector<std::vector<double>>* residual_values = nullptr,
                     std::vector<std::vector<double>>* constraint_values = nullptr);
  /// Flat gradient of the current total loss.
  std::vector<double> gradient();

  const std::vector<double>& params() const { return theta_; }
  void set_params(std::vector<double> theta);
  const BalancerState& balancer() const { return state_; }
  BalancerState& balancer() { return state_; }
  const PdeProblem& problem() const { return problem_; }
  const Architecture& architecture() const { return arch_; }
  const SampledGrid& grid() const { return grid_; }
  const EvalGrid& eval_grid() const { return eval_; }
  int epoch() const { return epoch_; }

 private:
  struct Pass;
  Pass build();

  PdeProblem problem_;
  Architecture arch_;
  TrainOptions opts_;
  SampledGrid grid_;
  EvalGrid eval_;
  Eigen::MatrixXd all_points_;
  std::vector<std::vector<double>> forcing_;
  std::vector<std::vector<double>> targets_;
  std::vector<std::vector<std::vector<double>>> normals_;  // per group, per axis
  std::vector<double> theta_;
  std::vector<double> grad_;
  AdamState adam_;
  BalancerState state_;
  std::unique_ptr<ad::Graph> graph_;
  int epoch_ = 0;
};

/// Runs `epochs` epochs (fewer with early stopping), evaluating on epoch 1,
/// every `eval_every` epochs and on the last epoch. Divergence ends the run
/// and is reported in the record instead of thrown.
TrainRecord train(const PdeProblem& problem, const Architecture& arch, const BalancerConfig& balancer,
                  const GridSpec& grid, const TrainOptions& opts);

}  // namespace alpinn
