#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alpinn/ad/graph.hpp"

namespace alpinn {

enum class Strategy { vanilla, penalty, lagrange, augmented_lagrangian, soft_attention, lra };

/// vanilla | penalty | lagrange | al | sa | lra
Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct BalancerConfig {
  Strategy strategy = Strategy::augmented_lagrangian;
  double beta = 1.0;
  double beta_slope = 0.0;  // penalty only: beta_n = slope * n when positive
  double eta_lambda = 1.0;
  double lra_alpha = 0.1;
  int lra_every = 10;
  bool measure_weights = false;
};

/// beta_n for step n >= 1.
double beta_schedule(const BalancerConfig& cfg, long n);

struct BalancerState {
  BalancerConfig config;
  std::vector<std::vector<double>> lambdas;         // lagrange / al: one per constraint point
  std::vector<std::vector<double>> residual_masks;  // sa: one per residual equation and interior point
  std::vector<std::vector<double>> group_masks;     // sa: one per constraint point
  std::vector<double> lra_weights;                  // lra: one per group
  double residual_measure = 1.0;
  std::vector<double> group_measures;
  long step = 1;

  std::size_t n_groups() const { return group_measures.size(); }
  bool has_multipliers() const;
};

/// Measures default to 1; they only enter the loss with measure_weights = true.
BalancerState make_balancer(const BalancerConfig& cfg, std::size_t n_interior, int n_residuals,
                            const std::vector<std::size_t>& group_sizes, double residual_measure = 1.0,
                            std::vector<double> group_measures = {});

/// Loss pieces on the batched graph. Each residual / constraint tensor is one
/// row of pointwise values.
struct LossBreakdown {
  ad::Tensor total;
  ad::Tensor residual_term;
  std::vector<ad::Tensor> group_mse;  // unweighted (1/N_g) sum c^2, also used by lra
  std::vector<ad::Tensor> penalty_terms;
  std::vector<ad::Tensor> multiplier_terms;

  double total_value = 0.0;
  double residual_value = 0.0;
  std::vector<double> group_mse_values;
  std::vector<double> penalty_values;
  std::vector<double> multiplier_values;
};

LossBreakdown assemble(const BalancerState& state, ad::Graph& g, const std::vector<ad::Tensor>& residuals,
                       const std::vector<ad::Tensor>& constraints);

/// Same loss on plain numbers or Vars. `lambda_override` substitutes the
/// multipliers (e.g. with tape leaves to differentiate with respect to them).
template <class S>
struct ScalarLoss {
  S total{};
  S residual_term{};
  std::vector<S> penalty_terms;
  std::vector<S> multiplier_terms;
};

template <class S>
ScalarLoss<S> assemble_scalar(const BalancerState& state, const std::vector<std::vector<S>>& residuals,
                              const std::vector<std::vector<S>>& constraints,
                              const std::vector<std::vector<S>>* lambda_override = nullptr);

/// One ascent step on the multipliers (lagrange, al) or on the attention
/// masks (sa), using the pointwise values of the pass that produced the loss.
void ascend_lambda(BalancerState& state, const std::vector<std::vector<double>>& residual_values,
                   const std::vector<std::vector<double>>& constraint_values);

/// w_g <- (1 - alpha) w_g + alpha * max_grad_residual / mean_grad_group[g].
/// Groups with a zero mean gradient keep their weight; their indices are returned.
std::vector<std::size_t> lra_update(BalancerState& state, double max_grad_residual,
                                    const std::vector<double>& mean_grad_group);

/// sqrt(mean(lambda^2)) per group; the attention masks for sa; zeros otherwise.
std::vector<double> lambda_norms(const BalancerState& state);

void advance(BalancerState& state);

}  // namespace alpinn
