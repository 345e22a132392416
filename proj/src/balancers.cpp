#include "alpinn/balancers.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "alpinn/ad/tape.hpp"

namespace alpinn {

Strategy parse_strategy(std::string_view name) {
  if (name == "vanilla") return Strategy::vanilla;
  if (name == "penalty") return Strategy::penalty;
  if (name == "lagrange") return Strategy::lagrange;
  if (name == "al") return Strategy::augmented_lagrangian;
  if (name == "sa") return Strategy::soft_attention;
  if (name == "lra") return Strategy::lra;
  throw std::invalid_argument("unknown strategy '" + std::string(name) +
                              "' (expected vanilla, penalty, lagrange, al, sa or lra)");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::penalty: return "penalty";
    case Strategy::lagrange: return "lagrange";
    case Strategy::augmented_lagrangian: return "al";
    case Strategy::soft_attention: return "sa";
    case Strategy::lra: return "lra";
  }
  return "?";
}

double beta_schedule(const BalancerConfig& cfg, long n) {
  if (n < 1) throw std::invalid_argument("beta_schedule: step must be >= 1");
  return cfg.beta_slope > 0.0 ? cfg.beta_slope * static_cast<double>(n) : cfg.beta;
}

bool BalancerState::has_multipliers() const {
  return config.strategy == Strategy::lagrange || config.strategy == Strategy::augmented_lagrangian;
}

BalancerState make_balancer(const BalancerConfig& cfg, std::size_t n_interior, int n_residuals,
                            const std::vector<std::size_t>& group_sizes, double residual_measure,
                            std::vector<double> group_measures) {
  if (n_interior == 0) throw std::invalid_argument("make_balancer: no interior points");
  if (group_measures.empty()) group_measures.assign(group_sizes.size(), 1.0);
  if (group_measures.size() != group_sizes.size()) throw std::invalid_argument("make_balancer: one measure per group");
  BalancerState s;
  s.config = cfg;
  s.residual_measure = residual_measure;
  s.group_measures = std::move(group_measures);
  for (std::size_t n : group_sizes) {
    if (n == 0) throw std::invalid_argument("make_balancer: empty constraint group");
  }
  switch (cfg.strategy) {
    case Strategy::lagrange:
    case Strategy::augmented_lagrangian:
      for (std::size_t n : group_sizes) s.lambdas.emplace_back(n, 0.0);
      break;
    case Strategy::soft_attention:
      s.residual_masks.assign(static_cast<std::size_t>(n_residuals), std::vector<double>(n_interior, 1.0));
      for (std::size_t n : group_sizes) s.group_masks.emplace_back(n, 1.0);
      break;
    case Strategy::lra:
      s.lra_weights.assign(group_sizes.size(), 1.0);
      break;
    default:
      break;
  }
  return s;
}

namespace {

double quadratic_coefficient(const BalancerState& s, std::size_t group) {
  switch (s.config.strategy) {
    case Strategy::vanilla:
    case Strategy::soft_attention:
      return 1.0;
    case Strategy::penalty:
      return beta_schedule(s.config, s.step);
    case Strategy::lagrange:
      return 0.0;
    case Strategy::augmented_lagrangian:
      return s.config.beta;
    case Strategy::lra:
      return s.lra_weights[group];
  }
  return 1.0;
}

double residual_measure(const BalancerState& s) { return s.config.measure_weights ? s.residual_measure : 1.0; }
double group_measure(const BalancerState& s, std::size_t g) { return s.config.measure_weights ? s.group_measures[g] : 1.0; }

void check_sizes(const BalancerState& s, std::size_t n_residuals, const std::vector<std::size_t>& group_sizes) {
  if (group_sizes.size() != s.n_groups()) {
    throw std::invalid_argument("assemble: expected " + std::to_string(s.n_groups()) + " constraint groups, got " +
                                std::to_string(group_sizes.size()));
  }
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    if (s.has_multipliers() && s.lambdas[g].size() != group_sizes[g]) {
      throw std::invalid_argument("assemble: group " + std::to_string(g) + " has " + std::to_string(group_sizes[g]) +
                                  " residuals but " + std::to_string(s.lambdas[g].size()) + " multipliers");
    }
    if (s.config.strategy == Strategy::soft_attention && s.group_masks[g].size() != group_sizes[g]) {
      throw std::invalid_argument("assemble: group " + std::to_string(g) + " size does not match its masks");
    }
  }
  if (s.config.strategy == Strategy::soft_attention && s.residual_masks.size() != n_residuals) {
    throw std::invalid_argument("assemble: residual equation count does not match the masks");
  }
}

template <class S>
S weighted_sum_squares(const std::vector<S>& v, const std::vector<double>* mask) {
  if (v.empty()) throw std::invalid_argument("assemble: empty residual list");
  auto term = [&](std::size_t j) {
    const double w = mask ? (*mask)[j] * (*mask)[j] : 1.0;
    return (v[j] * v[j]) * w;
  };
  S acc = term(0);
  for (std::size_t j = 1; j < v.size(); ++j) acc = acc + term(j);
  return acc;
}

}  // namespace

template <class S>
ScalarLoss<S> assemble_scalar(const BalancerState& s, const std::vector<std::vector<S>>& residuals,
                              const std::vector<std::vector<S>>& constraints,
                              const std::vector<std::vector<S>>* lambda_override) {
  std::vector<std::size_t> sizes;
  for (const auto& c : constraints) sizes.push_back(c.size());
  check_sizes(s, residuals.size(), sizes);
  if (residuals.empty()) throw std::invalid_argument("assemble: no residual equations");
  const bool sa = s.config.strategy == Strategy::soft_attention;

  ScalarLoss<S> out;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    if (sa && s.residual_masks[k].size() != residuals[k].size()) {
      throw std::invalid_argument("assemble: interior point count does not match the masks");
    }
    const double scale = residual_measure(s) / static_cast<double>(residuals[k].size());
    S term = weighted_sum_squares(residuals[k], sa ? &s.residual_masks[k] : nullptr) * scale;
    out.residual_term = k == 0 ? term : out.residual_term + term;
  }
  S total = out.residual_term;
  for (std::size_t g = 0; g < constraints.size(); ++g) {
    const auto& c = constraints[g];
    const double scale = group_measure(s, g) / static_cast<double>(c.size());
    S pen = weighted_sum_squares(c, sa ? &s.group_masks[g] : nullptr) * (quadratic_coefficient(s, g) * scale);
    out.penalty_terms.push_back(pen);
    total = total + pen;
    if (s.has_multipliers()) {
      auto lam = [&](std::size_t j) -> S {
        if (lambda_override) return (*lambda_override)[g][j] * c[j];
        return c[j] * s.lambdas[g][j];
      };
      S m = lam(0);
      for (std::size_t j = 1; j < c.size(); ++j) m = m + lam(j);
      m = m * scale;
      out.multiplier_terms.push_back(m);
      total = total + m;
    }
  }
  out.total = total;
  return out;
}

template ScalarLoss<double> assemble_scalar(const BalancerState&, const std::vector<std::vector<double>>&,
                                            const std::vector<std::vector<double>>&,
                                            const std::vector<std::vector<double>>*);
template ScalarLoss<long double> assemble_scalar(const BalancerState&, const std::vector<std::vector<long double>>&,
                                                 const std::vector<std::vector<long double>>&,
                                                 const std::vector<std::vector<long double>>*);
template ScalarLoss<ad::Var> assemble_scalar(const BalancerState&, const std::vector<std::vector<ad::Var>>&,
                                             const std::vector<std::vector<ad::Var>>&,
                                             const std::vector<std::vector<ad::Var>>*);

LossBreakdown assemble(const BalancerState& s, ad::Graph& g, const std::vector<ad::Tensor>& residuals,
                       const std::vector<ad::Tensor>& constraints) {
  std::vector<std::size_t> sizes;
  for (const auto& c : constraints) {
    if (c.rows() != 1) throw std::invalid_argument("assemble: constraint tensors must be single rows");
    sizes.push_back(static_cast<std::size_t>(c.cols()));
  }
  check_sizes(s, residuals.size(), sizes);
  if (residuals.empty()) throw std::invalid_argument("assemble: no residual equations");
  const bool sa = s.config.strategy == Strategy::soft_attention;

  LossBreakdown out;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    const ad::Tensor& r = residuals[k];
    if (r.rows() != 1 || r.cols() == 0) throw std::invalid_argument("assemble: residual tensors must be nonempty rows");
    const double scale = residual_measure(s) / static_cast<double>(r.cols());
    ad::Tensor weighted = sa ? g.mul(g.constant_row(s.residual_masks[k]), r) : r;
    ad::Tensor term = g.scale(g.sum_square(weighted), scale);
    out.residual_term = k == 0 ? term : g.add(out.residual_term, term);
  }
  ad::Tensor total = out.residual_term;
  for (std::size_t gi = 0; gi < constraints.size(); ++gi) {
    const ad::Tensor& c = constraints[gi];
    const double n = static_cast<double>(c.cols());
    const double mu = group_measure(s, gi);
    ad::Tensor ss = g.sum_square(c);
    out.group_mse.push_back(g.scale(ss, 1.0 / n));
    ad::Tensor pen = sa ? g.scale(g.sum_square(g.mul(g.constant_row(s.group_masks[gi]), c)), mu / n)
                        : g.scale(ss, quadratic_coefficient(s, gi) * mu / n);
    out.penalty_terms.push_back(pen);
    total = g.add(total, pen);
    if (s.has_multipliers()) {
      ad::Tensor m = g.scale(g.sum(g.mul(g.constant_row(s.lambdas[gi]), c)), mu / n);
      out.multiplier_terms.push_back(m);
      total = g.add(total, m);
    }
  }
  out.total = total;
  out.total_value = total.item();
  out.residual_value = out.residual_term.item();
  for (const auto& t : out.group_mse) out.group_mse_values.push_back(t.item());
  for (const auto& t : out.penalty_terms) out.penalty_values.push_back(t.item());
  for (const auto& t : out.multiplier_terms) out.multiplier_values.push_back(t.item());
  return out;
}

void ascend_lambda(BalancerState& s, const std::vector<std::vector<double>>& residual_values,
                   const std::vector<std::vector<double>>& constraint_values) {
  const double eta = s.config.eta_lambda;
  if (s.has_multipliers()) {
    if (constraint_values.size() != s.lambdas.size()) throw std::invalid_argument("ascend_lambda: group count mismatch");
    for (std::size_t g = 0; g < s.lambdas.size(); ++g) {
      auto& lam = s.lambdas[g];
      const auto& c = constraint_values[g];
      if (c.size() != lam.size()) throw std::invalid_argument("ascend_lambda: group size mismatch");
      const double step = eta * group_measure(s, g) / static_cast<double>(c.size());
      for (std::size_t j = 0; j < c.size(); ++j) lam[j] += step * c[j];
    }
    return;
  }
  if (s.config.strategy == Strategy::soft_attention) {
    auto ascend_masks = [eta](std::vector<double>& m, const std::vector<double>& c, double mu) {
      if (c.size() != m.size()) throw std::invalid_argument("ascend_lambda: mask size mismatch");
      const double step = 2.0 * eta * mu / static_cast<double>(c.size());
      for (std::size_t j = 0; j < c.size(); ++j) m[j] += step * m[j] * c[j] * c[j];
    };
    if (residual_values.size() != s.residual_masks.size()) throw std::invalid_argument("ascend_lambda: residual count mismatch");
    if (constraint_values.size() != s.group_masks.size()) throw std::invalid_argument("ascend_lambda: group count mismatch");
    for (std::size_t k = 0; k < residual_values.size(); ++k) ascend_masks(s.residual_masks[k], residual_values[k], residual_measure(s));
    for (std::size_t g = 0; g < constraint_values.size(); ++g) ascend_masks(s.group_masks[g], constraint_values[g], group_measure(s, g));
    return;
  }
  throw std::logic_error("ascend_lambda: strategy '" + std::string(to_string(s.config.strategy)) +
                         "' has no ascent variables");
}

std::vector<std::size_t> lra_update(BalancerState& s, double max_grad_residual, const std::vector<double>& mean_grad_group) {
  if (s.config.strategy != Strategy::lra) throw std::logic_error("lra_update: strategy is not lra");
  if (mean_grad_group.size() != s.lra_weights.size()) throw std::invalid_argument("lra_update: group count mismatch");
  std::vector<std::size_t> skipped;
  const double a = s.config.lra_alpha;
  for (std::size_t g = 0; g < s.lra_weights.size(); ++g) {
    if (!(mean_grad_group[g] > 0.0)) {
      spdlog::warn("lra: group {} has zero mean gradient; weight left at {}", g, s.lra_weights[g]);
      skipped.push_back(g);
      continue;
    }
    const double w_hat = max_grad_residual / mean_grad_group[g];
    s.lra_weights[g] = (1.0 - a) * s.lra_weights[g] + a * w_hat;
  }
  return skipped;
}

std::vector<double> lambda_norms(const BalancerState& s) {
  auto rms = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
  };
  std::vector<double> out(s.n_groups(), 0.0);
  if (s.has_multipliers()) {
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = rms(s.lambdas[g]);
  } else if (s.config.strategy == Strategy::soft_attention) {
    for (std::size_t g = 0; g < out.size(); ++g) out[g] = rms(s.group_masks[g]);
  }
  return out;
}

void advance(BalancerState& s) { ++s.step; }

}  // namespace alpinn
