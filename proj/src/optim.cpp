#include "alpinn/optim.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace alpinn {

NonFiniteGradient::NonFiniteGradient(std::size_t index, double value)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "non-finite gradient at parameter " << index << " (value " << value << ")";
        return os.str();
      }()),
      index_(index),
      value_(value) {}

AdamState make_adam(std::size_t n_params, double lr) {
  if (!(lr >= 0.0)) throw std::invalid_argument("make_adam: learning rate must be nonnegative");
  AdamState s;
  s.m.assign(n_params, 0.0);
  s.v.assign(n_params, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
  if (params.size() != s.m.size() || grads.size() != s.m.size()) throw std::invalid_argument("adam_step: length mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) throw NonFiniteGradient(i, grads[i]);
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    params[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

EvalGrid make_eval_grid(const PdeProblem& problem, int n_per_axis) {
  if (n_per_axis <= 0) n_per_axis = problem.input_dim() >= 3 ? 21 : 100;
  EvalGrid e;
  e.n_per_axis = n_per_axis;
  e.points = uniform_grid(problem.domain, n_per_axis);
  e.exact.resize(problem.output_dim(), e.points.cols());
  std::vector<double> x(static_cast<std::size_t>(problem.input_dim()));
  for (Eigen::Index j = 0; j < e.points.cols(); ++j) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = e.points(static_cast<Eigen::Index>(k), j);
    const std::vector<double> u = problem.exact(std::span<const double>(x));
    for (std::size_t o = 0; o < u.size(); ++o) e.exact(static_cast<Eigen::Index>(o), j) = u[o];
  }
  return e;
}

Evaluation compare(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& exact) {
  if (prediction.rows() != exact.rows() || prediction.cols() != exact.cols()) {
    throw std::invalid_argument("evaluate: prediction and exact solution shapes differ");
  }
  const double norm = exact.norm();
  if (norm == 0.0) throw std::domain_error("evaluate: exact solution vanishes on the grid");
  Evaluation ev;
  ev.abs_err = (prediction - exact).cwiseAbs();
  ev.rel_l2 = ev.abs_err.norm() / norm;
  ev.mse = ev.abs_err.squaredNorm() / static_cast<double>(ev.abs_err.size());
  return ev;
}

Evaluation evaluate(const Architecture& arch, std::span<const double> theta, const EvalGrid& grid) {
  return compare(predict(arch, theta, grid.points), grid.exact);
}

// ---------------------------------------------------------------------------

struct Trainer::Pass {
  ParamTensors params;
  std::vector<ad::Tensor> residuals;
  std::vector<ad::Tensor> constraints;
  LossBreakdown loss;
};

namespace {

GridSpec resolve(const GridSpec& g, const GridSpec& defaults) {
  return {g.n_r > 0 ? g.n_r : defaults.n_r, g.n_b > 0 ? g.n_b : defaults.n_b, g.n_i > 0 ? g.n_i : defaults.n_i};
}

std::vector<std::vector<double>> row_values(const std::vector<ad::Tensor>& ts) {
  std::vector<std::vector<double>> out;
  for (const auto& t : ts) {
    const Eigen::MatrixXd& v = t.value();
    out.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

}  // namespace

Trainer::Trainer(PdeProblem problem, Architecture arch, const BalancerConfig& balancer, const GridSpec& grid,
                 TrainOptions opts)
    : problem_(std::move(problem)), arch_(std::move(arch)), opts_(std::move(opts)), graph_(std::make_unique<ad::Graph>()) {
  arch_.validate();
  if (arch_.input_dim != problem_.input_dim()) {
    throw std::invalid_argument("network input dimension " + std::to_string(arch_.input_dim) + " does not match problem '" +
                                problem_.name + "' (" + std::to_string(problem_.input_dim()) + ")");
  }
  if (arch_.output_dim() != problem_.output_dim()) {
    throw std::invalid_argument("network has " + std::to_string(arch_.output_dim()) + " outputs but problem '" +
                                problem_.name + "' needs " + std::to_string(problem_.output_dim()));
  }
  grid_ = sample(problem_, resolve(grid, problem_.default_grid), opts_.seed);
  const int d = problem_.input_dim();
  const Eigen::Index n_int = grid_.interior.size(), n_b = grid_.boundary.size(), n_i = grid_.initial.size();
  all_points_.resize(d, n_int + n_b + n_i);
  all_points_ << grid_.interior.x, grid_.boundary.x, grid_.initial.x;

  auto column = [](const Eigen::MatrixXd& m, Eigen::Index j) {
    return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
  };
  bool any_forcing = false;
  forcing_.assign(static_cast<std::size_t>(problem_.n_residuals), std::vector<double>(static_cast<std::size_t>(n_int)));
  for (Eigen::Index j = 0; j < n_int; ++j) {
    const auto x = column(grid_.interior.x, j);
    for (int k = 0; k < problem_.n_residuals; ++k) {
      const double f = problem_.forcing(k, x);
      forcing_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = f;
      any_forcing = any_forcing || f != 0.0;
    }
  }
  if (!any_forcing) forcing_.clear();

  std::vector<std::size_t> sizes;
  std::vector<double> measures;
  for (const ConstraintGroup& c : problem_.constraints) {
    const Region r = region_of(c.kind);
    const PointSet& ps = grid_.region(r);
    std::vector<double> tgt(static_cast<std::size_t>(ps.size()));
    for (Eigen::Index j = 0; j < ps.size(); ++j) {
      const auto x = column(ps.x, j);
      const auto n = column(ps.normal, j);
      tgt[static_cast<std::size_t>(j)] =
          r == Region::boundary ? c.target(x, n) : c.target(x, std::span<const double>());
    }
    targets_.push_back(std::move(tgt));
    std::vector<std::vector<double>> normals;
    if (c.kind == ConstraintKind::neumann_boundary) {
      for (int k = 0; k < d; ++k) {
        normals.emplace_back(static_cast<std::size_t>(ps.size()));
        for (Eigen::Index j = 0; j < ps.size(); ++j) normals.back()[static_cast<std::size_t>(j)] = ps.normal(k, j);
      }
    }
    normals_.push_back(std::move(normals));
    sizes.push_back(static_cast<std::size_t>(ps.size()));
    measures.push_back(problem_.region_measure(r));
  }

  theta_ = opts_.initial_params.empty() ? init_params(arch_, opts_.init, opts_.seed) : opts_.initial_params;
  if (theta_.size() != parameter_count(arch_)) throw std::invalid_argument("initial parameters have the wrong length");
  grad_.assign(theta_.size(), 0.0);
  adam_ = make_adam(theta_.size(), opts_.eta_theta);
  state_ = make_balancer(balancer, static_cast<std::size_t>(n_int), problem_.n_residuals, sizes,
                         problem_.region_measure(Region::interior), measures);
  eval_ = make_eval_grid(problem_, opts_.eval_n);
}

Trainer::~Trainer() = default;

void Trainer::set_params(std::vector<double> theta) {
  if (theta.size() != theta_.size()) throw std::invalid_argument("set_params: wrong length");
  theta_ = std::move(theta);
}

Trainer::Pass Trainer::build() {
  ad::Graph& g = *graph_;
  g.clear();
  Pass p;
  p.params = register_parameters(g, arch_, theta_);
  const std::vector<ad::Tensor> out = forward_batch(g, arch_, p.params, all_points_);
  const int d = problem_.input_dim();
  const Eigen::Index n_all = all_points_.cols();
  auto jet_of = [&](int o, Eigen::Index off, Eigen::Index n) {
    ad::Jet<ad::Tensor> j;
    j.dim = d;
    const ad::Tensor& y = out[static_cast<std::size_t>(o)];
    j.v = g.cols(y, off, n);
    for (int k = 0; k < d; ++k) {
      j.g[static_cast<std::size_t>(k)] = g.cols(y, n_all * (1 + k) + off, n);
      j.h[static_cast<std::size_t>(k)] = g.cols(y, n_all * (1 + d + k) + off, n);
    }
    return j;
  };
  auto offset = [&](Region r) -> Eigen::Index {
    switch (r) {
      case Region::interior: return 0;
      case Region::boundary: return grid_.interior.size();
      case Region::initial: return grid_.interior.size() + grid_.boundary.size();
    }
    return 0;
  };

  std::vector<ad::Jet<ad::Tensor>> interior;
  for (int o = 0; o < problem_.output_dim(); ++o) interior.push_back(jet_of(o, 0, grid_.interior.size()));
  p.residuals = problem_.residual(JetSpan<ad::Tensor>(interior));
  for (std::size_t k = 0; k < forcing_.size(); ++k) p.residuals[k] = g.sub(p.residuals[k], g.constant_row(forcing_[k]));

  for (std::size_t gi = 0; gi < problem_.constraints.size(); ++gi) {
    const ConstraintGroup& c = problem_.constraints[gi];
    const Region r = region_of(c.kind);
    const ad::Jet<ad::Tensor> u = jet_of(c.output, offset(r), grid_.region(r).size());
    std::vector<ad::Tensor> normal;
    for (const auto& row : normals_[gi]) normal.push_back(g.constant_row(row));
    const ad::Tensor op = constraint_operator<ad::Tensor>(c.kind, u, normal);
    p.constraints.push_back(g.sub(op, g.constant_row(targets_[gi])));
  }
  p.loss = assemble(state_, g, p.residuals, p.constraints);
  return p;
}

LossBreakdown Trainer::loss(std::vector<std::vector<double>>* residual_values,
                            std::vector<std::vector<double>>* constraint_values) {
  Pass p = build();
  if (residual_values) *residual_values = row_values(p.residuals);
  if (constraint_values) *constraint_values = row_values(p.constraints);
  return p.loss;
}

std::vector<double> Trainer::gradient() {
  Pass p = build();
  graph_->backward(p.loss.total);
  std::vector<double> grad(theta_.size());
  gather_gradients(*graph_, p.params, grad);
  return grad;
}

EpochRow Trainer::step(bool do_eval) {
  ad::Graph& g = *graph_;
  Pass p = build();
  const int epoch = epoch_ + 1;
  if (!std::isfinite(p.loss.total_value)) {
    throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
  }
  g.backward(p.loss.total);
  gather_gradients(g, p.params, grad_);

  if (state_.config.strategy == Strategy::lra && (state_.step - 1) % std::max(1, state_.config.lra_every) == 0) {
    std::vector<double> tmp(theta_.size());
    g.backward(p.loss.residual_term);
    gather_gradients(g, p.params, tmp);
    double max_r = 0.0;
    for (double v : tmp) max_r = std::max(max_r, std::abs(v));
    std::vector<double> means;
    for (const ad::Tensor& t : p.loss.group_mse) {
      g.backward(t);
      gather_gradients(g, p.params, tmp);
      double acc = 0.0;
      for (double v : tmp) acc += std::abs(v);
      means.push_back(acc / static_cast<double>(tmp.size()));
    }
    lra_update(state_, max_r, means);
  }

  EpochRow row;
  row.epoch = epoch;
  row.total_loss = p.loss.total_value;
  for (const ad::Tensor& r : p.residuals) row.residual_loss += r.value().squaredNorm() / static_cast<double>(r.cols());
  row.constraint_loss = p.loss.group_mse_values;
  if (do_eval) {
    const Evaluation ev = evaluate(arch_, theta_, eval_);
    row.rel_l2 = ev.rel_l2;
    row.mse = ev.mse;
  }

  adam_step(adam_, theta_, grad_);
  if (state_.has_multipliers() || state_.config.strategy == Strategy::soft_attention) {
    ascend_lambda(state_, row_values(p.residuals), row_values(p.constraints));
  }
  advance(state_);
  row.lambda_norm = lambda_norms(state_);
  epoch_ = epoch;
  return row;
}

TrainRecord train(const PdeProblem& problem, const Architecture& arch, const BalancerConfig& balancer,
                  const GridSpec& grid, const TrainOptions& opts) {
  if (opts.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (opts.eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  Trainer tr(problem, arch, balancer, grid, opts);
  TrainRecord rec;
  int since_best = 0;
  for (int e = 1; e <= opts.epochs; ++e) {
    const bool eval = e == 1 || e % opts.eval_every == 0 || e == opts.epochs;
    std::vector<double> before;
    if (eval) before = tr.params();
    EpochRow row;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      row = tr.step(eval);
    } catch (const std::exception& ex) {
      rec.diverged = true;
      rec.message = ex.what();
      break;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.epoch_ms.push_back(ms);
    row.wall_ms = opts.timing ? ms : 0.0;
    bool stop = false;
    if (eval) {
      if (row.rel_l2 < rec.best_error) {
        rec.best_error = row.rel_l2;
        rec.best_mse = row.mse;
        rec.best_epoch = row.epoch;
        rec.best_params = std::move(before);
        since_best = 0;
      } else {
        ++since_best;
      }
      rec.final_error = row.rel_l2;
      rec.final_mse = row.mse;
      stop = opts.early_stop && since_best >= opts.patience;
    }
    rec.rows.push_back(std::move(row));
    if (stop) {
      rec.stopped_early = true;
      break;
    }
  }
  rec.final_params = tr.params();
  if (rec.best_params.empty()) rec.best_params = rec.final_params;
  rec.balancer = tr.balancer();
  return rec;
}

}  // namespace alpinn
