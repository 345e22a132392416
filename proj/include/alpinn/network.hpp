#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "alpinn/ad/graph.hpp"
#include "alpinn/ad/jet.hpp"

namespace alpinn {

enum class FeatureMap { none, sinusoidal };
enum class InitScheme { kaiming_uniform, xavier_uniform };

struct Head {
  std::string name;
  std::vector<int> widths;  // hidden layers private to this head
  int output_dim = 1;
};

struct Architecture {
  int input_dim = 2;
  std::vector<int> hidden;  // shared trunk
  bool residual = false;
  FeatureMap feature_map = FeatureMap::none;
  double feature_scale = 1.0;
  std::vector<Head> heads{Head{"u", {}, 1}};

  int output_dim() const;
  void validate() const;

  /// M1..M4 with a single head of `outputs` components.
  static Architecture model(std::string_view tag, int input_dim, int outputs = 1);
  /// (t,x,y)-64-50-50-50 trunk with three 50-50-1 heads and a sine first layer.
  static Architecture branched_navier_stokes();
};

struct LayerShape {
  int fan_in = 0;
  int fan_out = 0;
  std::size_t offset = 0;  // into the flat parameter vector; W (col-major) then b
  bool activation = true;
  bool sinusoidal = false;
  bool skip = false;  // out = act(W h + b) + h

  std::size_t weight_count() const { return static_cast<std::size_t>(fan_in) * fan_out; }
  std::size_t param_count() const { return weight_count() + fan_out; }
};

struct LayerPlan {
  std::vector<LayerShape> trunk;
  std::vector<std::vector<LayerShape>> heads;
  std::size_t param_count = 0;
};

LayerPlan plan_layers(const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

struct LayerParams {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

std::vector<double> init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed);
/// Layers in flat order: trunk first, then each head.
std::vector<LayerParams> unflatten(const Architecture& arch, std::span<const double> theta);
std::vector<double> flatten(const Architecture& arch, const std::vector<LayerParams>& layers);

namespace detail {

template <class S>
std::vector<ad::Jet<S>> apply_layers(const std::vector<LayerShape>& layers, double freq, std::span<const S> theta,
                                     std::vector<ad::Jet<S>> h) {
  for (const LayerShape& L : layers) {
    if (static_cast<int>(h.size()) != L.fan_in) throw std::invalid_argument("forward: layer width mismatch");
    std::vector<ad::Jet<S>> out;
    out.reserve(static_cast<std::size_t>(L.fan_out));
    const std::size_t bias = L.offset + L.weight_count();
    for (int o = 0; o < L.fan_out; ++o) {
      ad::Jet<S> a = ad::scaled(h[0], theta[L.offset + static_cast<std::size_t>(o)]);
      for (int i = 1; i < L.fan_in; ++i) {
        a = a + ad::scaled(h[i], theta[L.offset + static_cast<std::size_t>(i) * L.fan_out + o]);
      }
      a = ad::shifted(a, theta[bias + static_cast<std::size_t>(o)]);
      if (L.activation) {
        using ad::sin;
        using ad::tanh;
        a = L.sinusoidal ? sin(ad::scaled(a, freq)) : tanh(a);
        if (L.skip) a = a + h[o];
      }
      out.push_back(a);
    }
    h = std::move(out);
  }
  return h;
}

}  // namespace detail

/// Network outputs (all heads, concatenated) as jets in the inputs.
/// S is double / long double for plain evaluation or ad::Var for a taped pass.
template <class S>
std::vector<ad::Jet<S>> forward(const Architecture& arch, std::span<const S> theta, std::span<const ad::Jet<S>> x) {
  if (static_cast<int>(x.size()) != arch.input_dim) throw std::invalid_argument("forward: input dimension mismatch");
  const LayerPlan plan = plan_layers(arch);
  if (theta.size() != plan.param_count) throw std::invalid_argument("forward: parameter count mismatch");
  std::vector<ad::Jet<S>> trunk =
      detail::apply_layers(plan.trunk, arch.feature_scale, theta, std::vector<ad::Jet<S>>(x.begin(), x.end()));
  std::vector<ad::Jet<S>> out;
  for (const auto& head : plan.heads) {
    auto y = detail::apply_layers(head, arch.feature_scale, theta, trunk);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

/// Parameters registered as graph leaves, one (W, b) pair per layer in flat order.
struct ParamTensors {
  std::vector<ad::Tensor> w;
  std::vector<ad::Tensor> b;
};

ParamTensors register_parameters(ad::Graph& g, const Architecture& arch, std::span<const double> theta);

/// d x N input points -> one tensor per output component, each 1 x N(1+2d)
/// in the jet-batch layout of ad::Graph.
std::vector<ad::Tensor> forward_batch(ad::Graph& g, const Architecture& arch, const ParamTensors& params,
                                      const Eigen::MatrixXd& points);

/// Plain values only: outputs x N.
Eigen::MatrixXd predict(const Architecture& arch, std::span<const double> theta, const Eigen::MatrixXd& points);

/// Copies parameter gradients from the last backward pass into flat order.
void gather_gradients(ad::Graph& g, const ParamTensors& params, std::span<double> out);

void save_params(const std::filesystem::path& path, std::span<const double> theta);
std::vector<double> load_params(const std::filesystem::path& path);

}  // namespace alpinn
