#include "alpinn/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace alpinn {

int Architecture::output_dim() const {
  int n = 0;
  for (const Head& h : heads) n += h.output_dim;
  return n;
}

void Architecture::validate() const {
  if (input_dim < 1 || input_dim > ad::kMaxInputDim) throw std::invalid_argument("architecture: input_dim must be 1..3");
  if (heads.empty()) throw std::invalid_argument("architecture: at least one head is required");
  for (int w : hidden) {
    if (w <= 0) throw std::invalid_argument("architecture: hidden widths must be positive");
  }
  for (const Head& h : heads) {
    if (h.output_dim <= 0) throw std::invalid_argument("architecture: head output_dim must be positive");
    for (int w : h.widths) {
      if (w <= 0) throw std::invalid_argument("architecture: head widths must be positive");
    }
  }
  if (feature_map == FeatureMap::sinusoidal && hidden.empty()) {
    throw std::invalid_argument("architecture: sinusoidal features need at least one trunk layer");
  }
}

Architecture Architecture::model(std::string_view tag, int input_dim, int outputs) {
  Architecture a;
  a.input_dim = input_dim;
  a.heads = {Head{"u", {}, outputs}};
  if (tag == "M1" || tag == "M3") {
    a.hidden.assign(8, 64);
  } else if (tag == "M2" || tag == "M4") {
    a.hidden.assign(2, 256);
  } else {
    throw std::invalid_argument("unknown model tag '" + std::string(tag) + "' (expected M1..M4)");
  }
  a.residual = tag == "M3" || tag == "M4";
  return a;
}

Architecture Architecture::branched_navier_stokes() {
  Architecture a;
  a.input_dim = 3;
  a.hidden = {64, 50, 50, 50};
  a.feature_map = FeatureMap::sinusoidal;
  a.heads = {Head{"u", {50, 50}, 1}, Head{"v", {50, 50}, 1}, Head{"p", {50, 50}, 1}};
  return a;
}

namespace {

std::vector<LayerShape> chain_layers(int fan_in, const std::vector<int>& widths, int out_dim, bool residual,
                                     bool first_sinusoidal, bool is_trunk, std::size_t& offset) {
  std::vector<LayerShape> layers;
  int in = fan_in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    LayerShape L;
    L.fan_in = in;
    L.fan_out = widths[i];
    L.offset = offset;
    L.sinusoidal = first_sinusoidal && i == 0;
    L.skip = residual && in == widths[i] && !(is_trunk && i == 0);
    offset += L.param_count();
    layers.push_back(L);
    in = widths[i];
  }
  if (out_dim > 0) {
    LayerShape L;
    L.fan_in = in;
    L.fan_out = out_dim;
    L.offset = offset;
    L.activation = false;
    offset += L.param_count();
    layers.push_back(L);
  }
  return layers;
}

}  // namespace

LayerPlan plan_layers(const Architecture& arch) {
  arch.validate();
  LayerPlan plan;
  std::size_t offset = 0;
  plan.trunk = chain_layers(arch.input_dim, arch.hidden, 0, arch.residual,
                            arch.feature_map == FeatureMap::sinusoidal, true, offset);
  const int trunk_out = arch.hidden.empty() ? arch.input_dim : arch.hidden.back();
  for (const Head& h : arch.heads) {
    plan.heads.push_back(chain_layers(trunk_out, h.widths, h.output_dim, arch.residual, false, false, offset));
  }
  plan.param_count = offset;
  return plan;
}

std::size_t parameter_count(const Architecture& arch) { return plan_layers(arch).param_count; }

namespace {

std::vector<LayerShape> all_layers(const LayerPlan& plan) {
  std::vector<LayerShape> out = plan.trunk;
  for (const auto& h : plan.heads) out.insert(out.end(), h.begin(), h.end());
  return out;
}

}  // namespace

std::vector<double> init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed) {
  const LayerPlan plan = plan_layers(arch);
  std::vector<double> theta(plan.param_count, 0.0);
  std::mt19937_64 rng(seed);
  // 53 random bits -> [0, 1); spelled out so the stream is identical across standard libraries.
  auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (const LayerShape& L : all_layers(plan)) {
    const double bound = scheme == InitScheme::kaiming_uniform ? std::sqrt(6.0 / L.fan_in)
                                                               : std::sqrt(6.0 / (L.fan_in + L.fan_out));
    for (std::size_t j = 0; j < L.weight_count(); ++j) theta[L.offset + j] = (2.0 * uniform() - 1.0) * bound;
  }
  return theta;
}

std::vector<LayerParams> unflatten(const Architecture& arch, std::span<const double> theta) {
  const LayerPlan plan = plan_layers(arch);
  if (theta.size() != plan.param_count) throw std::invalid_argument("unflatten: parameter count mismatch");
  std::vector<LayerParams> out;
  for (const LayerShape& L : all_layers(plan)) {
    LayerParams p;
    p.w = Eigen::Map<const Eigen::MatrixXd>(theta.data() + L.offset, L.fan_out, L.fan_in);
    p.b = Eigen::Map<const Eigen::VectorXd>(theta.data() + L.offset + L.weight_count(), L.fan_out);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> flatten(const Architecture& arch, const std::vector<LayerParams>& layers) {
  const LayerPlan plan = plan_layers(arch);
  const auto shapes = all_layers(plan);
  if (layers.size() != shapes.size()) throw std::invalid_argument("flatten: layer count mismatch");
  std::vector<double> theta(plan.param_count);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const LayerShape& L = shapes[i];
    if (layers[i].w.rows() != L.fan_out || layers[i].w.cols() != L.fan_in || layers[i].b.size() != L.fan_out) {
      throw std::invalid_argument("flatten: layer " + std::to_string(i) + " has the wrong shape");
    }
    Eigen::Map<Eigen::MatrixXd>(theta.data() + L.offset, L.fan_out, L.fan_in) = layers[i].w;
    Eigen::Map<Eigen::VectorXd>(theta.data() + L.offset + L.weight_count(), L.fan_out) = layers[i].b;
  }
  return theta;
}

ParamTensors register_parameters(ad::Graph& g, const Architecture& arch, std::span<const double> theta) {
  const LayerPlan plan = plan_layers(arch);
  if (theta.size() != plan.param_count) throw std::invalid_argument("register_parameters: parameter count mismatch");
  ParamTensors p;
  for (const LayerShape& L : all_layers(plan)) {
    p.w.push_back(g.parameter(theta.data() + L.offset, L.fan_out, L.fan_in));
    p.b.push_back(g.parameter(theta.data() + L.offset + L.weight_count(), L.fan_out, 1));
  }
  return p;
}

namespace {

ad::Tensor batch_layers(ad::Graph& g, const std::vector<LayerShape>& layers, std::size_t first, const ParamTensors& p,
                        double freq, ad::Tensor h, Eigen::Index n, int dim) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerShape& L = layers[i];
    ad::Tensor a = g.jet_affine(p.w[first + i], p.b[first + i], h, n);
    if (L.activation) {
      a = g.jet_activation(a, L.sinusoidal ? ad::Activation::sin : ad::Activation::tanh, freq, n, dim);
      if (L.skip) a = g.add(a, h);
    }
    h = a;
  }
  return h;
}

}  // namespace

std::vector<ad::Tensor> forward_batch(ad::Graph& g, const Architecture& arch, const ParamTensors& params,
                                      const Eigen::MatrixXd& points) {
  const int d = arch.input_dim;
  if (points.rows() != d) throw std::invalid_argument("forward_batch: points must have input_dim rows");
  const Eigen::Index n = points.cols();
  const LayerPlan plan = plan_layers(arch);

  Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(d, n * (1 + 2 * d));
  x0.leftCols(n) = points;
  for (int k = 0; k < d; ++k) x0.block(k, n * (1 + k), 1, n).setOnes();
  ad::Tensor trunk = batch_layers(g, plan.trunk, 0, params, arch.feature_scale, g.constant(x0), n, d);

  std::vector<ad::Tensor> out;
  std::size_t first = plan.trunk.size();
  for (const auto& head : plan.heads) {
    ad::Tensor y = batch_layers(g, head, first, params, arch.feature_scale, trunk, n, d);
    first += head.size();
    for (Eigen::Index r = 0; r < y.rows(); ++r) out.push_back(y.rows() == 1 ? y : g.rows(y, r, 1));
  }
  return out;
}

namespace {

Eigen::MatrixXd predict_layers(const std::vector<LayerShape>& layers, double freq, std::span<const double> theta,
                               Eigen::MatrixXd h) {
  for (const LayerShape& L : layers) {
    Eigen::Map<const Eigen::MatrixXd> w(theta.data() + L.offset, L.fan_out, L.fan_in);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + L.offset + L.weight_count(), L.fan_out);
    Eigen::MatrixXd a = w * h;
    a.colwise() += b;
    if (L.activation) {
      if (L.sinusoidal) {
        a = (freq * a.array()).sin().matrix();
      } else {
        a = a.array().tanh().matrix();
      }
      if (L.skip) a += h;
    }
    h = std::move(a);
  }
  return h;
}

}  // namespace

Eigen::MatrixXd predict(const Architecture& arch, std::span<const double> theta, const Eigen::MatrixXd& points) {
  const LayerPlan plan = plan_layers(arch);
  if (theta.size() != plan.param_count) throw std::invalid_argument("predict: parameter count mismatch");
  if (points.rows() != arch.input_dim) throw std::invalid_argument("predict: points must have input_dim rows");
  const Eigen::MatrixXd trunk = predict_layers(plan.trunk, arch.feature_scale, theta, points);
  Eigen::MatrixXd out(arch.output_dim(), points.cols());
  Eigen::Index row = 0;
  for (const auto& head : plan.heads) {
    Eigen::MatrixXd y = predict_layers(head, arch.feature_scale, theta, trunk);
    out.middleRows(row, y.rows()) = y;
    row += y.rows();
  }
  return out;
}

void gather_gradients(ad::Graph& g, const ParamTensors& params, std::span<double> out) {
  std::size_t k = 0;
  auto copy = [&](const ad::Tensor& t) {
    const Eigen::MatrixXd& gr = g.grad(t);
    if (k + static_cast<std::size_t>(gr.size()) > out.size()) throw std::invalid_argument("gather_gradients: output too short");
    std::memcpy(out.data() + k, gr.data(), sizeof(double) * static_cast<std::size_t>(gr.size()));
    k += static_cast<std::size_t>(gr.size());
  };
  for (std::size_t i = 0; i < params.w.size(); ++i) {
    copy(params.w[i]);
    copy(params.b[i]);
  }
  if (k != out.size()) throw std::invalid_argument("gather_gradients: output length mismatch");
}

namespace {

constexpr char kMagic[4] = {'A', 'L', 'P', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("model file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void save_params(const std::filesystem::path& path, std::span<const double> theta) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint64_t>(os, theta.size());
  for (double v : theta) put_le<double>(os, v);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error(path.string() + ": not a model file");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error(path.string() + ": unsupported model version " + std::to_string(version));
  const auto count = get_le<std::uint64_t>(is);
  std::vector<double> theta;
  theta.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) theta.push_back(get_le<double>(is));
  return theta;
}

}  // namespace alpinn
