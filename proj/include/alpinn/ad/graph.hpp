#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace alpinn::ad {

using Matrix = Eigen::MatrixXd;

class Graph;

/// Handle to one matrix-valued node on a Graph.
class Tensor {
 public:
  Tensor() = default;

  Graph* graph() const { return graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 tensor.
  double item() const;

 private:
  friend class Graph;
  Tensor(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class Activation : std::uint8_t { tanh, sin };

/// Batched reverse-mode graph over dense matrices.
///
/// Besides elementwise arithmetic it has two fused operations that push a
/// whole batch of input jets through one network layer. A batch of N jets in
/// d inputs is stored as a (width x N*(1+2d)) matrix with column blocks
/// [value | d/dx_1 .. d/dx_d | d2/dx_1^2 .. d2/dx_d^2], each N columns wide.
///
/// clear() keeps node storage around, so rebuilding a graph of the same shape
/// every step does not reallocate.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor constant(const Matrix& value);
  Tensor constant(Eigen::Index rows, Eigen::Index cols, double fill);
  Tensor constant_row(const std::vector<double>& values);
  Tensor parameter(const Matrix& value);
  /// Column-major rows x cols block starting at data.
  Tensor parameter(const double* data, Eigen::Index rows, Eigen::Index cols);

  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor neg(const Tensor& a);
  Tensor scale(const Tensor& a, double c);
  Tensor add_scalar(const Tensor& a, double c);
  Tensor square(const Tensor& a);
  Tensor pow_int(const Tensor& a, int k);
  Tensor sin(const Tensor& a);
  Tensor cos(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor cols(const Tensor& a, Eigen::Index start, Eigen::Index n);
  Tensor rows(const Tensor& a, Eigen::Index start, Eigen::Index n);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor sum_square(const Tensor& a);

  /// W*X with b added to the value block only (derivative blocks of a
  /// constant vanish).
  Tensor jet_affine(const Tensor& w, const Tensor& b, const Tensor& x, Eigen::Index n_points);
  /// Elementwise activation of a jet batch: the value block becomes s(a),
  /// first derivatives s'(a)*g, second derivatives s''(a)*g^2 + s'(a)*h.
  /// For Activation::sin the function is sin(freq * a).
  Tensor jet_activation(const Tensor& a, Activation act, double freq, Eigen::Index n_points, int dim);

  /// Reverse sweep from a 1x1 root. May be called repeatedly on the same graph;
  /// every call starts from zeroed gradients.
  void backward(const Tensor& root);
  /// Gradient from the last backward pass (zeros if the node was unreached).
  const Matrix& grad(const Tensor& t);

  void clear();
  std::size_t size() const { return count_; }
  const Matrix& value(const Tensor& t) const;

 private:
  enum class Op : std::uint8_t {
    leaf, add, sub, mul, neg, scale, add_scalar, square, pow_int, sin, cos, tanh, exp,
    cols, rows, sum, mean, sum_square, jet_affine, jet_activation,
  };

  struct Node {
    Op op = Op::leaf;
    bool requires_grad = false;
    bool grad_live = false;
    std::uint32_t parent[3] = {0, 0, 0};
    Eigen::Index i0 = 0, i1 = 0;
    int k = 0;
    double c = 0.0;
    Matrix value;
    Matrix grad;
  };

  Node& push(Op op, bool requires_grad);
  Node& node(const Tensor& t);
  const Node& node(const Tensor& t) const;
  std::uint32_t check(const Tensor& t) const;
  Tensor unary(Op op, const Tensor& a);
  Tensor binary(Op op, const Tensor& a, const Tensor& b);
  Tensor handle() { return Tensor(this, static_cast<std::uint32_t>(count_ - 1)); }
  void propagate(std::uint32_t i);

  std::vector<Node> nodes_;
  std::size_t count_ = 0;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, double c);
Tensor operator+(double c, const Tensor& a);
Tensor operator-(const Tensor& a, double c);
Tensor operator-(double c, const Tensor& a);
Tensor operator*(const Tensor& a, double c);
Tensor operator*(double c, const Tensor& a);
Tensor operator/(const Tensor& a, double c);

Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);
Tensor pow_int(const Tensor& a, int k);

}  // namespace alpinn::ad
