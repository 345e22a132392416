#include "alpinn/ad/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace alpinn::ad {

namespace {

// Eigen evaluates tanh on doubles one scalar at a time; exp is vectorized.
template <class Derived>
Eigen::ArrayXXd fast_tanh(const Eigen::ArrayBase<Derived>& a) {
  const Eigen::ArrayXXd t = (-2.0 * a.abs()).exp();
  return ((1.0 - t) / (1.0 + t)) * a.sign();
}

}  // namespace

const Matrix& Tensor::value() const {
  if (graph_ == nullptr) throw std::invalid_argument("Tensor: empty handle");
  return graph_->value(*this);
}

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::invalid_argument("Tensor::item: tensor is not 1x1");
  return v(0, 0);
}

Graph::Node& Graph::push(Op op, bool requires_grad) {
  if (count_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[count_++];
  n.op = op;
  n.requires_grad = requires_grad;
  n.grad_live = false;
  n.parent[0] = n.parent[1] = n.parent[2] = 0;
  n.i0 = n.i1 = 0;
  n.k = 0;
  n.c = 0.0;
  return n;
}

std::uint32_t Graph::check(const Tensor& t) const {
  if (t.graph() != this) throw std::invalid_argument("Graph: tensor belongs to another graph");
  if (t.id() >= count_) throw std::out_of_range("Graph: stale tensor (graph was cleared)");
  return t.id();
}

Graph::Node& Graph::node(const Tensor& t) { return nodes_[check(t)]; }
const Graph::Node& Graph::node(const Tensor& t) const { return nodes_[check(t)]; }
const Matrix& Graph::value(const Tensor& t) const { return node(t).value; }

void Graph::clear() { count_ = 0; }

Tensor Graph::constant(const Matrix& value) {
  push(Op::leaf, false).value = value;
  return handle();
}

Tensor Graph::constant(Eigen::Index rows, Eigen::Index cols, double fill) {
  push(Op::leaf, false).value.setConstant(rows, cols, fill);
  return handle();
}

Tensor Graph::constant_row(const std::vector<double>& values) {
  Node& n = push(Op::leaf, false);
  n.value.resize(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t j = 0; j < values.size(); ++j) n.value(0, static_cast<Eigen::Index>(j)) = values[j];
  return handle();
}

Tensor Graph::parameter(const Matrix& value) {
  push(Op::leaf, true).value = value;
  return handle();
}

Tensor Graph::parameter(const double* data, Eigen::Index rows, Eigen::Index cols) {
  push(Op::leaf, true).value = Eigen::Map<const Matrix>(data, rows, cols);
  return handle();
}

Tensor Graph::unary(Op op, const Tensor& a) {
  const std::uint32_t ia = check(a);
  const bool rg = nodes_[ia].requires_grad;
  Node& n = push(op, rg);
  n.parent[0] = ia;
  return handle();
}

Tensor Graph::binary(Op op, const Tensor& a, const Tensor& b) {
  const std::uint32_t ia = check(a);
  const std::uint32_t ib = check(b);
  const Matrix& va = nodes_[ia].value;
  const Matrix& vb = nodes_[ib].value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
    throw std::invalid_argument("Graph: shape mismatch " + std::to_string(va.rows()) + "x" +
                                std::to_string(va.cols()) + " vs " + std::to_string(vb.rows()) + "x" +
                                std::to_string(vb.cols()));
  }
  const bool rg = nodes_[ia].requires_grad || nodes_[ib].requires_grad;
  Node& n = push(op, rg);
  n.parent[0] = ia;
  n.parent[1] = ib;
  return handle();
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  Tensor t = binary(Op::add, a, b);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value + nodes_[n.parent[1]].value;
  return t;
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
  Tensor t = binary(Op::sub, a, b);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value - nodes_[n.parent[1]].value;
  return t;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  Tensor t = binary(Op::mul, a, b);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.cwiseProduct(nodes_[n.parent[1]].value);
  return t;
}

Tensor Graph::neg(const Tensor& a) {
  Tensor t = unary(Op::neg, a);
  Node& n = nodes_[t.id()];
  n.value = -nodes_[n.parent[0]].value;
  return t;
}

Tensor Graph::scale(const Tensor& a, double c) {
  Tensor t = unary(Op::scale, a);
  Node& n = nodes_[t.id()];
  n.c = c;
  n.value = c * nodes_[n.parent[0]].value;
  return t;
}

Tensor Graph::add_scalar(const Tensor& a, double c) {
  Tensor t = unary(Op::add_scalar, a);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.array() + c;
  return t;
}

Tensor Graph::square(const Tensor& a) {
  Tensor t = unary(Op::square, a);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.array().square();
  return t;
}

Tensor Graph::pow_int(const Tensor& a, int k) {
  Tensor t = unary(Op::pow_int, a);
  Node& n = nodes_[t.id()];
  n.k = k;
  const Matrix& x = nodes_[n.parent[0]].value;
  if (k < 0 && (x.array() == 0.0).any()) throw std::domain_error("Graph::pow_int: zero base with negative exponent");
  n.value = x.unaryExpr([k](double v) { return std::pow(v, k); });
  return t;
}

Tensor Graph::sin(const Tensor& a) {
  Tensor t = unary(Op::sin, a);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.array().sin();
  return t;
}

Tensor Graph::cos(const Tensor& a) {
  Tensor t = unary(Op::cos, a);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.array().cos();
  return t;
}

Tensor Graph::tanh(const Tensor& a) {
  Tensor t = unary(Op::tanh, a);
  Node& n = nodes_[t.id()];
  n.value = fast_tanh(nodes_[n.parent[0]].value.array()).matrix();
  return t;
}

Tensor Graph::exp(const Tensor& a) {
  Tensor t = unary(Op::exp, a);
  Node& n = nodes_[t.id()];
  n.value = nodes_[n.parent[0]].value.array().exp();
  return t;
}

Tensor Graph::cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  const Matrix& x = node(a).value;
  if (start < 0 || count < 0 || start + count > x.cols()) throw std::out_of_range("Graph::cols: range out of bounds");
  Tensor t = unary(Op::cols, a);
  Node& n = nodes_[t.id()];
  n.i0 = start;
  n.i1 = count;
  n.value = nodes_[n.parent[0]].value.middleCols(start, count);
  return t;
}

Tensor Graph::rows(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  const Matrix& x = node(a).value;
  if (start < 0 || count < 0 || start + count > x.rows()) throw std::out_of_range("Graph::rows: range out of bounds");
  Tensor t = unary(Op::rows, a);
  Node& n = nodes_[t.id()];
  n.i0 = start;
  n.i1 = count;
  n.value = nodes_[n.parent[0]].value.middleRows(start, count);
  return t;
}

Tensor Graph::sum(const Tensor& a) {
  Tensor t = unary(Op::sum, a);
  Node& n = nodes_[t.id()];
  n.value.setConstant(1, 1, nodes_[n.parent[0]].value.sum());
  return t;
}

Tensor Graph::mean(const Tensor& a) {
  if (node(a).value.size() == 0) throw std::invalid_argument("Graph::mean: empty tensor");
  Tensor t = unary(Op::mean, a);
  Node& n = nodes_[t.id()];
  n.value.setConstant(1, 1, nodes_[n.parent[0]].value.mean());
  return t;
}

Tensor Graph::sum_square(const Tensor& a) {
  Tensor t = unary(Op::sum_square, a);
  Node& n = nodes_[t.id()];
  n.value.setConstant(1, 1, nodes_[n.parent[0]].value.squaredNorm());
  return t;
}

Tensor Graph::jet_affine(const Tensor& w, const Tensor& b, const Tensor& x, Eigen::Index n_points) {
  const std::uint32_t iw = check(w), ib = check(b), ix = check(x);
  {
    const Matrix& W = nodes_[iw].value;
    const Matrix& B = nodes_[ib].value;
    const Matrix& X = nodes_[ix].value;
    if (W.cols() != X.rows()) throw std::invalid_argument("Graph::jet_affine: weight/input width mismatch");
    if (B.rows() != W.rows() || B.cols() != 1) throw std::invalid_argument("Graph::jet_affine: bias shape mismatch");
    if (n_points <= 0 || X.cols() % n_points != 0) throw std::invalid_argument("Graph::jet_affine: bad point count");
  }
  const bool rg = nodes_[iw].requires_grad || nodes_[ib].requires_grad || nodes_[ix].requires_grad;
  Node& n = push(Op::jet_affine, rg);
  n.parent[0] = iw;
  n.parent[1] = ib;
  n.parent[2] = ix;
  n.i0 = n_points;
  const Matrix& W = nodes_[iw].value;
  const Matrix& X = nodes_[ix].value;
  n.value.resize(W.rows(), X.cols());
  n.value.noalias() = W * X;
  n.value.leftCols(n_points).colwise() += nodes_[ib].value.col(0);
  return handle();
}

namespace {

// First, second and (if s3 is non-null) third derivative of the activation
// for one column of r pre-activations a whose activations z are known.
void column_derivatives(Activation act, double freq, const double* a, const double* z, Eigen::Index r, double* s1,
                        double* s2, double* s3) {
  if (act == Activation::tanh) {
    for (Eigen::Index i = 0; i < r; ++i) {
      const double d1 = 1.0 - z[i] * z[i];
      s1[i] = d1;
      s2[i] = -2.0 * z[i] * d1;
      if (s3) s3[i] = d1 * (6.0 * z[i] * z[i] - 2.0);
    }
  } else {
    const double f2 = freq * freq;
    for (Eigen::Index i = 0; i < r; ++i) {
      const double c = std::cos(freq * a[i]);
      s1[i] = freq * c;
      s2[i] = -f2 * z[i];
      if (s3) s3[i] = -f2 * freq * c;
    }
  }
}

}  // namespace

Tensor Graph::jet_activation(const Tensor& a, Activation act, double freq, Eigen::Index n_points, int dim) {
  const std::uint32_t ia = check(a);
  if (dim < 1 || nodes_[ia].value.cols() != n_points * (1 + 2 * dim)) {
    throw std::invalid_argument("Graph::jet_activation: input is not a jet batch of the given shape");
  }
  Node& n = push(Op::jet_activation, nodes_[ia].requires_grad);
  n.parent[0] = ia;
  n.i0 = n_points;
  n.k = dim;
  n.c = freq;
  n.i1 = static_cast<Eigen::Index>(act);
  const Matrix& A = nodes_[ia].value;
  const Eigen::Index N = n_points;
  const Eigen::Index R = A.rows();
  n.value.resize(R, A.cols());
  if (act == Activation::tanh) {
    n.value.leftCols(N) = fast_tanh(A.leftCols(N).array()).matrix();
  } else {
    n.value.leftCols(N) = (freq * A.leftCols(N).array()).sin().matrix();
  }
  std::vector<double> s1(static_cast<std::size_t>(R)), s2(static_cast<std::size_t>(R));
  const double* a0 = A.data();
  double* y0 = n.value.data();
  for (Eigen::Index j = 0; j < N; ++j) {
    column_derivatives(act, freq, a0 + j * R, y0 + j * R, R, s1.data(), s2.data(), nullptr);
    for (int k = 0; k < dim; ++k) {
      const double* G = a0 + (N * (1 + k) + j) * R;
      const double* H = a0 + (N * (1 + dim + k) + j) * R;
      double* YG = y0 + (N * (1 + k) + j) * R;
      double* YH = y0 + (N * (1 + dim + k) + j) * R;
      for (Eigen::Index i = 0; i < R; ++i) {
        YG[i] = s1[i] * G[i];
        YH[i] = s2[i] * G[i] * G[i] + s1[i] * H[i];
      }
    }
  }
  return handle();
}

Tensor operator+(const Tensor& a, const Tensor& b) { return a.graph()->add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return a.graph()->sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return a.graph()->mul(a, b); }
Tensor operator-(const Tensor& a) { return a.graph()->neg(a); }
Tensor operator+(const Tensor& a, double c) { return a.graph()->add_scalar(a, c); }
Tensor operator+(double c, const Tensor& a) { return a.graph()->add_scalar(a, c); }
Tensor operator-(const Tensor& a, double c) { return a.graph()->add_scalar(a, -c); }
Tensor operator-(double c, const Tensor& a) { return a.graph()->add_scalar(a.graph()->neg(a), c); }
Tensor operator*(const Tensor& a, double c) { return a.graph()->scale(a, c); }
Tensor operator*(double c, const Tensor& a) { return a.graph()->scale(a, c); }

Tensor operator/(const Tensor& a, double c) {
  if (c == 0.0) throw std::domain_error("Tensor: division by zero");
  return a.graph()->scale(a, 1.0 / c);
}

Tensor sin(const Tensor& a) { return a.graph()->sin(a); }
Tensor cos(const Tensor& a) { return a.graph()->cos(a); }
Tensor tanh(const Tensor& a) { return a.graph()->tanh(a); }
Tensor exp(const Tensor& a) { return a.graph()->exp(a); }
Tensor square(const Tensor& a) { return a.graph()->square(a); }
Tensor pow_int(const Tensor& a, int k) { return a.graph()->pow_int(a, k); }

// ---------------------------------------------------------------------------
// reverse pass

namespace {

template <class Expr>
void accumulate(Matrix& grad, bool& live, Eigen::Index rows, Eigen::Index cols, const Expr& e) {
  if (live) {
    grad += e;
  } else {
    grad.resize(rows, cols);
    grad = e;
    live = true;
  }
}

}  // namespace

void Graph::backward(const Tensor& root) {
  const std::uint32_t r = check(root);
  if (nodes_[r].value.size() != 1) throw std::invalid_argument("Graph::backward: root must be 1x1");
  for (std::size_t i = 0; i < count_; ++i) nodes_[i].grad_live = false;
  Node& rn = nodes_[r];
  rn.grad.setConstant(1, 1, 1.0);
  rn.grad_live = true;
  for (std::uint32_t i = r + 1; i-- > 0;) {
    if (nodes_[i].grad_live && nodes_[i].requires_grad) propagate(i);
  }
}

const Matrix& Graph::grad(const Tensor& t) {
  Node& n = node(t);
  if (!n.grad_live) {
    n.grad.setZero(n.value.rows(), n.value.cols());
    n.grad_live = true;
  }
  return n.grad;
}

void Graph::propagate(std::uint32_t i) {
  Node& n = nodes_[i];
  const Matrix& gy = n.grad;
  auto target = [&](int k) -> Node* {
    Node& p = nodes_[n.parent[k]];
    return p.requires_grad ? &p : nullptr;
  };
  auto acc = [](Node* p, const auto& e) { accumulate(p->grad, p->grad_live, p->value.rows(), p->value.cols(), e); };

  switch (n.op) {
    case Op::leaf:
      return;
    case Op::add:
      if (Node* p = target(0)) acc(p, gy);
      if (Node* p = target(1)) acc(p, gy);
      return;
    case Op::sub:
      if (Node* p = target(0)) acc(p, gy);
      if (Node* p = target(1)) acc(p, -gy);
      return;
    case Op::mul: {
      const Matrix& a = nodes_[n.parent[0]].value;
      const Matrix& b = nodes_[n.parent[1]].value;
      if (Node* p = target(0)) acc(p, gy.cwiseProduct(b));
      if (Node* p = target(1)) acc(p, gy.cwiseProduct(a));
      return;
    }
    case Op::neg:
      if (Node* p = target(0)) acc(p, -gy);
      return;
    case Op::scale:
      if (Node* p = target(0)) acc(p, n.c * gy);
      return;
    case Op::add_scalar:
      if (Node* p = target(0)) acc(p, gy);
      return;
    case Op::square:
      if (Node* p = target(0)) acc(p, (2.0 * p->value.array() * gy.array()).matrix());
      return;
    case Op::pow_int:
      if (Node* p = target(0)) {
        const int k = n.k;
        acc(p, (gy.array() * p->value.array().unaryExpr([k](double v) { return k * std::pow(v, k - 1); })).matrix());
      }
      return;
    case Op::sin:
      if (Node* p = target(0)) acc(p, (gy.array() * p->value.array().cos()).matrix());
      return;
    case Op::cos:
      if (Node* p = target(0)) acc(p, (-gy.array() * p->value.array().sin()).matrix());
      return;
    case Op::tanh:
      if (Node* p = target(0)) acc(p, (gy.array() * (1.0 - n.value.array().square())).matrix());
      return;
    case Op::exp:
      if (Node* p = target(0)) acc(p, gy.cwiseProduct(n.value));
      return;
    case Op::cols:
      if (Node* p = target(0)) {
        if (!p->grad_live) {
          p->grad.setZero(p->value.rows(), p->value.cols());
          p->grad_live = true;
        }
        p->grad.middleCols(n.i0, n.i1) += gy;
      }
      return;
    case Op::rows:
      if (Node* p = target(0)) {
        if (!p->grad_live) {
          p->grad.setZero(p->value.rows(), p->value.cols());
          p->grad_live = true;
        }
        p->grad.middleRows(n.i0, n.i1) += gy;
      }
      return;
    case Op::sum:
      if (Node* p = target(0)) acc(p, Matrix::Constant(p->value.rows(), p->value.cols(), gy(0, 0)));
      return;
    case Op::mean:
      if (Node* p = target(0)) {
        const double s = gy(0, 0) / static_cast<double>(p->value.size());
        acc(p, Matrix::Constant(p->value.rows(), p->value.cols(), s));
      }
      return;
    case Op::sum_square:
      if (Node* p = target(0)) acc(p, (2.0 * gy(0, 0)) * p->value);
      return;
    case Op::jet_affine: {
      const Matrix& W = nodes_[n.parent[0]].value;
      const Matrix& X = nodes_[n.parent[2]].value;
      if (Node* p = target(0)) {
        if (p->grad_live) {
          p->grad.noalias() += gy * X.transpose();
        } else {
          p->grad.resize(W.rows(), W.cols());
          p->grad.noalias() = gy * X.transpose();
          p->grad_live = true;
        }
      }
      if (Node* p = target(1)) acc(p, gy.leftCols(n.i0).rowwise().sum());
      if (Node* p = target(2)) {
        if (p->grad_live) {
          p->grad.noalias() += W.transpose() * gy;
        } else {
          p->grad.resize(X.rows(), X.cols());
          p->grad.noalias() = W.transpose() * gy;
          p->grad_live = true;
        }
      }
      return;
    }
    case Op::jet_activation: {
      Node* p = target(0);
      if (p == nullptr) return;
      const Matrix& A = p->value;
      const Eigen::Index N = n.i0;
      const Eigen::Index R = A.rows();
      const int dim = n.k;
      const auto act = static_cast<Activation>(n.i1);
      const bool add = p->grad_live;
      if (!add) p->grad.resize(R, A.cols());
      p->grad_live = true;
      std::vector<double> buf(static_cast<std::size_t>(4 * R));
      double* s1 = buf.data();
      double* s2 = s1 + R;
      double* s3 = s2 + R;
      double* abar = s3 + R;
      const double* a0 = A.data();
      const double* g0 = gy.data();
      double* d0 = p->grad.data();
      for (Eigen::Index j = 0; j < N; ++j) {
        column_derivatives(act, n.c, a0 + j * R, n.value.data() + j * R, R, s1, s2, s3);
        const double* gV = g0 + j * R;
        for (Eigen::Index i = 0; i < R; ++i) abar[i] = gV[i] * s1[i];
        for (int k = 0; k < dim; ++k) {
          const Eigen::Index cg = (N * (1 + k) + j) * R;
          const Eigen::Index ch = (N * (1 + dim + k) + j) * R;
          const double* G = a0 + cg;
          const double* H = a0 + ch;
          const double* gG = g0 + cg;
          const double* gH = g0 + ch;
          double* dG = d0 + cg;
          double* dH = d0 + ch;
          if (add) {
            for (Eigen::Index i = 0; i < R; ++i) {
              dG[i] += gG[i] * s1[i] + 2.0 * gH[i] * s2[i] * G[i];
              dH[i] += gH[i] * s1[i];
            }
          } else {
            for (Eigen::Index i = 0; i < R; ++i) {
              dG[i] = gG[i] * s1[i] + 2.0 * gH[i] * s2[i] * G[i];
              dH[i] = gH[i] * s1[i];
            }
          }
          for (Eigen::Index i = 0; i < R; ++i) {
            abar[i] += (gG[i] * G[i] + gH[i] * H[i]) * s2[i] + gH[i] * G[i] * G[i] * s3[i];
          }
        }
        double* dV = d0 + j * R;
        if (add) {
          for (Eigen::Index i = 0; i < R; ++i) dV[i] += abar[i];
        } else {
          for (Eigen::Index i = 0; i < R; ++i) dV[i] = abar[i];
        }
      }
      return;
    }
  }
}

}  // namespace alpinn::ad
