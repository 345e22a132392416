#include "alpinn/ad/tape.hpp"

#include "alpinn/ad/jet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace alpinn::ad {

double Adjoints::wrt(const Var& v) const {
  if (v.tape() != tape_) throw std::invalid_argument("Adjoints::wrt: variable belongs to another tape");
  if (v.index() >= values_.size()) throw std::out_of_range("Adjoints::wrt: variable recorded after the reverse pass");
  return values_[v.index()];
}

Var Tape::variable(double value) {
  nodes_.push_back({OpKind::leaf, 0, {0, 0}, {0.0, 0.0}});
  return Var(this, next_index() - 1, value);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this) throw std::invalid_argument("autodiff: operands recorded on different tapes");
  if (v.index() >= nodes_.size()) throw std::out_of_range("autodiff: stale variable (tape was cleared)");
}

Var Tape::record_unary(OpKind op, const Var& a, double value, double partial) {
  check_owned(a);
  nodes_.push_back({op, 1, {a.index(), 0}, {partial, 0.0}});
  return Var(this, next_index() - 1, value);
}

Var Tape::record_binary(OpKind op, const Var& a, const Var& b, double value, double pa, double pb) {
  check_owned(a);
  check_owned(b);
  nodes_.push_back({op, 2, {a.index(), b.index()}, {pa, pb}});
  return Var(this, next_index() - 1, value);
}

Adjoints Tape::reverse(const Var& root) const {
  if (root.tape() != this) throw std::invalid_argument("Tape::reverse: root is not on this tape");
  if (root.index() >= nodes_.size()) throw std::out_of_range("Tape::reverse: stale root");
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[root.index()] = 1.0;
  for (std::size_t i = root.index() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    const double a = adj[i];
    if (a == 0.0) continue;
    for (int k = 0; k < n.arity; ++k) adj[n.parents[k]] += a * n.partials[k];
  }
  return Adjoints(this, std::move(adj));
}

namespace {

Tape& tape_of(const Var& a) {
  if (a.tape() == nullptr) throw std::invalid_argument("autodiff: operation on a default-constructed Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("autodiff: operands recorded on different tapes");
  return tape_of(a);
}

[[noreturn]] void division_by_zero(const Tape& t) {
  throw std::domain_error("autodiff: division by zero at node " + std::to_string(t.next_index()));
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  return tape_of(a, b).record_binary(OpKind::add, a, b, a.value() + b.value(), 1.0, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  return tape_of(a, b).record_binary(OpKind::sub, a, b, a.value() - b.value(), 1.0, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  return tape_of(a, b).record_binary(OpKind::mul, a, b, a.value() * b.value(), b.value(), a.value());
}

Var operator/(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  if (b.value() == 0.0) division_by_zero(t);
  const double q = a.value() / b.value();
  return t.record_binary(OpKind::div, a, b, q, 1.0 / b.value(), -q / b.value());
}

Var operator-(const Var& a) { return tape_of(a).record_unary(OpKind::neg, a, -a.value(), -1.0); }

Var operator+(const Var& a, double b) { return tape_of(a).record_unary(OpKind::add, a, a.value() + b, 1.0); }
Var operator+(double a, const Var& b) { return b + a; }
Var operator-(const Var& a, double b) { return tape_of(a).record_unary(OpKind::sub, a, a.value() - b, 1.0); }
Var operator-(double a, const Var& b) { return tape_of(b).record_unary(OpKind::sub, b, a - b.value(), -1.0); }
Var operator*(const Var& a, double b) { return tape_of(a).record_unary(OpKind::mul, a, a.value() * b, b); }
Var operator*(double a, const Var& b) { return b * a; }

Var operator/(const Var& a, double b) {
  Tape& t = tape_of(a);
  if (b == 0.0) division_by_zero(t);
  return t.record_unary(OpKind::div, a, a.value() / b, 1.0 / b);
}

Var operator/(double a, const Var& b) {
  Tape& t = tape_of(b);
  if (b.value() == 0.0) division_by_zero(t);
  const double q = a / b.value();
  return t.record_unary(OpKind::div, b, q, -q / b.value());
}

Var sin(const Var& a) { return tape_of(a).record_unary(OpKind::sin, a, std::sin(a.value()), std::cos(a.value())); }
Var cos(const Var& a) { return tape_of(a).record_unary(OpKind::cos, a, std::cos(a.value()), -std::sin(a.value())); }

Var tanh(const Var& a) {
  const double y = std::tanh(a.value());
  return tape_of(a).record_unary(OpKind::tanh, a, y, 1.0 - y * y);
}

Var exp(const Var& a) {
  const double y = std::exp(a.value());
  return tape_of(a).record_unary(OpKind::exp, a, y, y);
}

Var sqrt(const Var& a) {
  Tape& t = tape_of(a);
  const double y = std::sqrt(a.value());
  if (y == 0.0) division_by_zero(t);
  return t.record_unary(OpKind::sqrt, a, y, 0.5 / y);
}

Var square(const Var& a) {
  return tape_of(a).record_unary(OpKind::square, a, a.value() * a.value(), 2.0 * a.value());
}

Var pow_int(const Var& a, int k) {
  Tape& t = tape_of(a);
  if (k < 0 && a.value() == 0.0) division_by_zero(t);
  if (k == 0) return t.record_unary(OpKind::pow_int, a, 1.0, 0.0);
  const double below = std::pow(a.value(), k - 1);
  return t.record_unary(OpKind::pow_int, a, below * a.value(), k * below);
}

std::vector<Jet<Var>> seed_input(std::span<const double> x, Tape& tape) {
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > kMaxInputDim) throw std::invalid_argument("seed_input: input dimension must be 1..3");
  std::vector<Jet<Var>> out;
  out.reserve(x.size());
  for (int i = 0; i < d; ++i) {
    Jet<Var> j;
    j.dim = d;
    j.v = tape.variable(x[i]);
    for (int k = 0; k < d; ++k) {
      j.g[k] = tape.variable(k == i ? 1.0 : 0.0);
      j.h[k] = tape.variable(0.0);
    }
    out.push_back(j);
  }
  return out;
}

}  // namespace alpinn::ad
