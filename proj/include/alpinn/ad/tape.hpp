#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace alpinn::ad {

enum class OpKind : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  neg,
  sin,
  cos,
  tanh,
  exp,
  sqrt,
  pow_int,
  square,
};

class Tape;

/// Handle to one recorded scalar on a Tape. Cheap to copy; carries its value.
class Var {
 public:
  Var() = default;

  double value() const { return value_; }
  std::uint32_t index() const { return index_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

/// Result of a reverse sweep: one adjoint per recorded node.
class Adjoints {
 public:
  Adjoints(const Tape* tape, std::vector<double> values) : tape_(tape), values_(std::move(values)) {}

  /// d(root)/d(v). Throws if `v` lives on another tape.
  double wrt(const Var& v) const;
  double operator[](std::uint32_t node) const { return values_[node]; }
  std::span<const double> values() const { return values_; }

 private:
  const Tape* tape_;
  std::vector<double> values_;
};

/// Append-only record of scalar operations. Parents always precede their
/// children, so a reverse pass is a single backwards walk over the nodes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(double value);

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::uint32_t node) const { return nodes_.at(node).op; }
  /// Local partial of `node` with respect to its k-th parent.
  double partial(std::uint32_t node, int k) const { return nodes_.at(node).partials[k]; }

  void clear() { nodes_.clear(); }

  Adjoints reverse(const Var& root) const;

  // Recording primitives used by the arithmetic overloads.
  Var record_unary(OpKind op, const Var& a, double value, double partial);
  Var record_binary(OpKind op, const Var& a, const Var& b, double value, double pa, double pb);

  /// Index the next recorded node will receive.
  std::uint32_t next_index() const { return static_cast<std::uint32_t>(nodes_.size()); }

 private:
  struct Node {
    OpKind op;
    std::uint8_t arity;
    std::uint32_t parents[2];
    double partials[2];
  };

  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var sin(const Var& a);
Var cos(const Var& a);
Var tanh(const Var& a);
Var exp(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var pow_int(const Var& a, int k);

}  // namespace alpinn::ad
