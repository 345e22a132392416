#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "alpinn/ad/tape.hpp"

namespace alpinn::ad {

inline constexpr int kMaxInputDim = 3;

// Plain-number helpers so generic code can call pow_int / square / value_of on
// every coefficient type.
inline double pow_int(double x, int k) { return std::pow(x, k); }
inline long double pow_int(long double x, int k) { return std::pow(x, k); }
inline double square(double x) { return x * x; }
inline long double square(long double x) { return x * x; }
inline double value_of(double x) { return x; }
inline long double value_of(long double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }


/// Truncated Taylor value in the network inputs: the value, the gradient and
/// the diagonal of the Hessian. Mixed second partials are not carried.
///
/// S is the coefficient type: double / long double for plain evaluation, Var
/// when the coefficients must be differentiable with respect to parameters.
template <class S>
struct Jet {
  using value_type = S;

  int dim = 0;
  S v{};
  std::array<S, kMaxInputDim> g{};
  std::array<S, kMaxInputDim> h{};

  static Jet constant(int dim, const S& value, const S& zero) {
    Jet j;
    j.dim = dim;
    j.v = value;
    for (int i = 0; i < dim; ++i) j.g[i] = j.h[i] = zero;
    return j;
  }

  /// d²/dx_i dx_j. Only the diagonal is available.
  const S& second(int i, int j) const {
    if (i != j) throw std::logic_error("Jet: mixed second partials are not carried");
    return h.at(static_cast<std::size_t>(i));
  }
};

namespace detail {

template <class S>
void check_dims(const Jet<S>& a, const Jet<S>& b) {
  if (a.dim != b.dim) throw std::invalid_argument("Jet: input dimension mismatch");
}

/// Composes a scalar function with value f, first derivative f1 and second
/// derivative f2 (all evaluated at u.v) with the jet u.
template <class S>
Jet<S> chain(const Jet<S>& u, const S& f, const S& f1, const S& f2) {
  Jet<S> r;
  r.dim = u.dim;
  r.v = f;
  for (int i = 0; i < u.dim; ++i) {
    r.g[i] = f1 * u.g[i];
    r.h[i] = f2 * (u.g[i] * u.g[i]) + f1 * u.h[i];
  }
  return r;
}

}  // namespace detail

template <class S>
Jet<S> operator+(const Jet<S>& a, const Jet<S>& b) {
  detail::check_dims(a, b);
  Jet<S> r;
  r.dim = a.dim;
  r.v = a.v + b.v;
  for (int i = 0; i < a.dim; ++i) {
    r.g[i] = a.g[i] + b.g[i];
    r.h[i] = a.h[i] + b.h[i];
  }
  return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a, const Jet<S>& b) {
  detail::check_dims(a, b);
  Jet<S> r;
  r.dim = a.dim;
  r.v = a.v - b.v;
  for (int i = 0; i < a.dim; ++i) {
    r.g[i] = a.g[i] - b.g[i];
    r.h[i] = a.h[i] - b.h[i];
  }
  return r;
}

template <class S>
Jet<S> operator-(const Jet<S>& a) {
  Jet<S> r;
  r.dim = a.dim;
  r.v = -a.v;
  for (int i = 0; i < a.dim; ++i) {
    r.g[i] = -a.g[i];
    r.h[i] = -a.h[i];
  }
  return r;
}

template <class S>
Jet<S> operator*(const Jet<S>& a, const Jet<S>& b) {
  detail::check_dims(a, b);
  Jet<S> r;
  r.dim = a.dim;
  r.v = a.v * b.v;
  for (int i = 0; i < a.dim; ++i) {
    r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    r.h[i] = a.h[i] * b.v + 2.0 * (a.g[i] * b.g[i]) + a.v * b.h[i];
  }
  return r;
}

// Scaling and shifting by a coefficient (a Var parameter or a plain number).
template <class S, class C>
Jet<S> scaled(const Jet<S>& a, const C& c) {
  Jet<S> r;
  r.dim = a.dim;
  r.v = a.v * c;
  for (int i = 0; i < a.dim; ++i) {
    r.g[i] = a.g[i] * c;
    r.h[i] = a.h[i] * c;
  }
  return r;
}

template <class S>
Jet<S> operator*(const Jet<S>& a, double c) { return scaled(a, c); }
template <class S>
Jet<S> operator*(double c, const Jet<S>& a) { return scaled(a, c); }
template <class S>
Jet<S> operator*(const Jet<S>& a, const S& c) requires(!std::is_same_v<S, double>) { return scaled(a, c); }
template <class S>
Jet<S> operator*(const S& c, const Jet<S>& a) requires(!std::is_same_v<S, double>) { return scaled(a, c); }

template <class S, class C>
Jet<S> shifted(const Jet<S>& a, const C& c) {
  Jet<S> r = a;
  r.v = a.v + c;
  return r;
}

template <class S>
Jet<S> operator+(const Jet<S>& a, double c) { return shifted(a, c); }
template <class S>
Jet<S> operator+(double c, const Jet<S>& a) { return shifted(a, c); }
template <class S>
Jet<S> operator-(const Jet<S>& a, double c) { return shifted(a, -c); }
template <class S>
Jet<S> operator-(double c, const Jet<S>& a) { return shifted(-a, c); }
template <class S>
Jet<S> operator+(const Jet<S>& a, const S& c) requires(!std::is_same_v<S, double>) { return shifted(a, c); }

template <class S>
Jet<S> reciprocal(const Jet<S>& u) {
  if (static_cast<double>(value_of(u.v)) == 0.0) throw std::domain_error("Jet: division by zero");
  const S r = 1.0 / u.v;
  const S r2 = r * r;
  return detail::chain(u, r, -r2, 2.0 * (r2 * r));
}

template <class S>
Jet<S> operator/(const Jet<S>& a, const Jet<S>& b) { return a * reciprocal(b); }
template <class S>
Jet<S> operator/(const Jet<S>& a, double c) { return a * (1.0 / c); }
template <class S>
Jet<S> operator/(double c, const Jet<S>& a) { return reciprocal(a) * c; }

template <class S>
Jet<S> sin(const Jet<S>& u) {
  using std::cos;
  using std::sin;
  const S s = sin(u.v);
  return detail::chain(u, s, cos(u.v), -s);
}

template <class S>
Jet<S> cos(const Jet<S>& u) {
  using std::cos;
  using std::sin;
  const S c = cos(u.v);
  return detail::chain(u, c, -sin(u.v), -c);
}

template <class S>
Jet<S> tanh(const Jet<S>& u) {
  using std::tanh;
  const S z = tanh(u.v);
  const S d1 = 1.0 - z * z;
  return detail::chain(u, z, d1, -2.0 * (z * d1));
}

template <class S>
Jet<S> exp(const Jet<S>& u) {
  using std::exp;
  const S e = exp(u.v);
  return detail::chain(u, e, e, e);
}

template <class S>
Jet<S> sqrt(const Jet<S>& u) {
  using std::sqrt;
  const S r = sqrt(u.v);
  const S d1 = 0.5 / r;
  return detail::chain(u, r, d1, -0.5 * (d1 / u.v));
}

template <class S>
Jet<S> square(const Jet<S>& u) { return u * u; }

template <class S>
Jet<S> pow_int(const Jet<S>& u, int k) {
  if (k == 0) return detail::chain(u, u.v * 0.0 + 1.0, u.v * 0.0, u.v * 0.0);
  if (k == 1) return u;
  using std::pow;
  const S below2 = pow_int(u.v, k - 2);
  const S below1 = below2 * u.v;
  return detail::chain(u, below1 * u.v, static_cast<double>(k) * below1,
                       static_cast<double>(k) * (k - 1) * below2);
}

/// Jets for the coordinates of one input point: jet i has value x[i],
/// gradient e_i and zero second derivatives.
template <class S = double>
std::vector<Jet<S>> seed_input(std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  if (d < 1 || d > kMaxInputDim) throw std::invalid_argument("seed_input: input dimension must be 1..3");
  std::vector<Jet<S>> out;
  out.reserve(x.size());
  for (int i = 0; i < d; ++i) {
    Jet<S> j = Jet<S>::constant(d, static_cast<S>(x[i]), S(0));
    j.g[i] = S(1);
    out.push_back(j);
  }
  return out;
}

/// Tape-backed variant: the coordinates and the seed coefficients are recorded
/// as constant leaves so the resulting jets can mix with parameter Vars.
std::vector<Jet<Var>> seed_input(std::span<const double> x, Tape& tape);

}  // namespace alpinn::ad
