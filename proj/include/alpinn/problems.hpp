#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "alpinn/ad/graph.hpp"
#include "alpinn/ad/jet.hpp"
#include "alpinn/ad/tape.hpp"

namespace alpinn {

template <class S>
using JetSpan = std::span<const ad::Jet<S>>;

/// A differential operator written once as a generic callable over jets and
/// stored for every coefficient type the library evaluates it with.
class JetOperator {
 public:
  JetOperator() = default;

  template <class F>
  explicit JetOperator(F f) : d_(f), ld_(f), var_(f), tensor_(f) {}

  std::vector<double> operator()(JetSpan<double> u) const { return d_(u); }
  std::vector<long double> operator()(JetSpan<long double> u) const { return ld_(u); }
  std::vector<ad::Var> operator()(JetSpan<ad::Var> u) const { return var_(u); }
  std::vector<ad::Tensor> operator()(JetSpan<ad::Tensor> u) const { return tensor_(u); }

 private:
  std::function<std::vector<double>(JetSpan<double>)> d_;
  std::function<std::vector<long double>(JetSpan<long double>)> ld_;
  std::function<std::vector<ad::Var>(JetSpan<ad::Var>)> var_;
  std::function<std::vector<ad::Tensor>(JetSpan<ad::Tensor>)> tensor_;
};

/// Closed-form solution, evaluated on plain points or on input jets.
class ExactSolution {
 public:
  ExactSolution() = default;

  template <class F>
  explicit ExactSolution(F f) : d_(f), jet_(f) {}

  std::vector<double> operator()(std::span<const double> x) const { return d_(x); }
  std::vector<ad::Jet<double>> operator()(JetSpan<double> x) const { return jet_(x); }

 private:
  std::function<std::vector<double>(std::span<const double>)> d_;
  std::function<std::vector<ad::Jet<double>>(JetSpan<double>)> jet_;
};

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double extent(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
  double volume() const;
  bool contains_strictly(std::span<const double> x) const;
};

enum class ConstraintKind { dirichlet_boundary, initial_value, initial_time_derivative, neumann_boundary };
enum class Region { interior, boundary, initial };

Region region_of(ConstraintKind kind);
std::string_view to_string(ConstraintKind kind);

struct ConstraintGroup {
  std::string name;
  ConstraintKind kind = ConstraintKind::dirichlet_boundary;
  int output = 0;  // which network output the constraint acts on
  /// Target value at a point; `normal` is the outward unit normal on boundary
  /// points and empty elsewhere.
  std::function<double(std::span<const double> x, std::span<const double> normal)> target;
};

/// Constraint operator applied to the jet of the constrained output, before
/// the target is subtracted.
template <class S>
S constraint_operator(ConstraintKind kind, const ad::Jet<S>& u, std::span<const S> normal) {
  switch (kind) {
    case ConstraintKind::dirichlet_boundary:
    case ConstraintKind::initial_value:
      return u.v;
    case ConstraintKind::initial_time_derivative:
      return u.g[0];
    case ConstraintKind::neumann_boundary: {
      S acc = normal[0] * u.g[0];
      for (int k = 1; k < u.dim; ++k) acc = acc + normal[static_cast<std::size_t>(k)] * u.g[static_cast<std::size_t>(k)];
      return acc;
    }
  }
  throw std::logic_error("constraint_operator: unknown kind");
}

struct GridSpec {
  int n_r = 0;
  int n_b = 0;
  int n_i = 0;
};

struct PdeProblem {
  std::string name;
  Box domain;
  bool time_dependent = false;  // if set, axis 0 is time
  std::vector<std::string> axis_names;
  std::vector<std::string> outputs;
  int n_residuals = 1;
  /// N(u), one entry per residual equation, without the forcing.
  JetOperator residual;
  /// Right-hand side of residual equation k at a point.
  std::function<double(int k, std::span<const double> x)> forcing;
  std::vector<ConstraintGroup> constraints;
  ExactSolution exact;
  GridSpec default_grid;

  int input_dim() const { return domain.dim(); }
  int output_dim() const { return static_cast<int>(outputs.size()); }
  /// Measure of the region a group samples from (used only with measure weights).
  double region_measure(Region r) const;
};

struct KleinGordonCoefficients {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 1.0;
  int k = 3;
};

PdeProblem helmholtz();
PdeProblem burgers();
PdeProblem klein_gordon(const KleinGordonCoefficients& coeffs = {});
PdeProblem navier_stokes(double nu = 0.01);

struct ProblemOptions {
  double nu = 0.01;
  KleinGordonCoefficients kg;
};

/// helmholtz | burgers | klein-gordon | navier-stokes
PdeProblem make_problem(std::string_view name, const ProblemOptions& opts = {});

inline constexpr double kBurgersViscosity = 0.01 / 3.14159265358979323846;

/// Cole-Hopf solution of the viscous Burgers problem, by Gauss-Hermite
/// quadrature. Throws for t < 0.
double burgers_exact(double t, double x);
ad::Jet<double> burgers_exact(const ad::Jet<double>& t, const ad::Jet<double>& x);

struct PointSet {
  Eigen::MatrixXd x;       // dim x N
  Eigen::MatrixXd normal;  // dim x N, zero columns where no normal applies
  Eigen::Index size() const { return x.cols(); }
};

struct SampledGrid {
  PointSet interior;
  PointSet boundary;
  PointSet initial;

  const PointSet& region(Region r) const;
};

/// Uniform collocation points. The seed is accepted for interface stability;
/// uniform layouts do not consume randomness.
SampledGrid sample(const PdeProblem& problem, const GridSpec& grid, std::uint64_t seed = 0);

/// Uniform grid with n points per axis, boundary included (n^dim points).
Eigen::MatrixXd uniform_grid(const Box& box, int n);

/// Residuals of every equation at one point for jets of all outputs, forcing subtracted.
template <class S>
std::vector<S> pointwise_residuals(const PdeProblem& p, JetSpan<S> u, std::span<const double> x) {
  std::vector<S> r = p.residual(u);
  for (int k = 0; k < p.n_residuals; ++k) r[static_cast<std::size_t>(k)] = r[static_cast<std::size_t>(k)] - p.forcing(k, x);
  return r;
}

}  // namespace alpinn
