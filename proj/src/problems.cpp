#include "alpinn/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "alpinn/quadrature.hpp"

namespace alpinn {

using std::numbers::pi;

double Box::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= extent(k);
  return v;
}

bool Box::contains_strictly(std::span<const double> x) const {
  for (int k = 0; k < dim(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
  }
  return true;
}

Region region_of(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::dirichlet_boundary:
    case ConstraintKind::neumann_boundary:
      return Region::boundary;
    case ConstraintKind::initial_value:
    case ConstraintKind::initial_time_derivative:
      return Region::initial;
  }
  throw std::logic_error("region_of: unknown kind");
}

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::dirichlet_boundary: return "dirichlet_boundary";
    case ConstraintKind::initial_value: return "initial_value";
    case ConstraintKind::initial_time_derivative: return "initial_time_derivative";
    case ConstraintKind::neumann_boundary: return "neumann_boundary";
  }
  return "?";
}

double PdeProblem::region_measure(Region r) const {
  const int d = domain.dim();
  const int first_space = time_dependent ? 1 : 0;
  double space_volume = 1.0;
  for (int k = first_space; k < d; ++k) space_volume *= domain.extent(k);
  // measure of the spatial boundary
  double surface = 0.0;
  if (d - first_space == 1) {
    surface = 2.0;
  } else {
    for (int k = first_space; k < d; ++k) surface += 2.0 * space_volume / domain.extent(k);
  }
  switch (r) {
    case Region::interior: return domain.volume();
    case Region::boundary: return time_dependent ? surface * domain.extent(0) : surface;
    case Region::initial: return space_volume;
  }
  return 1.0;
}

const PointSet& SampledGrid::region(Region r) const {
  switch (r) {
    case Region::interior: return interior;
    case Region::boundary: return boundary;
    case Region::initial: return initial;
  }
  throw std::logic_error("SampledGrid::region: unknown region");
}

// ---------------------------------------------------------------------------
// Burgers

namespace {

double value(double x) { return x; }
double value(const ad::Jet<double>& x) { return x.v; }

template <class T>
T cole_hopf(const T& t, const T& x) {
  using ad::cos;
  using ad::exp;
  using ad::sin;
  using ad::sqrt;
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  static const GaussHermite rule = gauss_hermite(100);
  if (value(t) < 0.0) throw std::domain_error("burgers_exact: t must be nonnegative");
  if (value(t) == 0.0) return -sin(x * pi);
  const double c = kBurgersViscosity;
  // F is scaled by exp(-1/(2 pi c)) so it stays in (0, 1]; the factor cancels in the ratio
  const double inv = 1.0 / (2.0 * pi * c);
  const T s = sqrt(t * c) * 2.0;
  T num{}, den{};
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const T y = x - s * rule.nodes[i];
    const T f = exp((-cos(y * pi) - 1.0) * inv) * rule.weights[i];
    const T a = sin(y * pi) * f;
    if (i == 0) {
      num = a;
      den = f;
    } else {
      num = num + a;
      den = den + f;
    }
  }
  return -(num / den);
}

}  // namespace

double burgers_exact(double t, double x) { return cole_hopf(t, x); }
ad::Jet<double> burgers_exact(const ad::Jet<double>& t, const ad::Jet<double>& x) { return cole_hopf(t, x); }

// ---------------------------------------------------------------------------
// problem factories

PdeProblem helmholtz() {
  PdeProblem p;
  p.name = "helmholtz";
  p.domain = {{-1.0, -1.0}, {1.0, 1.0}};
  p.axis_names = {"x", "y"};
  p.outputs = {"u"};
  p.residual = JetOperator([](auto u) { return std::vector{u[0].h[0] + u[0].h[1] + u[0].v}; });
  p.forcing = [](int, std::span<const double> x) {
    const double s = std::sin(pi * x[0]) * std::sin(4.0 * pi * x[1]);
    return -pi * pi * s - 16.0 * pi * pi * s + s;
  };
  p.constraints.push_back({"boundary", ConstraintKind::dirichlet_boundary, 0,
                           [](std::span<const double>, std::span<const double>) { return 0.0; }});
  p.exact = ExactSolution([](auto x) {
    using ad::sin;
    using std::sin;
    return std::vector{sin(x[0] * pi) * sin(x[1] * (4.0 * pi))};
  });
  p.default_grid = {2500, 200, 0};
  return p;
}

PdeProblem burgers() {
  PdeProblem p;
  p.name = "burgers";
  p.domain = {{0.0, -1.0}, {1.0, 1.0}};
  p.time_dependent = true;
  p.axis_names = {"t", "x"};
  p.outputs = {"u"};
  const double c = kBurgersViscosity;
  p.residual = JetOperator([c](auto u) {
    const auto& w = u[0];
    return std::vector{w.g[0] + w.v * w.g[1] - w.h[1] * c};
  });
  p.forcing = [](int, std::span<const double>) { return 0.0; };
  p.constraints.push_back({"initial", ConstraintKind::initial_value, 0,
                           [](std::span<const double> x, std::span<const double>) { return -std::sin(pi * x[1]); }});
  p.constraints.push_back({"boundary", ConstraintKind::dirichlet_boundary, 0,
                           [](std::span<const double>, std::span<const double>) { return 0.0; }});
  p.exact = ExactSolution([](auto x) { return std::vector{burgers_exact(x[0], x[1])}; });
  p.default_grid = {2500, 100, 50};
  return p;
}

PdeProblem klein_gordon(const KleinGordonCoefficients& kc) {
  if (kc.k < 1) throw std::invalid_argument("klein_gordon: exponent k must be >= 1");
  PdeProblem p;
  p.name = "klein-gordon";
  p.domain = {{0.0, 0.0}, {1.0, 1.0}};
  p.time_dependent = true;
  p.axis_names = {"t", "x"};
  p.outputs = {"u"};
  p.residual = JetOperator([kc](auto u) {
    const auto& w = u[0];
    return std::vector{w.h[0] - w.h[1] * kc.alpha + w.v * kc.beta + ad::pow_int(w.v, kc.k) * kc.gamma};
  });
  // u = x cos(5 pi t) + (t x)^3
  p.forcing = [kc](int, std::span<const double> x) {
    const double t = x[0], s = x[1];
    const double u = s * std::cos(5.0 * pi * t) + std::pow(t * s, 3);
    const double u_tt = -25.0 * pi * pi * s * std::cos(5.0 * pi * t) + 6.0 * t * s * s * s;
    const double u_xx = 6.0 * t * t * t * s;
    return u_tt - kc.alpha * u_xx + kc.beta * u + kc.gamma * std::pow(u, kc.k);
  };
  p.constraints.push_back({"initial", ConstraintKind::initial_value, 0,
                           [](std::span<const double> x, std::span<const double>) { return x[1]; }});
  p.constraints.push_back({"initial_rate", ConstraintKind::initial_time_derivative, 0,
                           [](std::span<const double>, std::span<const double>) { return 0.0; }});
  p.constraints.push_back({"boundary", ConstraintKind::dirichlet_boundary, 0,
                           [](std::span<const double> x, std::span<const double>) {
                             return x[1] * std::cos(5.0 * pi * x[0]) + std::pow(x[0] * x[1], 3);
                           }});
  p.exact = ExactSolution([](auto x) {
    using ad::cos;
    using std::cos;
    return std::vector{x[1] * cos(x[0] * (5.0 * pi)) + ad::pow_int(x[0] * x[1], 3)};
  });
  p.default_grid = {2500, 100, 50};
  return p;
}

namespace {

struct TaylorGreen {
  double nu;
  double u(double t, double x, double y) const {
    return std::sin(pi * x) * std::cos(pi * y) * std::exp(-2.0 * pi * pi * nu * t);
  }
  double v(double t, double x, double y) const {
    return -std::cos(pi * x) * std::sin(pi * y) * std::exp(-2.0 * pi * pi * nu * t);
  }
  double p(double t, double x, double y) const {
    return 0.25 * (std::cos(2.0 * pi * x) + std::cos(2.0 * pi * y)) * std::exp(-4.0 * pi * pi * nu * t);
  }
  double dp_dx(double t, double x) const { return -0.5 * pi * std::sin(2.0 * pi * x) * std::exp(-4.0 * pi * pi * nu * t); }
  double dp_dy(double t, double y) const { return -0.5 * pi * std::sin(2.0 * pi * y) * std::exp(-4.0 * pi * pi * nu * t); }
};

}  // namespace

PdeProblem navier_stokes(double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("navier_stokes: viscosity must be positive");
  const TaylorGreen tg{nu};
  PdeProblem p;
  p.name = "navier-stokes";
  p.domain = {{0.0, 0.5, 0.5}, {2.0, 4.5, 4.5}};
  p.time_dependent = true;
  p.axis_names = {"t", "x", "y"};
  p.outputs = {"u", "v", "p"};
  p.n_residuals = 3;
  p.residual = JetOperator([nu](auto w) {
    const auto& u = w[0];
    const auto& v = w[1];
    const auto& q = w[2];
    return std::vector{
        u.g[1] + v.g[2],
        u.g[0] + u.v * u.g[1] + v.v * u.g[2] + q.g[1] - (u.h[1] + u.h[2]) * nu,
        v.g[0] + u.v * v.g[1] + v.v * v.g[2] + q.g[2] - (v.h[1] + v.h[2]) * nu,
    };
  });
  p.forcing = [](int, std::span<const double>) { return 0.0; };
  using Pt = std::span<const double>;
  p.constraints.push_back({"initial_u", ConstraintKind::initial_value, 0, [tg](Pt x, Pt) { return tg.u(x[0], x[1], x[2]); }});
  p.constraints.push_back({"initial_v", ConstraintKind::initial_value, 1, [tg](Pt x, Pt) { return tg.v(x[0], x[1], x[2]); }});
  p.constraints.push_back({"initial_p", ConstraintKind::initial_value, 2, [tg](Pt x, Pt) { return tg.p(x[0], x[1], x[2]); }});
  p.constraints.push_back({"boundary_u", ConstraintKind::dirichlet_boundary, 0, [tg](Pt x, Pt) { return tg.u(x[0], x[1], x[2]); }});
  p.constraints.push_back({"boundary_v", ConstraintKind::dirichlet_boundary, 1, [tg](Pt x, Pt) { return tg.v(x[0], x[1], x[2]); }});
  p.constraints.push_back({"boundary_dp_dn", ConstraintKind::neumann_boundary, 2, [tg](Pt x, Pt n) {
                             return n[1] * tg.dp_dx(x[0], x[1]) + n[2] * tg.dp_dy(x[0], x[2]);
                           }});
  p.exact = ExactSolution([nu](auto x) {
    using ad::cos;
    using ad::exp;
    using ad::sin;
    using std::cos;
    using std::exp;
    using std::sin;
    const auto e1 = exp(x[0] * (-2.0 * pi * pi * nu));
    const auto e2 = exp(x[0] * (-4.0 * pi * pi * nu));
    return std::vector{
        sin(x[1] * pi) * cos(x[2] * pi) * e1,
        -(cos(x[1] * pi) * sin(x[2] * pi) * e1),
        (cos(x[1] * (2.0 * pi)) + cos(x[2] * (2.0 * pi))) * e2 * 0.25,
    };
  });
  p.default_grid = {1000, 400, 100};
  return p;
}

PdeProblem make_problem(std::string_view name, const ProblemOptions& opts) {
  if (name == "helmholtz") return helmholtz();
  if (name == "burgers") return burgers();
  if (name == "klein-gordon") return klein_gordon(opts.kg);
  if (name == "navier-stokes") return navier_stokes(opts.nu);
  throw std::invalid_argument("unknown problem '" + std::string(name) +
                              "' (expected helmholtz, burgers, klein-gordon or navier-stokes)");
}

// ---------------------------------------------------------------------------
// sampling

namespace {

int exact_root(int n, int dim, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + " must be positive");
  const int m = static_cast<int>(std::lround(std::pow(static_cast<double>(n), 1.0 / dim)));
  int p = 1;
  for (int k = 0; k < dim; ++k) p *= m;
  if (p != n) {
    throw std::invalid_argument(std::string(what) + " = " + std::to_string(n) + " is not a perfect " +
                                (dim == 2 ? "square" : dim == 3 ? "cube" : "power"));
  }
  return m;
}

// Tensor-product grid of per-axis coordinate lists; the last axis varies fastest.
Eigen::MatrixXd tensor_grid(const std::vector<std::vector<double>>& axes) {
  const int d = static_cast<int>(axes.size());
  Eigen::Index n = 1;
  for (const auto& a : axes) n *= static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd x(d, n);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int k = 0; k < d; ++k) x(k, j) = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
    for (int k = d; k-- > 0;) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < axes[static_cast<std::size_t>(k)].size()) break;
      i = 0;
    }
  }
  return x;
}

std::vector<double> cell_centers(double lo, double hi, int m) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) v[static_cast<std::size_t>(j)] = lo + (j + 0.5) * (hi - lo) / m;
  return v;
}

std::vector<double> closed(double lo, double hi, int m) {
  if (m == 1) return {0.5 * (lo + hi)};
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) v[static_cast<std::size_t>(j)] = lo + j * (hi - lo) / (m - 1);
  return v;
}

// m points of [lo, hi) walking up, or of (lo, hi] walking down
std::vector<double> half_open(double lo, double hi, int m, bool ascending) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    v[static_cast<std::size_t>(j)] = ascending ? lo + j * (hi - lo) / m : hi - j * (hi - lo) / m;
  }
  return v;
}

// Boundary of a 2D rectangle in the plane of axes (a, b), counterclockwise,
// each face half-open so every corner belongs to exactly one face.
// Returns one (points, normals) pair per face with m points each.
struct Face {
  std::vector<double> pa, pb;
  double na, nb;
};

std::vector<Face> rectangle_faces(double alo, double ahi, double blo, double bhi, int m) {
  std::vector<Face> faces(4);
  faces[0] = {half_open(alo, ahi, m, true), std::vector<double>(static_cast<std::size_t>(m), blo), 0.0, -1.0};
  faces[1] = {std::vector<double>(static_cast<std::size_t>(m), ahi), half_open(blo, bhi, m, true), 1.0, 0.0};
  faces[2] = {half_open(alo, ahi, m, false), std::vector<double>(static_cast<std::size_t>(m), bhi), 0.0, 1.0};
  faces[3] = {std::vector<double>(static_cast<std::size_t>(m), alo), half_open(blo, bhi, m, false), -1.0, 0.0};
  return faces;
}

PointSet with_zero_normals(Eigen::MatrixXd x) {
  PointSet ps;
  ps.normal = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  ps.x = std::move(x);
  return ps;
}

PointSet boundary_points(const PdeProblem& p, int n_b) {
  const Box& B = p.domain;
  const int d = B.dim();
  PointSet ps;
  if (!p.time_dependent) {
    if (d != 2) throw std::invalid_argument("sample: steady problems must be two-dimensional");
    if (n_b % 4 != 0) throw std::invalid_argument("n_b = " + std::to_string(n_b) + " must split evenly over 4 faces");
    const int m = n_b / 4;
    ps.x.resize(2, n_b);
    ps.normal.resize(2, n_b);
    Eigen::Index col = 0;
    for (const Face& f : rectangle_faces(B.lo[0], B.hi[0], B.lo[1], B.hi[1], m)) {
      for (int j = 0; j < m; ++j, ++col) {
        ps.x.col(col) << f.pa[static_cast<std::size_t>(j)], f.pb[static_cast<std::size_t>(j)];
        ps.normal.col(col) << f.na, f.nb;
      }
    }
    return ps;
  }
  if (d == 2) {
    if (n_b % 2 != 0) throw std::invalid_argument("n_b = " + std::to_string(n_b) + " must split evenly over 2 faces");
    const int m = n_b / 2;
    const auto ts = half_open(B.lo[0], B.hi[0], m, false);  // (t0, T], listed from T down
    ps.x.resize(2, n_b);
    ps.normal.setZero(2, n_b);
    for (int face = 0; face < 2; ++face) {
      for (int j = 0; j < m; ++j) {
        const Eigen::Index col = face * m + j;
        ps.x(0, col) = ts[static_cast<std::size_t>(m - 1 - j)];
        ps.x(1, col) = face == 0 ? B.lo[1] : B.hi[1];
        ps.normal(1, col) = face == 0 ? -1.0 : 1.0;
      }
    }
    return ps;
  }
  if (n_b % 4 != 0) throw std::invalid_argument("n_b = " + std::to_string(n_b) + " must split evenly over 4 faces");
  const int m = exact_root(n_b / 4, 2, "n_b / 4");
  const auto ts_desc = half_open(B.lo[0], B.hi[0], m, false);
  const std::vector<double> ts(ts_desc.rbegin(), ts_desc.rend());
  ps.x.resize(3, n_b);
  ps.normal.setZero(3, n_b);
  Eigen::Index col = 0;
  for (const Face& f : rectangle_faces(B.lo[1], B.hi[1], B.lo[2], B.hi[2], m)) {
    for (double t : ts) {
      for (int j = 0; j < m; ++j, ++col) {
        ps.x.col(col) << t, f.pa[static_cast<std::size_t>(j)], f.pb[static_cast<std::size_t>(j)];
        ps.normal(1, col) = f.na;
        ps.normal(2, col) = f.nb;
      }
    }
  }
  return ps;
}

PointSet initial_points(const PdeProblem& p, int n_i) {
  const Box& B = p.domain;
  const int space = B.dim() - 1;
  const int m = space == 1 ? n_i : exact_root(n_i, space, "n_i");
  if (m < 2) throw std::invalid_argument("n_i must give at least 2 points per axis");
  std::vector<std::vector<double>> axes{{B.lo[0]}};
  for (int k = 1; k < B.dim(); ++k) axes.push_back(closed(B.lo[static_cast<std::size_t>(k)], B.hi[static_cast<std::size_t>(k)], m));
  return with_zero_normals(tensor_grid(axes));
}

}  // namespace

SampledGrid sample(const PdeProblem& p, const GridSpec& grid, std::uint64_t /*seed*/) {
  const Box& B = p.domain;
  const int d = B.dim();
  SampledGrid s;
  const int m = exact_root(grid.n_r, d, "n_r");
  std::vector<std::vector<double>> axes;
  for (int k = 0; k < d; ++k) axes.push_back(cell_centers(B.lo[static_cast<std::size_t>(k)], B.hi[static_cast<std::size_t>(k)], m));
  s.interior = with_zero_normals(tensor_grid(axes));

  bool need_boundary = false, need_initial = false;
  for (const auto& c : p.constraints) {
    (region_of(c.kind) == Region::boundary ? need_boundary : need_initial) = true;
  }
  s.boundary = need_boundary ? boundary_points(p, grid.n_b) : with_zero_normals(Eigen::MatrixXd(d, 0));
  if (need_initial && !p.time_dependent) throw std::logic_error("sample: initial data on a steady problem");
  s.initial = need_initial ? initial_points(p, grid.n_i) : with_zero_normals(Eigen::MatrixXd(d, 0));
  return s;
}

Eigen::MatrixXd uniform_grid(const Box& box, int n) {
  if (n < 2) throw std::invalid_argument("uniform_grid: need at least 2 points per axis");
  std::vector<std::vector<double>> axes;
  for (int k = 0; k < box.dim(); ++k) axes.push_back(closed(box.lo[static_cast<std::size_t>(k)], box.hi[static_cast<std::size_t>(k)], n));
  return tensor_grid(axes);
}

}  // namespace alpinn
