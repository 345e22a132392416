#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "alpinn/problems.hpp"
#include "alpinn/quadrature.hpp"

using namespace alpinn;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> random_point(const Box& box, std::mt19937_64& rng) {
  std::vector<double> x(box.lo.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = std::uniform_real_distribution<double>(box.lo[k], box.hi[k])(rng);
  }
  return x;
}

double max_residual(const PdeProblem& p, const std::vector<double>& x) {
  const auto u = p.exact(JetSpan<double>(ad::seed_input<double>(x)));
  double worst = 0.0;
  for (double r : pointwise_residuals<double>(p, JetSpan<double>(u), x)) worst = std::max(worst, std::fabs(r));
  return worst;
}

double max_constraint(const PdeProblem& p, const SampledGrid& grid) {
  double worst = 0.0;
  for (const ConstraintGroup& c : p.constraints) {
    const Region r = region_of(c.kind);
    const PointSet& ps = grid.region(r);
    for (Eigen::Index j = 0; j < ps.size(); ++j) {
      const std::vector<double> x(ps.x.col(j).data(), ps.x.col(j).data() + ps.x.rows());
      const std::vector<double> n(ps.normal.col(j).data(), ps.normal.col(j).data() + ps.normal.rows());
      const auto u = p.exact(JetSpan<double>(ad::seed_input<double>(x)));
      const double op = constraint_operator<double>(c.kind, u[static_cast<std::size_t>(c.output)], n);
      const double target = r == Region::boundary ? c.target(x, n) : c.target(x, std::span<const double>());
      worst = std::max(worst, std::fabs(op - target));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("helmholtz") {
  const PdeProblem p = helmholtz();
  CHECK(p.input_dim() == 2);
  CHECK(p.constraints.size() == 1);
  CHECK(p.exact(std::vector<double>{0.5, 0.125})[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::fabs(p.exact(std::vector<double>{1.0, 0.3})[0]) < 1e-15);
  CHECK(max_residual(p, {0.3, -0.7}) < 1e-10);
  const std::vector<double> x{0.3, -0.7};
  const double s = std::sin(pi * 0.3) * std::sin(-4 * pi * 0.7);
  CHECK(p.forcing(0, x) == doctest::Approx(-pi * pi * s - 16 * pi * pi * s + s).epsilon(1e-14));
}

TEST_CASE("burgers exact solution") {
  const PdeProblem p = burgers();
  CHECK(p.exact(std::vector<double>{0.0, 0.5})[0] == doctest::Approx(-1.0).epsilon(1e-15));
  for (double x : {-0.9, -0.3, 0.2, 0.77}) CHECK(burgers_exact(0.0, x) == -std::sin(pi * x));
  for (double t : {0.1, 0.35, 0.6, 1.0}) {
    CHECK(std::fabs(burgers_exact(t, -1.0)) < 1e-8);
    CHECK(std::fabs(burgers_exact(t, 1.0)) < 1e-8);
    CHECK(std::fabs(burgers_exact(t, 0.0)) < 1e-14);
    CHECK(burgers_exact(t, 0.3) == doctest::Approx(-burgers_exact(t, -0.3)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(burgers_exact(-0.1, 0.2), std::domain_error);
  CHECK(max_residual(p, {0.4, 0.3}) < 1e-8);
}

TEST_CASE("burgers matches adaptive quadrature of the Cole-Hopf integrals") {
  // tests/oracles/burgers_quad.py at 30 digits
  const double table[][3] = {{0.25, 0.5, -0.80319842084063256}, {0.5, 0.25, -0.84735452445093094},
                             {0.5, -0.6, 0.47939010630011473},  {0.75, 0.1, -0.80039599246345775},
                             {1.0, -0.05, 0.70002708087955996}, {1.0, 0.4, -0.45005536660453397},
                             {0.1, 0.9, -0.23687988503922187}};
  for (const auto& row : table) {
    CAPTURE(row[0]);
    CAPTURE(row[1]);
    CHECK(std::fabs(burgers_exact(row[0], row[1]) - row[2]) < 1e-10);
  }
}

TEST_CASE("klein-gordon") {
  const PdeProblem p = klein_gordon();
  REQUIRE(p.constraints.size() == 3);
  CHECK(p.constraints[0].kind == ConstraintKind::initial_value);
  CHECK(p.constraints[1].kind == ConstraintKind::initial_time_derivative);
  CHECK(p.constraints[2].kind == ConstraintKind::dirichlet_boundary);
  const std::vector<double> x0{0.0, 0.7};
  CHECK(p.constraints[0].target(x0, {}) == doctest::Approx(0.7));
  CHECK(p.constraints[1].target(x0, {}) == 0.0);
  for (double t : {0.0, 0.3, 1.0}) CHECK(p.exact(std::vector<double>{t, 0.0})[0] == 0.0);
  CHECK(max_residual(p, {0.4, 0.6}) < 1e-10);
  const double t = 0.4, x = 0.6;
  const double u = x * std::cos(5 * pi * t) + std::pow(t * x, 3);
  const double f = -25 * pi * pi * x * std::cos(5 * pi * t) + 6 * t * x * x * x - 6 * t * t * t * x + u * u * u;
  CHECK(p.forcing(0, std::vector<double>{t, x}) == doctest::Approx(f).epsilon(1e-13));
}

TEST_CASE("navier-stokes") {
  const PdeProblem p = navier_stokes(0.01);
  CHECK(p.input_dim() == 3);
  CHECK(p.n_residuals == 3);
  CHECK(p.output_dim() == 3);
  REQUIRE(p.constraints.size() == 6);
  int neumann = 0;
  for (const auto& c : p.constraints) neumann += c.kind == ConstraintKind::neumann_boundary;
  CHECK(neumann == 1);
  CHECK(p.domain.lo == std::vector<double>{0.0, 0.5, 0.5});
  CHECK(p.domain.hi == std::vector<double>{2.0, 4.5, 4.5});
  CHECK(max_residual(p, {0.7, 1.3, 3.9}) < 1e-10);
  CHECK_THROWS_AS(navier_stokes(0.0), std::invalid_argument);
}

TEST_CASE("exact solutions zero every residual and constraint") {
  std::mt19937_64 rng(42);
  for (const char* name : {"helmholtz", "burgers", "klein-gordon", "navier-stokes"}) {
    CAPTURE(name);
    const PdeProblem p = make_problem(name);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) worst = std::max(worst, max_residual(p, random_point(p.domain, rng)));
    CHECK(worst < 1e-8);
    CHECK(max_constraint(p, sample(p, p.default_grid)) < 1e-8);
  }
  CHECK_THROWS_AS(make_problem("poisson"), std::invalid_argument);
}

TEST_CASE("uniform sampling") {
  const PdeProblem h = helmholtz();
  const SampledGrid g = sample(h, {2500, 200, 0});
  CHECK(g.interior.size() == 2500);
  CHECK(g.boundary.size() == 200);
  CHECK(g.initial.size() == 0);
  for (Eigen::Index j = 0; j < g.interior.size(); ++j) {
    const std::vector<double> x{g.interior.x(0, j), g.interior.x(1, j)};
    CHECK(h.domain.contains_strictly(x));
  }
  // each face gets a quarter of the boundary points, with the outward normal
  int right = 0;
  for (Eigen::Index j = 0; j < g.boundary.size(); ++j) {
    if (g.boundary.normal(0, j) == 1.0) {
      ++right;
      CHECK(g.boundary.x(0, j) == 1.0);
    }
  }
  CHECK(right == 50);
  CHECK_THROWS_AS(sample(h, {2501, 200, 0}), std::invalid_argument);
  CHECK_THROWS_AS(sample(h, {2500, 202, 0}), std::invalid_argument);

  const PdeProblem b = burgers();
  const SampledGrid gb = sample(b, b.default_grid);
  CHECK(gb.initial.size() == 50);
  for (Eigen::Index j = 0; j < gb.initial.size(); ++j) CHECK(gb.initial.x(0, j) == 0.0);

  const PdeProblem ns = navier_stokes();
  const SampledGrid gn = sample(ns, ns.default_grid);
  CHECK(gn.interior.size() == 1000);
  CHECK(gn.boundary.size() == 400);
  CHECK(gn.initial.size() == 100);

  CHECK(uniform_grid(h.domain, 5).cols() == 25);
}

TEST_CASE("gauss-hermite quadrature") {
  const GaussHermite q = gauss_hermite(120);
  REQUIRE(q.nodes.size() == 120);
  double w = 0.0, m2 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    w += q.weights[i];
    m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    m4 += q.weights[i] * std::pow(q.nodes[i], 4);
  }
  CHECK(w == doctest::Approx(std::sqrt(pi)).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(std::sqrt(pi) / 2).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3 * std::sqrt(pi) / 4).epsilon(1e-13));
}
