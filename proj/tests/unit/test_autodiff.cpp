#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "alpinn/ad/graph.hpp"
#include "alpinn/ad/jet.hpp"
#include "alpinn/ad/tape.hpp"
#include "alpinn/network.hpp"

using namespace alpinn;
using namespace alpinn::ad;

TEST_CASE("var ops record one node each with exact values") {
  Tape t;
  const Var a = t.variable(2.0);
  const Var b = t.variable(5.0);
  const std::size_t before = t.size();
  const Var m = a * b;
  CHECK(m.value() == 10.0);
  CHECK(t.size() == before + 1);
  CHECK(tanh(t.variable(0.0)).value() == 0.0);
  const Var s = square(t.variable(3.0));
  CHECK(s.value() == 9.0);
  CHECK(t.partial(s.index(), 0) == 6.0);
  CHECK(t.kind(s.index()) == OpKind::square);
  CHECK(pow_int(t.variable(2.0), 3).value() == doctest::Approx(8.0));
  CHECK((a / b).value() == doctest::Approx(0.4));
  CHECK((a - b).value() == -3.0);
  CHECK((-a).value() == -2.0);
  CHECK(exp(t.variable(0.0)).value() == 1.0);
  CHECK(cos(t.variable(0.0)).value() == 1.0);
  CHECK(sin(t.variable(0.0)).value() == 0.0);
}

TEST_CASE("var op errors") {
  Tape t1, t2;
  const Var a = t1.variable(1.0);
  const Var b = t2.variable(1.0);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(t1.reverse(b), std::invalid_argument);
  const Var z = t1.variable(0.0);
  CHECK_THROWS_WITH_AS(a / z, doctest::Contains("division by zero at node"), std::domain_error);
}

TEST_CASE("reverse gives exact partials") {
  Tape t;
  const Var th = t.variable(3.0);
  const Var sq = th * th;
  CHECK(t.reverse(sq).wrt(th) == 6.0);
  const Var t1 = t.variable(2.0);
  const Var t2 = t.variable(5.0);
  const Adjoints adj = t.reverse(t1 * t2);
  CHECK(adj.wrt(t1) == 5.0);
  CHECK(adj.wrt(t2) == 2.0);
}

TEST_CASE("reverse visits a shared subexpression once per use") {
  Tape t;
  const Var x = t.variable(0.7);
  const Var y = sin(x);
  const Var z = y * y + y;
  CHECK(t.reverse(z).wrt(x) == doctest::Approx((2.0 * std::sin(0.7) + 1.0) * std::cos(0.7)).epsilon(1e-15));
}

TEST_CASE("mlp loss adjoints match central differences") {
  Architecture arch;
  arch.input_dim = 2;
  arch.hidden = {8};
  const auto theta0 = init_params(arch, InitScheme::kaiming_uniform, 7);
  const std::vector<double> x{0.3, -0.4};
  auto loss_plain = [&](const std::vector<double>& th) {
    const auto u = forward<double>(arch, std::span<const double>(th), seed_input<double>(x));
    return (u[0].v - 0.5) * (u[0].v - 0.5);
  };
  Tape t;
  std::vector<Var> tv;
  for (double v : theta0) tv.push_back(t.variable(v));
  const auto u = forward<Var>(arch, std::span<const Var>(tv), seed_input(x, t));
  const Var loss = square(u[0].v - 0.5);
  const Adjoints adj = t.reverse(loss);
  const double h = 1e-5;
  for (std::size_t i = 0; i < theta0.size(); ++i) {
    auto tp = theta0, tm = theta0;
    tp[i] += h;
    tm[i] -= h;
    const double fd = (loss_plain(tp) - loss_plain(tm)) / (2 * h);
    const double ad = adj.wrt(tv[i]);
    CHECK(std::fabs(ad - fd) <= 1e-6 * std::max(std::fabs(fd), 1e-4));
  }
}

TEST_CASE("jet ops follow the first and second order chain rules") {
  const std::vector<double> origin{0.0, 0.0};
  const auto x = seed_input<double>(origin);
  const Jet<double> th = tanh(x[0]);
  CHECK(th.v == 0.0);
  CHECK(th.g[0] == 1.0);
  CHECK(th.g[1] == 0.0);
  CHECK(th.h[0] == 0.0);
  CHECK(th.h[1] == 0.0);

  const std::vector<double> p{2.0, 3.0};
  const auto xy = seed_input<double>(p);
  const Jet<double> m = xy[0] * xy[1];
  CHECK(m.v == 6.0);
  CHECK(m.g[0] == 3.0);
  CHECK(m.g[1] == 2.0);
  CHECK(m.h[0] == 0.0);
  CHECK(m.h[1] == 0.0);

  const double pi = std::numbers::pi;
  const std::vector<double> q{0.5, 0.125};
  const auto s = seed_input<double>(q);
  const Jet<double> u = sin(s[0] * pi) * sin(s[1] * (4.0 * pi));
  CHECK(u.v == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.h[0] == doctest::Approx(-pi * pi).epsilon(1e-13));
  CHECK(u.h[1] == doctest::Approx(-16.0 * pi * pi).epsilon(1e-13));
  CHECK(u.h[0] + u.h[1] == doctest::Approx(-17.0 * pi * pi).epsilon(1e-13));
}

TEST_CASE("jet errors") {
  const std::vector<double> a2{0.0, 0.0};
  const std::vector<double> a3{0.0, 0.0, 0.0};
  const auto j2 = seed_input<double>(a2);
  const auto j3 = seed_input<double>(a3);
  CHECK_THROWS_AS(j2[0] + j3[0], std::invalid_argument);
  CHECK_THROWS_AS(j2[0].second(0, 1), std::logic_error);
  const std::vector<double> a4{0, 0, 0, 0};
  CHECK_THROWS_AS(seed_input<double>(a4), std::invalid_argument);
}

TEST_CASE("seed_input") {
  const std::vector<double> x{0.5, -0.5};
  const auto s = seed_input<double>(x);
  REQUIRE(s.size() == 2);
  CHECK(s[0].v == 0.5);
  CHECK(s[0].g[0] == 1.0);
  CHECK(s[0].g[1] == 0.0);
  const std::vector<double> z{0.0, 0.0, 0.0};
  const auto s3 = seed_input<double>(z);
  REQUIRE(s3.size() == 3);
  for (const auto& j : s3) {
    for (int i = 0; i < 3; ++i) CHECK(j.h[i] == 0.0);
  }
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) CHECK(s3[i].g[k] == (i == k ? 1.0 : 0.0));
  }
  Tape t;
  const auto sv = seed_input(x, t);
  CHECK(sv[1].v.value() == -0.5);
  CHECK(sv[1].g[1].value() == 1.0);
}

TEST_CASE("jet derivatives of a random net match finite differences") {
  Architecture arch;
  arch.input_dim = 2;
  arch.hidden = {12, 12};
  const auto theta = init_params(arch, InitScheme::kaiming_uniform, 3);
  const std::vector<double> x{0.2, -0.6};
  const auto u = forward<double>(arch, std::span<const double>(theta), seed_input<double>(x));
  auto value = [&](std::vector<double> p) {
    return forward<double>(arch, std::span<const double>(theta), seed_input<double>(p))[0].v;
  };
  for (int i = 0; i < 2; ++i) {
    auto xp = x, xm = x;
    const double h1 = 1e-6;
    xp[static_cast<std::size_t>(i)] += h1;
    xm[static_cast<std::size_t>(i)] -= h1;
    const double g = (value(xp) - value(xm)) / (2 * h1);
    CHECK(std::fabs(u[0].g[i] - g) <= 1e-5 * std::max(1.0, std::fabs(g)));
    const double h2 = 1e-4;
    xp = x;
    xm = x;
    xp[static_cast<std::size_t>(i)] += h2;
    xm[static_cast<std::size_t>(i)] -= h2;
    const double hh = (value(xp) - 2 * value(x) + value(xm)) / (h2 * h2);
    CHECK(std::fabs(u[0].h[i] - hh) <= 1e-4 * std::max(1.0, std::fabs(hh)));
  }
}

TEST_CASE("graph jet batch agrees with scalar jets and its gradient with the tape") {
  Architecture arch;
  arch.input_dim = 3;
  arch.hidden = {6, 6};
  arch.residual = true;
  const auto theta = init_params(arch, InitScheme::xavier_uniform, 11);
  Eigen::MatrixXd pts(3, 4);
  pts << 0.1, 0.5, -0.3, 0.9, -0.2, 0.4, 0.0, 0.3, 0.7, -0.8, 0.25, 0.6;
  Graph g;
  const ParamTensors P = register_parameters(g, arch, theta);
  const auto out = forward_batch(g, arch, P, pts);
  // loss = sum over points of u^2 + (sum_k h_k)^2
  const Eigen::Index N = pts.cols();
  Tensor v = g.cols(out[0], 0, N);
  Tensor lap = g.cols(out[0], N * 4, N);
  lap = lap + g.cols(out[0], N * 5, N);
  lap = lap + g.cols(out[0], N * 6, N);
  const Tensor loss = g.sum_square(v) + g.sum_square(lap);
  g.backward(loss);
  std::vector<double> grad(theta.size());
  gather_gradients(g, P, grad);

  Tape t;
  std::vector<Var> tv;
  for (double x : theta) tv.push_back(t.variable(x));
  Var acc = t.variable(0.0);
  for (Eigen::Index j = 0; j < N; ++j) {
    const std::vector<double> x{pts(0, j), pts(1, j), pts(2, j)};
    const auto u = forward<Var>(arch, std::span<const Var>(tv), seed_input(x, t));
    const auto ud = forward<double>(arch, std::span<const double>(theta), seed_input<double>(x));
    CHECK(v.value()(0, j) == doctest::Approx(ud[0].v).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) {
      CHECK(out[0].value()(0, N * (1 + k) + j) == doctest::Approx(ud[0].g[k]).epsilon(1e-12));
      CHECK(out[0].value()(0, N * (4 + k) + j) == doctest::Approx(ud[0].h[k]).epsilon(1e-12));
    }
    const Var l = u[0].h[0] + u[0].h[1] + u[0].h[2];
    acc = acc + u[0].v * u[0].v + l * l;
  }
  CHECK(loss.item() == doctest::Approx(acc.value()).epsilon(1e-12));
  const Adjoints adj = t.reverse(acc);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    CHECK(grad[i] == doctest::Approx(adj.wrt(tv[i])).epsilon(1e-10));
  }
}

TEST_CASE("two identical passes give bitwise identical adjoints") {
  Architecture arch;
  arch.input_dim = 2;
  arch.hidden = {16, 16};
  const auto theta = init_params(arch, InitScheme::kaiming_uniform, 5);
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, 30);
  auto run = [&] {
    Graph g;
    const ParamTensors P = register_parameters(g, arch, theta);
    const auto out = forward_batch(g, arch, P, pts);
    g.backward(g.sum_square(out[0]));
    std::vector<double> grad(theta.size());
    gather_gradients(g, P, grad);
    return grad;
  };
  CHECK(run() == run());
}

TEST_CASE("graph elementwise ops and reductions") {
  Graph g;
  Eigen::MatrixXd a(1, 3);
  a << 0.5, -1.0, 2.0;
  const Tensor x = g.parameter(a);
  const Tensor y = g.mean(g.pow_int(x, 3) + g.exp(x) * g.sin(x) - g.cos(x) + g.tanh(x));
  g.backward(y);
  const Eigen::MatrixXd& dx = g.grad(x);
  for (int j = 0; j < 3; ++j) {
    const double v = a(0, j);
    const double d = 3 * v * v + std::exp(v) * (std::sin(v) + std::cos(v)) + std::sin(v) + 1 - std::pow(std::tanh(v), 2);
    CHECK(dx(0, j) == doctest::Approx(d / 3.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
}
