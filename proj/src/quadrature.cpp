#include "alpinn/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace alpinn {

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  using Real = long double;
  const Real pim4 = 0.7511255444649424828587030047762276930510L;  // pi^(-1/4)
  std::vector<Real> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  Real z = 0;
  for (int i = 0; i < m; ++i) {
    // initial guesses for the largest roots first
    if (i == 0) {
      z = std::sqrt(Real(2 * n + 1)) - 1.85575L * std::pow(Real(2 * n + 1), -0.16667L);
    } else if (i == 1) {
      z -= 1.14L * std::pow(Real(n), 0.426L) / z;
    } else if (i == 2) {
      z = 1.86L * z - 0.86L * x[0];
    } else if (i == 3) {
      z = 1.91L * z - 0.91L * x[1];
    } else {
      z = 2.0L * z - x[static_cast<std::size_t>(i - 2)];
    }
    Real pp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p1 = pim4, p2 = 0;
      for (int j = 0; j < n; ++j) {
        const Real p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(Real(2) / (j + 1)) * p2 - std::sqrt(Real(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(Real(2 * n)) * p2;
      const Real z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-17L * std::max(Real(1), std::fabs(z))) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0L / (pp * pp);
  }
  GaussHermite r;
  for (int i = n; i-- > 0;) {
    r.nodes.push_back(static_cast<double>(x[static_cast<std::size_t>(i)]));
    r.weights.push_back(static_cast<double>(w[static_cast<std::size_t>(i)]));
  }
  return r;
}

}  // namespace alpinn
