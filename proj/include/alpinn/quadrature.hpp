#pragma once

#include <vector>

namespace alpinn {

/// Nodes and weights for the integral of f(z) exp(-z^2) over the real line.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule, nodes refined by Newton iteration on the normalized Hermite
/// recurrence (stable for n in the hundreds).
GaussHermite gauss_hermite(int n);

}  // namespace alpinn
