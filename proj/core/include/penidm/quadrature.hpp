#pragma once

#include <vector>

namespace penidm {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights of the n-point rule. Results are cached per n.
const GaussLegendreRule& gauss_legendre(int n);

}  // namespace penidm
