#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace delocal {

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on P_n from the
/// Chebyshev-like initial guesses; symmetric pairs filled together).
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(static_cast<std::size_t>(n)), weights(static_cast<std::size_t>(n)) {
    if (n < 1) throw std::invalid_argument("GaussLegendre: n must be >= 1");
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[static_cast<std::size_t>(i)] = -x;
      nodes[static_cast<std::size_t>(n - 1 - i)] = x;
      weights[static_cast<std::size_t>(i)] = w;
      weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  }

  int size() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Composite rule: `panels` equal panels on [a, b], each with `rule`.
/// Calls visit(x, w) for every node.
template <typename Visit>
void for_each_panel_node(const GaussLegendre& rule, double a, double b, int panels, Visit&& visit) {
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    for (int k = 0; k < rule.size(); ++k) {
      visit(mid + 0.5 * width * rule.nodes[static_cast<std::size_t>(k)],
            0.5 * width * rule.weights[static_cast<std::size_t>(k)]);
    }
  }
}

}  // namespace delocal
