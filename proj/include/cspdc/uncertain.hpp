#pragma once

#include <cmath>
#include <initializer_list>

namespace cspdc {

/// A scalar with a 1-sigma uncertainty.
struct UncertainValue {
  double mean = 0.0;
  double sigma = 0.0;
};

/// One factor of a multiplicative formula, entering as mean^power.
struct ProductTerm {
  double mean = 0.0;
  double sigma = 0.0;
  double power = 1.0;
};

/// First-order propagation through scale * prod_i(term_i.mean ^ term_i.power).
/// Relative variances add: (sigma_out/mean_out)^2 = sum (power_i * sigma_i / mean_i)^2.
/// Terms with zero mean force the product (and its sigma contribution) to zero.
inline UncertainValue propagate_product(double scale,
                                        std::initializer_list<ProductTerm> terms) {
  double mean = scale;
  double rel2 = 0.0;
  for (const auto& t : terms) {
    mean *= std::pow(t.mean, t.power);
    if (t.mean != 0.0 && t.sigma != 0.0) {
      const double r = t.power * t.sigma / t.mean;
      rel2 += r * r;
    }
  }
  if (mean == 0.0) return {0.0, 0.0};
  return {mean, std::abs(mean) * std::sqrt(rel2)};
}

}  // namespace cspdc
