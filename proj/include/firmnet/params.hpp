#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "firmnet/errors.hpp"

namespace firmnet {

// The seven structural parameters.  beta_G/beta_H weight the contemporaneous
// downstream/upstream networks, beta_LG/beta_LH the one-year-lagged ones,
// gamma is growth persistence, mu0/sigma0 the shock mean and sd.
struct StructuralParams {
  double beta_G = 0.0;
  double beta_H = 0.0;
  double beta_LG = 0.0;
  double beta_LH = 0.0;
  double gamma = 0.0;
  double mu0 = 0.0;
  double sigma0 = 1.0;

  static constexpr std::array<std::string_view, 7> names = {
      "beta_G", "beta_H", "beta_LG", "beta_LH", "gamma", "mu0", "sigma0"};

  std::array<double, 7> as_array() const {
    return {beta_G, beta_H, beta_LG, beta_LH, gamma, mu0, sigma0};
  }
  static StructuralParams from_array(const std::array<double, 7>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }

  void validate() const {
    for (double v : as_array())
      if (!std::isfinite(v)) throw ConfigError("structural parameter not finite");
    if (sigma0 <= 0.0) throw ConfigError("sigma0 must be positive");
  }
};

}  // namespace firmnet
