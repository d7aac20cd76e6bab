#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "firmnet/model.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"

namespace firmnet {

// ---------------------------------------------------------------------------
// Counterfactual propagation: shocks recovered in one year, replayed through
// the network of another.  The shock split separates amplification of good
// news from transmission of bad news.

struct ShockSplit {
  std::vector<double> positive;  // negative entries zeroed
  std::vector<double> negative;  // positive entries zeroed
};

inline ShockSplit split_shocks(std::span<const double> e) {
  ShockSplit s;
  s.positive.resize(e.size());
  s.negative.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    s.positive[i] = e[i] > 0.0 ? e[i] : 0.0;
    s.negative[i] = e[i] < 0.0 ? e[i] : 0.0;
  }
  return s;
}

inline std::vector<double> propagate_counterfactual(std::span<const double> e,
                                                    const PanelNetwork& panel,
                                                    int network_year, double beta_G,
                                                    double beta_H, int terms = 30) {
  const NetworkSnapshot& snap = panel.snapshot(network_year);
  if (snap.G.rows() != e.size())
    throw DimensionError("propagate_counterfactual: shock length mismatch");
  return neumann_solve(snap.G, snap.H, beta_G, beta_H, e, terms).x;
}

namespace detail {

inline double population_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw DataError("sample sd needs at least two observations");
  double mean = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

enum class ShockSign { all, positive, negative };

struct ProfileCell {
  int network_year = 0;
  double sd = 0.0;    // cross-firm dispersion of propagated growth
  double mean = 0.0;  // cross-firm mean of propagated growth
  bool own_year = false;
};

struct PropagationProfile {
  int shock_year = 0;
  ShockSign sign = ShockSign::all;
  std::vector<ProfileCell> cells;  // one per network year, panel order
};

// Shocks are recovered contemporaneously (no lag terms) and pushed through
// every network year in the panel; the own-year cell is the realised
// decomposition, all others are counterfactual replays.
inline PropagationProfile propagation_profile(const PanelNetwork& panel,
                                              const GrowthPanel& growth, int shock_year,
                                              const StructuralParams& params,
                                              ShockSign sign = ShockSign::all,
                                              int terms = 30) {
  const NetworkSnapshot& own = panel.snapshot(shock_year);
  std::vector<double> e = extract_shocks_simple(params, own, growth.y(shock_year));
  std::vector<double> selected;
  switch (sign) {
    case ShockSign::all:
      selected = e;
      break;
    case ShockSign::positive:
      selected = split_shocks(e).positive;
      break;
    case ShockSign::negative:
      selected = split_shocks(e).negative;
      break;
  }

  PropagationProfile profile;
  profile.shock_year = shock_year;
  profile.sign = sign;
  for (int year : panel.years()) {
    std::vector<double> y = propagate_counterfactual(selected, panel, year, params.beta_G,
                                                     params.beta_H, terms);
    profile.cells.push_back(
        {year, detail::population_sd(y), detail::mean_of(y), year == shock_year});
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Aggregate decomposition: how much of the volatility of mean growth stems
// from network propagation, and how much renewal itself contributes.  Shocks
// are recovered under the full model (lags included); the frozen series
// replays them through the base-year network, base-year lagged terms
// included, so only the network vintage varies.

struct AggregateDecomposition {
  int base_year = 0;
  std::vector<int> years;  // panel years with a predecessor
  std::vector<double> mean_growth;
  std::vector<double> mean_shock;
  std::vector<double> mean_frozen;
  std::vector<double> cum_growth;
  std::vector<double> cum_shock;
  std::vector<double> cum_frozen;
  double sd_connected = 0.0;
  double sd_shocks = 0.0;
  double network_share = 0.0;
  double renewal_uplift = 0.0;
};

inline AggregateDecomposition aggregate_decomposition(const PanelNetwork& panel,
                                                      const GrowthPanel& growth,
                                                      const StructuralParams& params,
                                                      int base_year, int terms = 30) {
  const std::vector<int>& years = panel.years();
  if (years.size() < 4)
    throw DataError("aggregate_decomposition: need at least three transition years");
  const NetworkSnapshot& base = panel.snapshot(base_year);

  AggregateDecomposition out;
  out.base_year = base_year;
  for (std::size_t t = 1; t < years.size(); ++t) {
    int year = years[t];
    if (years[t] != years[t - 1] + 1)
      throw DataError("aggregate_decomposition: panel years must be consecutive");
    const std::vector<double>& y = growth.y(year);
    const std::vector<double>& y_prev = growth.y(years[t - 1]);
    ShockVector shock = extract_shocks_full(params, panel, growth, year);

    // frozen replay: base-year topology for both the contemporaneous solve
    // and the lagged feed-through
    FirmIndex n = panel.firm_count();
    std::vector<double> rhs(n, 0.0);
    spmv_add(base.G, params.beta_LG, y_prev, rhs);
    spmv_add(base.H, params.beta_LH, y_prev, rhs);
    for (FirmIndex i = 0; i < n; ++i) rhs[i] += params.gamma * y_prev[i] + shock.e[i];
    std::vector<double> y_frozen =
        neumann_solve(base.G, base.H, params.beta_G, params.beta_H, rhs, terms).x;

    out.years.push_back(year);
    out.mean_growth.push_back(detail::mean_of(y));
    out.mean_shock.push_back(detail::mean_of(shock.e));
    out.mean_frozen.push_back(detail::mean_of(y_frozen));
  }

  auto cumulate = [](const std::vector<double>& v) {
    std::vector<double> c(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) c[i] = (s += v[i]);
    return c;
  };
  out.cum_growth = cumulate(out.mean_growth);
  out.cum_shock = cumulate(out.mean_shock);
  out.cum_frozen = cumulate(out.mean_frozen);

  out.sd_connected = detail::sample_sd(out.mean_growth);
  out.sd_shocks = detail::sample_sd(out.mean_shock);
  if (out.sd_connected <= 0.0)
    throw DataError("aggregate_decomposition: degenerate mean-growth series");
  out.network_share = 1.0 - out.sd_shocks / out.sd_connected;
  double uplift = 0.0;
  for (std::size_t t = 0; t < out.years.size(); ++t)
    uplift += out.mean_growth[t] - out.mean_frozen[t];
  out.renewal_uplift = uplift / static_cast<double>(out.years.size());
  return out;
}

}  // namespace firmnet
