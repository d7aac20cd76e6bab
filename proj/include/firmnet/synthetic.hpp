#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "firmnet/model.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"
#include "firmnet/rng.hpp"

namespace firmnet {

// Synthetic stand-in for the proprietary panel: fixed-rank nomination
// topology (out-degree capped, in-degree free) plus a shock-responsive
// link-renewal rule.  Renewal decided with year-t shocks takes effect in
// the year-t+1 snapshot: severing is immediate at the next revision while
// formation targets the firms whose shocks motivated it, which is what
// creates the sever/form asymmetry downstream analyses look for.
struct GeneratorConfig {
  FirmIndex firm_count = 2000;
  int year_count = 10;
  int first_year = 2003;
  int nomination_cap = 5;
  double edge_density = 0.001;  // fraction of ordered pairs, per matrix
  StructuralParams params;
  double p_sever_on_negative = 0.5;
  double p_form_on_positive = 0.3;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  int neumann_terms = 30;

  double mean_out_degree() const {
    return edge_density * static_cast<double>(firm_count - 1);
  }

  void validate() const {
    params.validate();
    if (firm_count < 2) throw ConfigError("generator: need at least 2 firms");
    if (year_count < 1) throw ConfigError("generator: need at least 1 year");
    if (nomination_cap < 1) throw ConfigError("generator: nomination_cap must be >= 1");
    if (edge_density < 0.0 || edge_density > 1.0)
      throw ConfigError("generator: edge_density must lie in [0,1]");
    if (mean_out_degree() > static_cast<double>(nomination_cap))
      throw ConfigError("generator: nomination cap infeasible for requested edge density");
    for (double p : {p_sever_on_negative, p_form_on_positive})
      if (p < 0.0 || p > 1.0) throw ConfigError("generator: renewal probability outside [0,1]");
    if (p_form_on_positive > p_sever_on_negative)
      throw ConfigError("generator: p_form must not exceed p_sever (cost asymmetry)");
    if (noise_sd < 0.0) throw ConfigError("generator: noise_sd must be non-negative");
    if (params.sigma0 <= 0.0) throw ConfigError("generator: degenerate shock distribution");
  }
};

struct SyntheticPanel {
  PanelNetwork network;
  GrowthPanel growth;               // observed y plus latent z
  std::vector<ShockVector> shocks;  // true idiosyncratic shocks per year
};

namespace detail {

// Adjacency under construction: per-firm sorted target lists.
struct MutableNet {
  std::vector<std::vector<FirmIndex>> out;

  explicit MutableNet(FirmIndex n) : out(n) {}

  bool has(FirmIndex i, FirmIndex j) const {
    return std::binary_search(out[i].begin(), out[i].end(), j);
  }
  void add(FirmIndex i, FirmIndex j) {
    auto it = std::lower_bound(out[i].begin(), out[i].end(), j);
    if (it == out[i].end() || *it != j) out[i].insert(it, j);
  }

  CsrMatrix freeze(FirmIndex n) const {
    std::vector<Edge> edges;
    for (FirmIndex i = 0; i < n; ++i)
      for (FirmIndex j : out[i]) edges.push_back({i, j});
    return CsrMatrix(n, std::move(edges));
  }
};

inline void seed_topology(MutableNet& net, const GeneratorConfig& cfg,
                          std::mt19937_64& eng) {
  const FirmIndex n = cfg.firm_count;
  const double lambda = cfg.mean_out_degree();
  std::binomial_distribution<int> deg(cfg.nomination_cap,
                                      lambda / static_cast<double>(cfg.nomination_cap));
  std::uniform_int_distribution<FirmIndex> pick(0, n - 1);
  for (FirmIndex i = 0; i < n; ++i) {
    int d = deg(eng);
    int guard = 0;
    while (static_cast<int>(net.out[i].size()) < d && guard < 64 * d) {
      FirmIndex j = pick(eng);
      ++guard;
      if (j == i || net.has(i, j)) continue;
      net.add(i, j);
    }
  }
}

// Renewal against last year's shocks: existing links to negative-shock
// counterparts are severed with p_sever; firms with spare nominations form
// one new link toward a uniformly drawn positive-shock firm with p_form.
inline void renew(MutableNet& net, const GeneratorConfig& cfg,
                  const std::vector<double>& shock,
                  const std::vector<FirmIndex>& positive_firms, std::mt19937_64& eng) {
  const FirmIndex n = cfg.firm_count;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (FirmIndex i = 0; i < n; ++i) {
    auto& targets = net.out[i];
    std::size_t w = 0;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      bool drop = shock[targets[r]] < 0.0 && u(eng) < cfg.p_sever_on_negative;
      if (!drop) targets[w++] = targets[r];
    }
    targets.resize(w);
  }
  if (positive_firms.empty()) return;
  std::uniform_int_distribution<std::size_t> pick(0, positive_firms.size() - 1);
  for (FirmIndex i = 0; i < n; ++i) {
    if (net.out[i].size() >= static_cast<std::size_t>(cfg.nomination_cap)) continue;
    if (u(eng) >= cfg.p_form_on_positive) continue;
    for (int attempt = 0; attempt < 16; ++attempt) {
      FirmIndex j = positive_firms[pick(eng)];
      if (j == i || net.has(i, j)) continue;
      net.add(i, j);
      break;
    }
  }
}

inline std::vector<std::string> make_firm_ids(FirmIndex n) {
  std::vector<std::string> ids(n);
  char buf[16];
  for (FirmIndex i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "F%06u", i);
    ids[i] = buf;
  }
  return ids;
}

}  // namespace detail

inline SyntheticPanel generate_panel(const GeneratorConfig& cfg) {
  cfg.validate();
  const FirmIndex n = cfg.firm_count;
  const StructuralParams& p = cfg.params;

  auto topo_eng = rng::substream(cfg.seed, "topology");
  auto shock_eng = rng::substream(cfg.seed, "shocks");
  auto renew_eng = rng::substream(cfg.seed, "renewal");
  auto noise_eng = rng::substream(cfg.seed, "noise");
  std::normal_distribution<double> shock_dist(p.mu0, p.sigma0);
  std::normal_distribution<double> noise_dist(0.0, cfg.noise_sd);

  detail::MutableNet net_g(n), net_h(n);
  detail::seed_topology(net_g, cfg, topo_eng);
  detail::seed_topology(net_h, cfg, topo_eng);

  std::vector<int> years(cfg.year_count);
  for (int t = 0; t < cfg.year_count; ++t) years[t] = cfg.first_year + t;

  std::vector<NetworkSnapshot> snapshots;
  std::vector<std::vector<double>> z_series, y_series;
  std::vector<ShockVector> shocks;

  std::vector<double> z_prev;
  for (int t = 0; t < cfg.year_count; ++t) {
    if (t > 0) {
      // renewal reacts to the previous year's shocks
      const auto& prev_shock = shocks.back().e;
      std::vector<FirmIndex> positives;
      for (FirmIndex i = 0; i < n; ++i)
        if (prev_shock[i] > 0.0) positives.push_back(i);
      detail::renew(net_g, cfg, prev_shock, positives, renew_eng);
      detail::renew(net_h, cfg, prev_shock, positives, renew_eng);
    }
    snapshots.push_back({net_g.freeze(n), net_h.freeze(n)});
    const NetworkSnapshot& snap = snapshots.back();

    if (t == 0) {
      SpectralBound sb = spectral_bound(snap.G, snap.H, p.beta_G, p.beta_H);
      if (!sb.convergent)
        throw ConvergenceError("generator: true parameters violate the spectral guard",
                               sb.rho_estimate);
    }

    ShockVector eps;
    eps.year = years[static_cast<std::size_t>(t)];
    eps.e.resize(n);
    for (FirmIndex i = 0; i < n; ++i) eps.e[i] = shock_dist(shock_eng);

    std::vector<double> z;
    if (t == 0) {
      z = neumann_solve(snap.G, snap.H, p.beta_G, p.beta_H, eps.e, cfg.neumann_terms).x;
    } else {
      z = simulate_step(p, snap, snapshots[static_cast<std::size_t>(t) - 1], z_prev, eps.e,
                        cfg.neumann_terms);
    }
    std::vector<double> y = z;
    if (cfg.noise_sd > 0.0)
      for (FirmIndex i = 0; i < n; ++i) y[i] += noise_dist(noise_eng);

    shocks.push_back(std::move(eps));
    z_prev = z;
    z_series.push_back(std::move(z));
    y_series.push_back(std::move(y));
  }

  SyntheticPanel out{
      PanelNetwork(FirmRegistry(detail::make_firm_ids(n)), years, std::move(snapshots)),
      GrowthPanel(n, years, std::move(y_series), std::move(z_series)),
      std::move(shocks)};
  return out;
}

// ---------------------------------------------------------------------------
// Binned growth-persistence diagnostic (next-year growth by current growth
// and a size covariate; quantile bin edges, empty cells stay absent).

struct PersistenceCell {
  std::size_t count = 0;
  double mean_next_growth = 0.0;
};

struct PersistenceTable {
  int year = 0;  // current-growth year; means are over the following year
  std::vector<double> growth_edges;  // size n_growth_bins + 1
  std::vector<double> size_edges;
  std::vector<std::optional<PersistenceCell>> cells;  // growth-major

  const std::optional<PersistenceCell>& cell(std::size_t growth_bin,
                                             std::size_t size_bin) const {
    return cells[growth_bin * (size_edges.size() - 1) + size_bin];
  }
};

namespace detail {

inline double quantile_r7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  if (lo >= sorted.size() - 1) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b)
    edges[b] = quantile_r7(values, static_cast<double>(b) / static_cast<double>(bins));
  return edges;
}

inline std::size_t bin_of(const std::vector<double>& edges, double v) {
  // half-open bins, last bin closed above
  std::size_t nbins = edges.size() - 1;
  if (v >= edges[nbins]) return nbins - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), v);
  if (it == edges.begin()) return 0;
  std::size_t b = static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(b, nbins - 1);
}

}  // namespace detail

inline PersistenceTable persistence_table(const GrowthPanel& growth,
                                          const std::vector<double>& size_proxy, int year,
                                          std::size_t growth_bins = 10,
                                          std::size_t size_bins = 10) {
  if (growth_bins < 1 || size_bins < 1)
    throw ConfigError("persistence_table: need at least one bin per axis");
  if (size_proxy.size() != growth.firm_count())
    throw DimensionError("persistence_table: size covariate length mismatch");
  std::size_t idx = growth.year_index(year);
  if (idx + 1 >= growth.years().size())
    throw DataError("persistence_table: no following year available");
  const auto& cur = growth.y_at(idx);
  const auto& next = growth.y_at(idx + 1);

  PersistenceTable table;
  table.year = year;
  table.growth_edges = detail::quantile_edges(cur, growth_bins);
  table.size_edges = detail::quantile_edges(size_proxy, size_bins);

  std::vector<double> sums(growth_bins * size_bins, 0.0);
  std::vector<std::size_t> counts(growth_bins * size_bins, 0);
  for (FirmIndex i = 0; i < growth.firm_count(); ++i) {
    std::size_t gb = detail::bin_of(table.growth_edges, cur[i]);
    std::size_t sb = detail::bin_of(table.size_edges, size_proxy[i]);
    sums[gb * size_bins + sb] += next[i];
    ++counts[gb * size_bins + sb];
  }
  table.cells.resize(growth_bins * size_bins);
  for (std::size_t c = 0; c < table.cells.size(); ++c)
    if (counts[c] > 0)
      table.cells[c] = PersistenceCell{counts[c], sums[c] / static_cast<double>(counts[c])};
  return table;
}

}  // namespace firmnet
