#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <vector>

#include "firmnet/csr.hpp"
#include "firmnet/panel.hpp"

namespace firmnet {

struct LinkDiff {
  int year = 0;  // diffs are between year-1 and year
  std::vector<Edge> formed_G, severed_G, formed_H, severed_H;
};

namespace detail {

inline void edge_set_diff(const CsrMatrix& prev, const CsrMatrix& now,
                          std::vector<Edge>& formed, std::vector<Edge>& severed) {
  auto prev_edges = prev.edge_list();
  auto now_edges = now.edge_list();
  // edge_list() is sorted by construction
  std::set_difference(now_edges.begin(), now_edges.end(), prev_edges.begin(),
                      prev_edges.end(), std::back_inserter(formed));
  std::set_difference(prev_edges.begin(), prev_edges.end(), now_edges.begin(),
                      now_edges.end(), std::back_inserter(severed));
}

}  // namespace detail

inline LinkDiff link_diff(const PanelNetwork& panel, int year) {
  std::size_t idx = panel.year_index(year);
  if (idx == 0) throw DataError("link_diff: first panel year has no predecessor");
  const auto& prev = panel.snapshot_at(idx - 1);
  const auto& now = panel.snapshot_at(idx);
  LinkDiff d;
  d.year = year;
  detail::edge_set_diff(prev.G, now.G, d.formed_G, d.severed_G);
  detail::edge_set_diff(prev.H, now.H, d.formed_H, d.severed_H);
  return d;
}

enum class LinkEvent { formed, severed };

struct NeighborGrowthStats {
  int year = 0;
  LinkEvent type = LinkEvent::formed;
  int order = 1;  // 1 = the link endpoints themselves
  double proportion_positive = 0.0;
  double proportion_negative = 0.0;
  std::size_t node_count = 0;  // pooled across links, with multiplicity
};

namespace detail {

// Undirected union of G, H and their transposes at one year.
inline std::vector<std::vector<FirmIndex>> union_graph(const NetworkSnapshot& snap) {
  const FirmIndex n = snap.G.rows();
  std::vector<std::vector<FirmIndex>> adj(n);
  for (FirmIndex i = 0; i < n; ++i) {
    for (FirmIndex j : snap.G.row(i)) adj[i].push_back(j), adj[j].push_back(i);
    for (FirmIndex j : snap.H.row(i)) adj[i].push_back(j), adj[j].push_back(i);
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return adj;
}

// Nodes at BFS distance 0..max_dist from {a, b}, bucketed by distance.
inline std::vector<std::vector<FirmIndex>> bfs_rings(
    const std::vector<std::vector<FirmIndex>>& adj, FirmIndex a, FirmIndex b,
    int max_dist, std::vector<int>& dist_scratch) {
  std::vector<std::vector<FirmIndex>> rings(static_cast<std::size_t>(max_dist) + 1);
  std::vector<FirmIndex> frontier{a};
  dist_scratch[a] = 0;
  rings[0].push_back(a);
  if (b != a) {
    frontier.push_back(b);
    dist_scratch[b] = 0;
    rings[0].push_back(b);
  }
  for (int d = 1; d <= max_dist; ++d) {
    std::vector<FirmIndex> next;
    for (FirmIndex u : frontier)
      for (FirmIndex v : adj[u])
        if (dist_scratch[v] < 0) {
          dist_scratch[v] = d;
          next.push_back(v);
          rings[static_cast<std::size_t>(d)].push_back(v);
        }
    frontier = std::move(next);
  }
  for (const auto& ring : rings)
    for (FirmIndex u : ring) dist_scratch[u] = -1;
  return rings;
}

}  // namespace detail

// Table-3 style diagnostic: for every link formed (severed) between year-1
// and year, pool the firms at each neighborhood order on the year's union
// graph and report the fractions with strictly positive / negative growth.
// Order 1 is the endpoint pair; order k reaches BFS distance k-1.
inline std::vector<NeighborGrowthStats> neighbor_growth_stats(const PanelNetwork& panel,
                                                              const GrowthPanel& growth,
                                                              int year, int max_order = 3) {
  if (max_order < 1) throw ConfigError("neighbor_growth_stats: max_order must be >= 1");
  LinkDiff diff = link_diff(panel, year);
  const auto& y = growth.y(year);
  auto adj = detail::union_graph(panel.snapshot(year));
  std::vector<int> dist(panel.firm_count(), -1);

  std::vector<NeighborGrowthStats> out;
  for (LinkEvent type : {LinkEvent::formed, LinkEvent::severed}) {
    std::vector<const std::vector<Edge>*> groups;
    if (type == LinkEvent::formed)
      groups = {&diff.formed_G, &diff.formed_H};
    else
      groups = {&diff.severed_G, &diff.severed_H};

    std::vector<std::size_t> pos(max_order, 0), neg(max_order, 0), tot(max_order, 0);
    for (const auto* edges : groups) {
      for (const Edge& e : *edges) {
        auto rings = detail::bfs_rings(adj, e.src, e.dst, max_order - 1, dist);
        for (int k = 0; k < max_order; ++k) {
          for (FirmIndex u : rings[static_cast<std::size_t>(k)]) {
            ++tot[static_cast<std::size_t>(k)];
            if (y[u] > 0.0) ++pos[static_cast<std::size_t>(k)];
            else if (y[u] < 0.0) ++neg[static_cast<std::size_t>(k)];
            // exact zeros count toward neither proportion
          }
        }
      }
    }
    for (int k = 0; k < max_order; ++k) {
      NeighborGrowthStats s;
      s.year = year;
      s.type = type;
      s.order = k + 1;
      s.node_count = tot[static_cast<std::size_t>(k)];
      if (s.node_count > 0) {
        s.proportion_positive = static_cast<double>(pos[static_cast<std::size_t>(k)]) /
                                static_cast<double>(s.node_count);
        s.proportion_negative = static_cast<double>(neg[static_cast<std::size_t>(k)]) /
                                static_cast<double>(s.node_count);
      }
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace firmnet
