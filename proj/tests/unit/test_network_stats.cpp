#include <catch2/catch_amalgamated.hpp>

#include <queue>

#include "firmnet/network_stats.hpp"
#include "firmnet/rng.hpp"
#include "support/oracles.hpp"

using namespace firmnet;

namespace {

PanelNetwork two_year_net(FirmIndex n, std::vector<Edge> g0, std::vector<Edge> g1,
                          std::vector<Edge> h0 = {}, std::vector<Edge> h1 = {}) {
  std::vector<std::string> ids(n);
  for (FirmIndex i = 0; i < n; ++i) ids[i] = "F" + std::to_string(i);
  return PanelNetwork(FirmRegistry(ids), {2010, 2011},
                      {{CsrMatrix(n, std::move(g0)), CsrMatrix(n, std::move(h0))},
                       {CsrMatrix(n, std::move(g1)), CsrMatrix(n, std::move(h1))}});
}

}  // namespace

TEST_CASE("link diff separates formed from severed", "[network-stats]") {
  auto panel = two_year_net(3, {{0, 1}, {1, 2}}, {{0, 1}, {0, 2}});
  LinkDiff d = link_diff(panel, 2011);
  CHECK(d.year == 2011);
  CHECK(d.formed_G == std::vector<Edge>{{0, 2}});
  CHECK(d.severed_G == std::vector<Edge>{{1, 2}});
  CHECK(d.formed_H.empty());
  CHECK(d.severed_H.empty());
}

TEST_CASE("identical snapshots produce an empty diff", "[network-stats]") {
  auto panel = two_year_net(3, {{0, 1}}, {{0, 1}});
  LinkDiff d = link_diff(panel, 2011);
  CHECK(d.formed_G.empty());
  CHECK(d.severed_G.empty());
}

TEST_CASE("link diff requires a predecessor year", "[network-stats]") {
  auto panel = two_year_net(3, {{0, 1}}, {{0, 1}});
  CHECK_THROWS_AS(link_diff(panel, 2010), DataError);
}

TEST_CASE("neighborhood growth on a severed chain link", "[network-stats]") {
  // year 1: a-b-c-d as a directed G chain; year 2: a->b is severed
  auto panel = two_year_net(4, {{0, 1}, {1, 2}, {2, 3}}, {{1, 2}, {2, 3}});
  GrowthPanel growth(4, {2010, 2011},
                     {{0.0, 0.0, 0.0, 0.0}, {-1.0, -1.0, 1.0, -1.0}});

  auto stats = neighbor_growth_stats(panel, growth, 2011, 3);
  REQUIRE(stats.size() == 6);  // formed and severed, three orders each

  auto find = [&](LinkEvent type, int order) -> const NeighborGrowthStats& {
    for (const auto& s : stats)
      if (s.type == type && s.order == order) return s;
    FAIL("row not found");
    return stats[0];
  };

  // severed a->b: order 1 = {a, b}, order 2 = {c} (via b on the year-2011
  // union graph), order 3 = {d}
  const auto& s1 = find(LinkEvent::severed, 1);
  CHECK(s1.node_count == 2);
  CHECK(s1.proportion_positive == 0.0);
  CHECK(s1.proportion_negative == 1.0);

  const auto& s2 = find(LinkEvent::severed, 2);
  CHECK(s2.node_count == 1);
  CHECK(s2.proportion_positive == 1.0);
  CHECK(s2.proportion_negative == 0.0);

  const auto& s3 = find(LinkEvent::severed, 3);
  CHECK(s3.node_count == 1);
  CHECK(s3.proportion_positive == 0.0);
  CHECK(s3.proportion_negative == 1.0);

  for (int order = 1; order <= 3; ++order)
    CHECK(find(LinkEvent::formed, order).node_count == 0);
}

TEST_CASE("exact zero growth counts toward neither side", "[network-stats]") {
  auto panel = two_year_net(2, {}, {{0, 1}});
  GrowthPanel growth(2, {2010, 2011}, {{0.0, 0.0}, {0.0, 0.7}});
  auto stats = neighbor_growth_stats(panel, growth, 2011, 1);
  REQUIRE(stats.size() == 2);
  const auto& formed = stats[0].type == LinkEvent::formed ? stats[0] : stats[1];
  CHECK(formed.node_count == 2);
  CHECK_THAT(formed.proportion_positive, Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK(formed.proportion_negative == 0.0);
}

TEST_CASE("upstream links contribute to the union neighborhood", "[network-stats]") {
  // the H relation connects 1-2 even though G only has the formed link 0->1
  auto panel = two_year_net(3, {}, {{0, 1}}, {{1, 2}}, {{1, 2}});
  GrowthPanel growth(3, {2010, 2011}, {{0, 0, 0}, {1.0, -1.0, 1.0}});
  auto stats = neighbor_growth_stats(panel, growth, 2011, 2);
  const auto* order2 = &stats[0];
  for (const auto& s : stats)
    if (s.type == LinkEvent::formed && s.order == 2) order2 = &s;
  CHECK(order2->node_count == 1);  // firm 2, reached through H
  CHECK(order2->proportion_positive == 1.0);
}

TEST_CASE("neighborhood rings match a reference BFS", "[network-stats][property]") {
  auto eng = rng::substream(31, "stats-bfs");
  for (int rep = 0; rep < 10; ++rep) {
    FirmIndex n = 30;
    CsrMatrix g = oracle::random_graph(n, 2.0, eng);
    CsrMatrix h = oracle::random_graph(n, 2.0, eng);
    NetworkSnapshot snap{g, h};
    auto adj = detail::union_graph(snap);

    // reference distances from a random pair via plain queue BFS on the
    // dense undirected union
    FirmIndex a = static_cast<FirmIndex>(eng() % n);
    FirmIndex b = static_cast<FirmIndex>(eng() % n);
    std::vector<std::vector<bool>> und(n, std::vector<bool>(n, false));
    for (FirmIndex i = 0; i < n; ++i) {
      for (FirmIndex j : g.row(i)) und[i][j] = und[j][i] = true;
      for (FirmIndex j : h.row(i)) und[i][j] = und[j][i] = true;
    }
    std::vector<int> ref_dist(n, -1);
    std::queue<FirmIndex> q;
    ref_dist[a] = 0;
    q.push(a);
    if (ref_dist[b] < 0) {
      ref_dist[b] = 0;
      q.push(b);
    }
    while (!q.empty()) {
      FirmIndex u = q.front();
      q.pop();
      for (FirmIndex v = 0; v < n; ++v)
        if (und[u][v] && ref_dist[v] < 0) {
          ref_dist[v] = ref_dist[u] + 1;
          q.push(v);
        }
    }

    std::vector<int> scratch(n, -1);
    auto rings = detail::bfs_rings(adj, a, b, 4, scratch);
    for (int d = 0; d <= 4; ++d)
      for (FirmIndex u : rings[static_cast<std::size_t>(d)]) REQUIRE(ref_dist[u] == d);
    std::size_t counted = 0;
    for (const auto& ring : rings) counted += ring.size();
    std::size_t expected = 0;
    for (FirmIndex u = 0; u < n; ++u)
      if (ref_dist[u] >= 0 && ref_dist[u] <= 4) ++expected;
    REQUIRE(counted == expected);
    // scratch must be fully reset for reuse
    for (int v : scratch) REQUIRE(v == -1);
  }
}
