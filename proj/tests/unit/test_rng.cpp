#include <catch2/catch_amalgamated.hpp>

#include "firmnet/rng.hpp"

using namespace firmnet;

TEST_CASE("mix64 matches the splitmix64 reference sequence", "[rng]") {
  // successive outputs of splitmix64 seeded with 0
  CHECK(rng::mix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(rng::mix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);
}

TEST_CASE("substreams are deterministic in all their inputs", "[rng]") {
  auto a1 = rng::substream(42, "shocks");
  auto a2 = rng::substream(42, "shocks");
  for (int i = 0; i < 16; ++i) REQUIRE(a1() == a2());

  auto base = rng::substream(42, "shocks");
  auto other_tag = rng::substream(42, "noise");
  auto other_seed = rng::substream(43, "shocks");
  auto other_index = rng::substream(42, "shocks", 1);
  CHECK(base() != other_tag());
  CHECK(rng::substream(42, "shocks")() != other_seed());
  CHECK(rng::substream(42, "shocks")() != other_index());
}

TEST_CASE("substream draws look uniform at a coarse level", "[rng]") {
  auto eng = rng::substream(7, "uniformity");
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += static_cast<int>(eng() & 1u);
  // 6 sigma band around n/2
  CHECK(std::abs(ones - n / 2) < 6 * std::sqrt(n / 4.0));
}
