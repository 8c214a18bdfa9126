#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "l2gls/rng.hpp"

using l2gls::SplitMix64;

TEST_CASE("splitmix64 matches the published reference stream") {
  // Known-answer outputs of the splitmix64 reference algorithm, cross-checked
  // against an independent implementation.
  SplitMix64 rng0(0);
  CHECK(rng0.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(rng0.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng0.next_u64() == 0x06c45d188009454fULL);

  SplitMix64 rng42(42);
  CHECK(rng42.next_u64() == 0xbdd732262feb6e95ULL);
  CHECK(rng42.next_u64() == 0x28efe333b266f103ULL);
}

TEST_CASE("same seed gives the same stream, different seeds differ") {
  SplitMix64 a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("next_double stays in [0, 1)") {
  SplitMix64 rng(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double d = rng.next_double();
    REQUIRE(d >= 0.0);
    REQUIRE(d < 1.0);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  // The stream should actually spread over the interval.
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("next_int covers the inclusive range uniformly") {
  SplitMix64 rng(99);
  std::map<int, int> counts;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const int v = rng.next_int(-2, 3);
    REQUIRE(v >= -2);
    REQUIRE(v <= 3);
    ++counts[v];
  }
  REQUIRE(counts.size() == 6);
  for (const auto& [value, count] : counts) {
    (void)value;
    CHECK(count > draws / 6 - 1000);
    CHECK(count < draws / 6 + 1000);
  }

  SplitMix64 single(5);
  for (int i = 0; i < 10; ++i) CHECK(single.next_int(4, 4) == 4);
  CHECK_THROWS_AS(single.next_int(3, 2), std::invalid_argument);
}

TEST_CASE("next_normal has the requested moments") {
  SplitMix64 rng(2024);
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = rng.next_normal(1.5, 2.0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(mean == Catch::Approx(1.5).margin(0.05));
  CHECK(std::sqrt(var) == Catch::Approx(2.0).margin(0.05));
}

TEST_CASE("shuffle yields a permutation and is seed-deterministic") {
  std::vector<int> base(50);
  for (int i = 0; i < 50; ++i) base[i] = i;

  std::vector<int> a = base, b = base;
  SplitMix64 r1(11), r2(11);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);

  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == base);

  std::vector<int> c = base;
  SplitMix64 r3(12);
  r3.shuffle(c);
  CHECK(c != a);
}

TEST_CASE("derive_seed is pure and separates streams") {
  CHECK(l2gls::derive_seed(1, 0) == l2gls::derive_seed(1, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base)
    for (std::uint64_t stream = 0; stream < 50; ++stream)
      seen.insert(l2gls::derive_seed(base, stream));
  CHECK(seen.size() == 20 * 50);
}

TEST_CASE("sample_categorical follows the distribution") {
  SplitMix64 rng(31);
  const std::vector<double> probs{0.1, 0.6, 0.3};
  std::vector<int> counts(3, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[l2gls::sample_categorical(probs, rng)];
  CHECK(counts[0] == Catch::Approx(0.1 * draws).margin(0.02 * draws));
  CHECK(counts[1] == Catch::Approx(0.6 * draws).margin(0.02 * draws));
  CHECK(counts[2] == Catch::Approx(0.3 * draws).margin(0.02 * draws));

  // Degenerate distribution always returns its only mass point.
  const std::vector<double> point{0.0, 1.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(l2gls::sample_categorical(point, rng) == 1);
}

TEST_CASE("sample_categorical rejects malformed distributions") {
  SplitMix64 rng(1);
  CHECK_THROWS_AS(l2gls::sample_categorical({}, rng), std::invalid_argument);
  CHECK_THROWS_AS(l2gls::sample_categorical({0.5, -0.1, 0.6}, rng), std::invalid_argument);
  CHECK_THROWS_AS(l2gls::sample_categorical({0.3, 0.3}, rng), std::invalid_argument);
  CHECK_THROWS_AS(l2gls::sample_categorical({0.7, 0.7}, rng), std::invalid_argument);
}
