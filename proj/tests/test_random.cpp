#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "gmy/random.hpp"
#include "gmy/stats.hpp"

using namespace gmy;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = std::array<std::uint32_t, 4>;
  using K = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are deterministic and distinct") {
  RandomStream a(42, 3);
  RandomStream b(42, 3);
  RandomStream c(42, 4);
  RandomStream d(43, 3);
  int same_c = 0;
  int same_d = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    CHECK(va == b());
    same_c += va == c();
    same_d += va == d();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("split is a pure function of the parent identity") {
  const RandomStream root(9, 1);
  RandomStream x = root.split(5);
  RandomStream y = RandomStream(9, 1).split(5);
  for (int i = 0; i < 10; ++i) CHECK(x() == y());
  std::set<std::uint64_t> streams;
  for (std::uint64_t k = 0; k < 1000; ++k) streams.insert(root.split(k).stream());
  CHECK(streams.size() == 1000);
}

TEST_CASE("derived seeds differ") {
  std::set<Seed> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(derive_seed(7, k));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
}

TEST_CASE("uniform and exponential variates") {
  RandomStream rng(1);
  std::vector<double> u(100000);
  for (auto& v : u) {
    v = uniform_open01(rng);
    REQUIRE(v > 0);
    REQUIRE(v < 1);
  }
  std::sort(u.begin(), u.end());
  CHECK(ks_from_cdf(u).p_value > 0.01);

  double mean = 0;
  for (int i = 0; i < 100000; ++i) mean += standard_exponential(rng);
  mean /= 100000;
  CHECK(std::abs(mean - 1) < 4 / std::sqrt(100000.0));
}

TEST_CASE("uniform_index is unbiased") {
  RandomStream rng(2);
  std::vector<int> counts(7);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[uniform_index(rng, 7)];
  double chi2 = 0;
  for (const int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  CHECK(chi2 < 22.46);  // 0.999 quantile of chi^2 with 6 degrees of freedom
}
