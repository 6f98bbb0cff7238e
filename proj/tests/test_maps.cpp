#include <doctest.h>

#include <cmath>

#include "gmy/checks.hpp"
#include "gmy/maps.hpp"

using namespace gmy;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// log-uniform points on [1e-3, 1e3]^2
std::vector<PositivePair> points(Seed seed, std::size_t n) {
  RandomStream rng(seed);
  std::vector<PositivePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::exp(std::log(1e-3) + uniform_open01(rng) * std::log(1e6));
    const double y = std::exp(std::log(1e-3) + uniform_open01(rng) * std::log(1e6));
    out.emplace_back(x, y);
  }
  return out;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(MapParams(1, 1), std::domain_error);
  CHECK_THROWS_AS(MapParams(0, 0), std::domain_error);
  CHECK_THROWS_AS(MapParams(-1, 2), std::domain_error);
  CHECK_THROWS_AS(MapParams(INFINITY, 2), std::domain_error);
  CHECK_NOTHROW(MapParams(0, 2));
  CHECK_NOTHROW(MapParams(2, 0));
  CHECK_THROWS_AS(PositivePair(0, 1), std::domain_error);
  CHECK_THROWS_AS(PositivePair(1, NAN), std::domain_error);
}

TEST_CASE("hand-computed values") {
  // r = (2 + 1) / (1 + 1) at x = y = 1
  const auto uv = f_dk(MapParams(1, 2), {1, 1});
  CHECK(uv.first == 1.5);
  CHECK(uv.second == doctest::Approx(2.0 / 3).epsilon(1e-15));
  // x y = 6: u = 3 (13 / 7), v = 2 (7 / 13)
  const auto uv2 = f_dk(MapParams(1, 2), {2, 3});
  CHECK(uv2.first == doctest::Approx(39.0 / 7).epsilon(1e-15));
  CHECK(uv2.second == doctest::Approx(14.0 / 13).epsilon(1e-15));
}

TEST_CASE("degenerate parameter branches agree with the general formula") {
  for (const auto& xy : points(3, 200)) {
    const double s = xy.first * xy.second;
    const auto a = f_dk(MapParams(2, 0), xy);
    CHECK(rel(a.first, xy.second / (2 * s + 1)) <= 1e-15);
    CHECK(rel(a.second, xy.first * (2 * s + 1)) <= 1e-15);
    const auto b = f_dk(MapParams(0, 0.5), xy);
    CHECK(rel(b.first, xy.second * (0.5 * s + 1)) <= 1e-15);
    CHECK(rel(b.second, xy.first / (0.5 * s + 1)) <= 1e-15);
  }
}

TEST_CASE("F_dK is a product-preserving involution with Jacobian -1") {
  for (const auto& p : default_map_params()) {
    for (const auto& xy : points(7, 500)) {
      const auto uv = f_dk(p, xy);
      CHECK(involution_residual(p, xy) <= 1e-12);
      CHECK(rel(uv.first * uv.second, xy.first * xy.second) <= 1e-14);
      CHECK(std::abs(jacobian_det(p, xy) + 1) <= 1e-6);
    }
  }
}

TEST_CASE("psi is F_dK conjugated by y -> 1/y") {
  for (const auto& p : default_map_params()) {
    for (const auto& ab : points(8, 300)) {
      const auto direct = psi(p, ab);
      const auto conj = flip_second(f_dk(p, flip_second(ab)));
      CHECK(rel(direct.first, conj.first) <= 1e-13);
      CHECK(rel(direct.second, conj.second) <= 1e-13);
      CHECK(involution_residual(p, ab, ScalarMap::Psi) <= 1e-12);
      CHECK(psi_identities(p, ab).max() <= 1e-12);
    }
  }
}

TEST_CASE("psi Jacobian is t^2 / b^2") {
  // inside [0.1, 10]^2 the difference quotient is accurate to ~1e-9
  RandomStream rng(9);
  const MapParams p(0.5, 3);
  for (int i = 0; i < 200; ++i) {
    const PositivePair ab(0.1 * std::pow(100, uniform_open01(rng)), 0.1 * std::pow(100, uniform_open01(rng)));
    const auto st = psi(p, ab);
    CHECK(rel(jacobian_abs(p, ab, ScalarMap::Psi), st.second * st.second / (ab.second * ab.second)) <= 1e-8);
    CHECK(jacobian_det(p, ab, ScalarMap::Psi) < 0);
  }
}

TEST_CASE("psi with alpha = 1, beta = 0") {
  // (a, b) -> (1 / (a + b), 1 / a - 1 / (a + b))
  for (const auto& ab : points(10, 200)) {
    const auto st = psi(MapParams(1, 0), ab);
    const double a = ab.first;
    const double b = ab.second;
    CHECK(rel(st.first, 1 / (a + b)) <= 1e-14);
    CHECK(rel(st.second, 1 / a - 1 / (a + b)) <= 1e-10);
  }
}

TEST_CASE("invariant battery") {
  const CheckTable t = map_battery(default_map_params(), 1);
  CHECK(t.rows.size() == 6 * default_map_params().size());
  for (const auto& row : t.rows) {
    CAPTURE(row.test);
    CAPTURE(row.statistic);
    CHECK(row.pass);
  }
}
