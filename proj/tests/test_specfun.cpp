#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "gmy/checks.hpp"
#include "gmy/specfun.hpp"

using namespace gmy;

namespace {

// mpmath at 40 digits: (nu, z, log K_nu(z))
struct LogCase {
  double nu, z, log_value;
};
constexpr LogCase kLogK[] = {
    {0, 1e-06, 2.6341483053069884094},     {0.5, 2.0, -2.1207822376352452223},  {1.0, 5.0, -5.5103692965852233155},
    {3.2, 1.7, 0.41292519468118768467},    {0.3, 0.01, 1.9300859816189330927}, {7.5, 30, -30.560860509132171346},
    {20, 3, 30.419399765550605271},        {50, 700, -701.26624135718203453},  {-50, 1e-06, 869.30548369199590854},
    {2.25, 0.5, 2.5031269008426171744},    {0, 700, -703.04992725894391223},   {12.5, 12.5, -7.8721809618631197632},
};

// mpmath: (nu, z, I_nu(z))
struct ValueCase {
  double nu, z, value;
};
constexpr ValueCase kI[] = {
    {0, 1e-06, 1.00000000000025},         {0.5, 1.0, 0.93767488824548764672},  {2, 10, 2281.5189677260035406},
    {0.3, 0.01, 0.22734168572231438079},  {7.5, 30, 302785501061.83343186},    {20, 3, 1.5209660019426695221e-15},
    {1, 600, 6.1411813450668919369e+258}, {-2.5, 1.3, 1.0848402033565194079}, {50, 50, 17650802430.016712282},
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("log K matches high-precision values") {
  for (const auto& c : kLogK) {
    CAPTURE(c.nu);
    CAPTURE(c.z);
    // the log carries relative accuracy of K as an absolute error
    CHECK(std::abs(bessel_k_log(c.nu, c.z) - c.log_value) <= 1e-12 * std::max(1.0, std::abs(c.log_value)));
    if (std::abs(c.log_value) < 700) CHECK(rel(bessel_k(c.nu, c.z), std::exp(c.log_value)) <= 1e-12);
  }
}

TEST_CASE("I matches high-precision values") {
  for (const auto& c : kI) {
    CAPTURE(c.nu);
    CAPTURE(c.z);
    CHECK(rel(bessel_i(c.nu, c.z), c.value) <= 1e-12);
  }
}

TEST_CASE("closed forms at order one half") {
  CHECK(rel(bessel_k(0.5, 2.0), 0.11993777196806144) <= 1e-14);
  CHECK(rel(bessel_i(0.5, 1.0), 0.93767488824548765) <= 1e-14);
  CHECK(bessel_i(0.0, 1e-300) == doctest::Approx(1.0).epsilon(1e-16));
}

TEST_CASE("agreement with Boost over a grid") {
  double worst_k = 0;
  double worst_i = 0;
  for (double nu = 0; nu <= 20; nu += 0.37) {
    for (double z = 0.05; z <= 100; z *= 1.6) {
      worst_k = std::max(worst_k, rel(bessel_k(nu, z), boost::math::cyl_bessel_k(nu, z)));
      worst_i = std::max(worst_i, rel(bessel_i(nu, z), boost::math::cyl_bessel_i(nu, z)));
    }
  }
  CHECK(worst_k <= 1e-12);
  CHECK(worst_i <= 1e-12);
}

TEST_CASE("integral representation agrees with the series path") {
  for (const double nu : {0.0, 0.5, 1.7, 9.0, 33.0}) {
    for (const double z : {1e-4, 0.3, 2.0, 17.0, 400.0}) {
      CHECK(std::abs(bessel_k_log(nu, z) - bessel_k_log_integral(nu, z)) <= 1e-12 * std::max(1.0, std::abs(bessel_k_log(nu, z))));
    }
  }
}

TEST_CASE("symmetry in the order is exact") {
  for (const double nu : {0.1, 0.5, 1.0, 3.2, 17.25, 49.9}) {
    for (const double z : {1e-6, 0.7, 5.0, 90.0}) {
      // K_49.9(1e-6) is far beyond double range; only the log form exists there
      if (nu * std::log(2 / z) < 700) CHECK(bessel_k(-nu, z) == bessel_k(nu, z));
      CHECK(bessel_k_log(-nu, z) == bessel_k_log(nu, z));
    }
  }
}

TEST_CASE("three-term recurrence and decay") {
  for (const double nu : {1.0, 1.5, 4.2, 10.0}) {
    double prev = INFINITY;
    for (double z = 0.1; z < 60; z *= 1.3) {
      const double k = bessel_k(nu, z);
      CHECK(rel(bessel_k(nu - 1, z) + 2 * nu / z * k, bessel_k(nu + 1, z)) <= 1e-10);
      CHECK(k < prev);
      prev = k;
    }
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(bessel_k(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(bessel_k(1.0, -2.0), std::domain_error);
  CHECK_THROWS_AS(bessel_k(std::numeric_limits<double>::quiet_NaN(), 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(bessel_k_log(1.0, std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("extended precision instantiation") {
  // K_{1/2}(z) = sqrt(pi / (2 z)) e^{-z}
  const long double z = 3.25L;
  const long double exact = std::sqrt(std::numbers::pi_v<long double> / (2 * z)) * std::exp(-z);
  CHECK(static_cast<double>(std::abs(bessel_k(0.5L, z) / exact - 1)) <= 1e-17);
  CHECK(std::abs(bessel_k(2.0f, 1.5f) / static_cast<float>(boost::math::cyl_bessel_k(2.0, 1.5)) - 1) <= 1e-5f);
}

TEST_CASE("log gamma") {
  for (const double x : {1e-8, 0.5, 1.0, 2.5, 10.0, 171.3, 1e5}) {
    CHECK(std::abs(log_gamma(x) - std::lgamma(x)) <= 1e-13 * std::max(1.0, std::abs(std::lgamma(x))));
  }
}

TEST_CASE("battery passes, including the Bessel equation residual") {
  const CheckTable t = specfun_battery();
  for (const auto& row : t.rows) {
    CAPTURE(row.test);
    CHECK(row.pass);
  }
}
