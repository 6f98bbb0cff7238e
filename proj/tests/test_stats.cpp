#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gmy/stats.hpp"

using namespace gmy;

namespace {

// scipy.stats.kstwobign.sf
constexpr std::pair<double, double> kKolmogorov[] = {
    {0.3, 0.9999906941986655},  {0.5, 0.9639452436648751},    {0.8, 0.5441424115741981},
    {1.0, 0.26999967167735456}, {1.18, 0.1234538094297657},   {1.2, 0.11224966667072497},
    {1.36, 0.049485876755377876}, {1.63, 0.009846364888486529}, {2.5, 7.453306344157342e-06},
};

std::vector<double> normals(Seed seed, std::size_t n, std::uint64_t stream = 0) {
  RandomStream rng(seed, stream);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// V-statistic from the n x n double-centered distance matrices
double brute_dcov_sq(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  Eigen::MatrixXd a(n, n), b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = std::abs(x[i] - x[j]);
      b(i, j) = std::abs(y[i] - y[j]);
    }
  auto center = [](Eigen::MatrixXd& m) {
    const Eigen::VectorXd r = m.rowwise().mean();
    const Eigen::RowVectorXd c = m.colwise().mean();
    const double g = m.mean();
    m = (m.colwise() - r).rowwise() - c;
    m.array() += g;
  };
  center(a);
  center(b);
  return (a.array() * b.array()).mean();
}

}  // namespace

TEST_CASE("Kolmogorov survival function") {
  for (const auto& [t, sf] : kKolmogorov) {
    CAPTURE(t);
    CHECK(std::abs(kolmogorov_survival(t) - sf) <= 1e-10);
  }
  CHECK(kolmogorov_survival(0) == 1);
  CHECK(kolmogorov_survival(10) < 1e-80);
}

TEST_CASE("one-sample KS statistic") {
  // D for uniform data at (i - 0.5)/n is 0.5/n
  std::vector<double> u(100);
  for (int i = 0; i < 100; ++i) u[i] = (i + 0.5) / 100;
  CHECK(ks_from_cdf(u).statistic == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(ks_from_cdf(u).p_value > 0.999);
}

TEST_CASE("two-sample KS statistic and calibration") {
  CHECK(ks_two_sample({1, 2, 3}, {4, 5, 6}).statistic == 1);
  CHECK(ks_two_sample({1, 2, 3, 4}, {1.5, 2.5, 3.5, 4.5}).statistic == doctest::Approx(0.25));
  int rejections = 0;
  for (int rep = 0; rep < 200; ++rep) {
    if (ks_two_sample(normals(rep, 500, 0), normals(rep, 700, 1)).p_value < 0.05) ++rejections;
  }
  // binomial(200, 0.05): 0.999 quantile is 21
  CHECK(rejections <= 21);
  auto shifted = normals(1, 2000, 1);
  for (auto& v : shifted) v += 0.2;
  CHECK(ks_two_sample(normals(1, 2000, 0), shifted).p_value < 1e-4);
}

TEST_CASE("fast distance covariance equals the quadratic form") {
  for (const std::size_t n : {2u, 3u, 17u, 200u}) {
    auto x = normals(n, n, 0);
    auto y = normals(n, n, 1);
    for (std::size_t i = 0; i < n; ++i) y[i] += 0.5 * x[i] * x[i];
    CHECK(distance_covariance_sq(x, y) == doctest::Approx(brute_dcov_sq(x, y)).epsilon(1e-10));
  }
  std::vector<double> ties{1, 1, 2, 2, 3, 3, 3};
  std::vector<double> other{5, 1, 1, 4, 4, 2, 0};
  CHECK(distance_covariance_sq(ties, other) == doctest::Approx(brute_dcov_sq(ties, other)).epsilon(1e-12));
}

TEST_CASE("distance correlation range") {
  const auto x = normals(3, 5000);
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return 2 * v + 1; });
  CHECK(distance_correlation(x, y) == doctest::Approx(1).epsilon(1e-9));
  CHECK(distance_correlation(x, normals(4, 5000)) < 0.05);
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v * v; });
  // uncorrelated but dependent
  CHECK(distance_correlation(x, y) > 0.3);
}

TEST_CASE("permutation test calibration and power") {
  int rejections = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto r = dcor_permutation_test(normals(rep, 200, 0), normals(rep, 200, 1), 99, RandomStream(rep, 2));
    if (r.p_value <= 0.05) ++rejections;
  }
  // binomial(100, 0.05): 0.999 quantile is 13
  CHECK(rejections <= 13);
  const auto x = normals(9, 300);
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::abs(v); });
  CHECK(dcor_permutation_test(x, y, 199, RandomStream(9, 1)).p_value == doctest::Approx(1.0 / 200));
}

TEST_CASE("vector permutation test agrees with the scalar one on one column") {
  const auto x = normals(5, 300, 0);
  auto y = normals(5, 300, 1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.3 * x[i];
  const Eigen::MatrixXd mx = Eigen::Map<const Eigen::VectorXd>(x.data(), 300);
  const Eigen::MatrixXd my = Eigen::Map<const Eigen::VectorXd>(y.data(), 300);
  const auto a = dcor_permutation_test(x, y, 99, RandomStream(1));
  const auto b = dcor_permutation_test(mx, my, 99, RandomStream(1));
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-5));
  CHECK(a.p_value == b.p_value);
}

TEST_CASE("effective sample size") {
  const auto iid = normals(6, 20000);
  CHECK(effective_sample_size(iid) == doctest::Approx(20000).epsilon(0.1));
  // AR(1) with rho: ESS / n = (1 - rho) / (1 + rho)
  const double rho = 0.8;
  std::vector<double> ar(iid.size());
  ar[0] = iid[0];
  for (std::size_t i = 1; i < ar.size(); ++i) ar[i] = rho * ar[i - 1] + std::sqrt(1 - rho * rho) * iid[i];
  CHECK(effective_sample_size(ar) / ar.size() == doctest::Approx((1 - rho) / (1 + rho)).epsilon(0.2));
  CHECK(autocorrelation_time(ar) == doctest::Approx(9).epsilon(0.2));
}

TEST_CASE("split R-hat") {
  std::vector<std::vector<double>> same{normals(1, 2000, 0), normals(1, 2000, 1), normals(1, 2000, 2)};
  CHECK(split_rhat(same) < 1.01);
  auto shifted = same;
  for (auto& v : shifted[2]) v += 1;
  CHECK(split_rhat(shifted) > 1.1);
}
