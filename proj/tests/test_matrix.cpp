#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gmy/checks.hpp"
#include "gmy/matrix.hpp"
#include "gmy/specfun.hpp"
#include "gmy/stats.hpp"

using namespace gmy;
using Eigen::MatrixXd;

namespace {

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

SpdMatrix spd(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(rows.size(), rows.size());
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (const double v : row) m(i, j++) = v;
    ++i;
  }
  return SpdMatrix(m);
}

// MGIG(p = 3, a = b = I) for r = 2, by mpmath quadrature over the eigenvalues
constexpr double kLogNormalizerR2 = 5.407406303191809;
constexpr double kMeanLogDetR2 = 3.173339120351226;

}  // namespace

TEST_CASE("SPD validation") {
  CHECK_THROWS_AS(SpdMatrix(MatrixXd(0, 0)), std::domain_error);
  CHECK_THROWS_AS(SpdMatrix(MatrixXd::Ones(2, 3)), std::domain_error);
  CHECK_THROWS_AS(spd({{1, 0.5}, {0.4, 1}}), std::domain_error);
  CHECK_THROWS_AS(spd({{1, 2}, {2, 1}}), std::domain_error);
  CHECK_THROWS_AS(spd({{1, 0}, {0, 1e-13}}), IllConditioned);
  CHECK_NOTHROW(spd({{2, 0.5}, {0.5, 1}}));
  CHECK_THROWS_AS(SpdPair(SpdMatrix::identity(2), SpdMatrix::identity(3)), std::domain_error);
}

TEST_CASE("order one reduces to the scalar map") {
  const MapParams p(0.5, 3);
  for (const double x : {0.01, 0.7, 4.0}) {
    for (const double y : {0.2, 1.0, 30.0}) {
      const auto uv = f_dk_matrix(p, SpdPair(SpdMatrix(scalar(x)), SpdMatrix(scalar(y))));
      const auto s = f_dk(p, {x, y});
      CHECK(uv.x(0, 0) == doctest::Approx(s.first).epsilon(1e-14));
      CHECK(uv.y(0, 0) == doctest::Approx(s.second).epsilon(1e-14));
    }
  }
}

TEST_CASE("vech is an isometry and round-trips") {
  const MatrixXd m = spd({{2, 0.5, 0.1}, {0.5, 1, -0.3}, {0.1, -0.3, 4}}).matrix();
  const Eigen::VectorXd v = vech(m);
  CHECK(v.size() == 6);
  CHECK(v.norm() == doctest::Approx(m.norm()).epsilon(1e-14));
  CHECK((unvech(v, 3) - m).norm() <= 1e-14);
}

TEST_CASE("congruence determinant") {
  const SpdMatrix x = spd({{2, 0.5}, {0.5, 1}});
  CHECK(congruence_det(x) == doctest::Approx(std::pow(x.matrix().determinant(), 3)).epsilon(1e-12));
}

TEST_CASE("matrix logarithm") {
  const SpdMatrix x = spd({{2, 0.5}, {0.5, 1}});
  const Eigen::SelfAdjointEigenSolver<MatrixXd> e(matrix_log(x));
  const MatrixXd back = e.eigenvectors() * e.eigenvalues().array().exp().matrix().asDiagonal() * e.eigenvectors().transpose();
  CHECK((back - x.matrix()).norm() <= 1e-13);
}

TEST_CASE("matrix map needs both parameters positive") {
  const SpdPair xy(SpdMatrix::identity(2), SpdMatrix::identity(2));
  CHECK_THROWS_AS(f_dk_matrix(MapParams(0, 1), xy), std::domain_error);
}

TEST_CASE("order one normalizer is exact") {
  // integral of x^(p-1) e^(-(a x + b / x) / 2) = 2 (b / a)^(p / 2) K_p(sqrt(a b))
  const MgigParams m(1.7, SpdMatrix(scalar(0.8)), SpdMatrix(scalar(2.5)));
  const auto est = mgig_log_normalizer(m, 1);
  CHECK(est.exact);
  CHECK(est.log_value == doctest::Approx(std::log(2 * std::pow(2.5 / 0.8, 0.85) * bessel_k(1.7, std::sqrt(2.0)))).epsilon(1e-13));
}

TEST_CASE("order two normalizer by importance sampling") {
  const MgigParams m(3, SpdMatrix::identity(2), SpdMatrix::identity(2));
  const auto est = mgig_log_normalizer(m, 4, 200000);
  CHECK_FALSE(est.exact);
  CHECK(est.std_error < 0.01);
  CHECK(std::abs(est.log_value - kLogNormalizerR2) <= 4 * est.std_error);
}

TEST_CASE("mode solves the stationarity equation") {
  const MgigParams m(-0.7, spd({{2, 0.5}, {0.5, 1}}), spd({{1, -0.2}, {-0.2, 3}}));
  const MatrixXd x = mgig_mode(m).matrix();
  const MatrixXd resid = x * m.a.matrix() * x - (2 * m.p - 3) * x - m.b.matrix();
  CHECK(resid.norm() <= 1e-12 * m.b.matrix().norm());
  // and is a local maximum of the kernel
  const double top = mgig_log_kernel(m, mgig_mode(m));
  for (const double e : {-1e-3, 1e-3}) {
    MatrixXd d = x;
    d(0, 1) += e;
    d(1, 0) += e;
    CHECK(mgig_log_kernel(m, SpdMatrix(d)) < top);
  }
}

TEST_CASE("MCMC draws match E log det at order two") {
  const MgigParams m(3, SpdMatrix::identity(2), SpdMatrix::identity(2));
  const McmcRun run = mgig_sample(m, 5, 4000);
  CHECK(run.draws.size() == 4000);
  CHECK(run.diagnostics.converged());
  std::vector<double> ld(run.draws.size());
  std::transform(run.draws.begin(), run.draws.end(), ld.begin(), [](const SpdMatrix& x) { return std::log(x.matrix().determinant()); });
  const double mean = std::accumulate(ld.begin(), ld.end(), 0.0) / ld.size();
  double var = 0;
  for (const double v : ld) var += (v - mean) * (v - mean);
  var /= ld.size() - 1;
  const double se = std::sqrt(var / effective_sample_size(ld));
  CHECK(std::abs(mean - kMeanLogDetR2) <= 4 * se);
}

TEST_CASE("MCMC at order one matches the scalar law") {
  // MGIG(p, a, b) with r = 1 is GIG(p, a / 2, b / 2)
  const MgigParams m(0.6, SpdMatrix(scalar(1.4)), SpdMatrix(scalar(0.9)));
  const McmcRun run = mgig_sample(m, 6, 4000);
  std::vector<double> xs;
  for (const auto& d : run.draws) xs.push_back(d(0, 0));
  CHECK(ks_test(GigParams(0.6, 0.7, 0.45), xs).p_value > 0.001);
  CHECK(run.diagnostics.ess >= 3000);
}

TEST_CASE("MCMC is deterministic in the seed") {
  const MgigParams m(1, SpdMatrix::identity(2), SpdMatrix::identity(2));
  McmcConfig cfg;
  cfg.burn_in = 500;
  cfg.pilot = 500;
  const auto a = mgig_sample(m, 2, 100, cfg);
  const auto b = mgig_sample(m, 2, 100, cfg);
  for (std::size_t i = 0; i < a.draws.size(); ++i) CHECK(a.draws[i].matrix() == b.draws[i].matrix());
}

TEST_CASE("invariant battery") {
  const CheckTable t = matrix_battery(MapParams(1, 2), {1, 2, 3}, 1);
  for (const auto& row : t.rows) {
    CAPTURE(row.test);
    CAPTURE(row.statistic);
    CHECK(row.pass);
  }
}
