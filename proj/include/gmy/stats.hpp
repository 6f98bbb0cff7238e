#pragma once

// Goodness-of-fit, independence and MCMC diagnostics used by the verification
// modules.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "gmy/dist.hpp"
#include "gmy/random.hpp"

namespace gmy {

struct TestResult {
  double statistic = 0;
  double p_value = 1;
};

/// P(K > t) for the Kolmogorov distribution.
double kolmogorov_survival(double t);

/// One-sample KS from the model CDF evaluated at the ascending sample.
TestResult ks_from_cdf(std::span<const double> cdf_at_sorted);

/// One-sample KS of `data` against `law`. `data` need not be sorted.
TestResult ks_test(const MarginalLaw& law, std::vector<double> data);

/// Two-sample KS; inputs need not be sorted.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Squared distance covariance (V-statistic) of two scalar samples, O(n log n).
double distance_covariance_sq(std::span<const double> x, std::span<const double> y);

/// Distance correlation of scalar samples, in [0, 1].
double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Distance-correlation independence test with permutation p-value
/// (1 + #{perm >= obs}) / (1 + permutations). Each permutation uses its own
/// child stream of `rng`.
TestResult dcor_permutation_test(std::span<const double> x, std::span<const double> y, int permutations,
                                 const RandomStream& rng);

/// Same for vector-valued samples, one observation per row. O(n^2) memory.
TestResult dcor_permutation_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int permutations,
                                 const RandomStream& rng);

/// Effective sample size of one chain (Geyer initial positive sequence).
double effective_sample_size(std::span<const double> chain);

/// Integrated autocorrelation time n / ESS.
double autocorrelation_time(std::span<const double> chain);

/// Split-chain potential scale reduction over equally long chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace gmy
