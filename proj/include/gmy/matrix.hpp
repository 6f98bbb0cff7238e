#pragma once

// Symmetric positive-definite matrices: the matrix map F_dK, its Jacobian,
// and the matrix GIG law (density, normalizer, MCMC sampler).

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gmy/maps.hpp"
#include "gmy/random.hpp"

namespace gmy {

inline constexpr double kConditionCeiling = 1e12;

/// Raised when a matrix to be inverted or validated exceeds kConditionCeiling.
class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpdMatrix {
 public:
  /// Validates symmetry (1e-12 relative) and positive definiteness, then symmetrizes.
  explicit SpdMatrix(const Eigen::MatrixXd& m);

  static SpdMatrix identity(Eigen::Index r);

  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return m_; }
  [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
  [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

struct SpdPair {
  SpdMatrix x;
  SpdMatrix y;

  SpdPair(SpdMatrix x, SpdMatrix y);
};

/// ||m - m^T||_F / ||m||_F.
double asymmetry(const Eigen::MatrixXd& m);

/// Unsymmetrized images u = y (I + a xy)^-1 (I + b xy), v = x (I + b yx)^-1 (I + a yx).
struct MatrixImage {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
};
MatrixImage f_dk_matrix_raw(const MapParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// The matrix map with symmetrized, validated outputs. Requires alpha, beta > 0.
SpdPair f_dk_matrix(const MapParams& p, const SpdPair& xy);

/// Half-vectorization with off-diagonal weight sqrt(2) (an isometry for the Frobenius norm).
Eigen::VectorXd vech(const Eigen::MatrixXd& m);
Eigen::MatrixXd unvech(const Eigen::VectorXd& v, Eigen::Index r);

/// Central-difference Jacobian determinant of the matrix map in vech coordinates, r <= 4.
double jacobian_det_matrix(const MapParams& p, const SpdPair& xy);
double jacobian_abs_matrix(const MapParams& p, const SpdPair& xy);

/// Determinant of h -> x h x on symmetric matrices.
double congruence_det(const SpdMatrix& x);

/// Matrix logarithm of an SPD matrix.
Eigen::MatrixXd matrix_log(const SpdMatrix& x);

/// MGIG(p, a, b): density proportional to det(x)^(p-(r+1)/2) exp(-(tr(a x) + tr(b x^-1))/2).
struct MgigParams {
  double p;
  SpdMatrix a;
  SpdMatrix b;

  MgigParams(double p, SpdMatrix a, SpdMatrix b);
  [[nodiscard]] Eigen::Index dim() const { return a.dim(); }
};

/// Unnormalized log density.
double mgig_log_kernel(const MgigParams& params, const SpdMatrix& x);

/// The maximizer of the density, solving x a x - (2p - r - 1) x - b = 0.
SpdMatrix mgig_mode(const MgigParams& params);

/// log of the normalizer K_p(a, b) with its standard error (0 when exact).
struct NormalizerEstimate {
  double log_value = 0;
  double std_error = 0;
  std::size_t draws = 0;
  bool exact = false;
};

/// Exact for r = 1; otherwise importance sampling from a Wishart proposal
/// whose mode is the MGIG mode.
NormalizerEstimate mgig_log_normalizer(const MgigParams& params, Seed seed, std::size_t n = 200000);

double mgig_log_pdf(const MgigParams& params, const SpdMatrix& x, const NormalizerEstimate& normalizer);

struct McmcConfig {
  std::size_t chains = 4;
  std::size_t burn_in = 4000;
  std::size_t pilot = 4000;
  /// 0 selects ceil(3 tau) from the pilot run.
  std::size_t thin = 0;
  double target_acceptance = 0.3;
};

struct McmcDiagnostics {
  double acceptance_min = 0;
  double acceptance_max = 0;
  double rhat = 0;
  double ess = 0;
  double tau = 0;
  std::size_t thin = 1;
  std::size_t burn_in = 0;

  [[nodiscard]] bool converged() const {
    return acceptance_min >= 0.1 && acceptance_max <= 0.6 && rhat < 1.05;
  }
};

struct McmcRun {
  std::vector<SpdMatrix> draws;
  McmcDiagnostics diagnostics;
};

/// Random-walk Metropolis on the Cholesky factor (log diagonal), adapted during
/// burn-in only. Chains run on disjoint streams and are returned chain by chain.
McmcRun mgig_sample(const MgigParams& params, Seed seed, std::size_t n, const McmcConfig& config = {});

}  // namespace gmy
