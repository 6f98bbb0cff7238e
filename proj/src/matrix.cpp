#include "gmy/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gmy/specfun.hpp"
#include "gmy/stats.hpp"

namespace gmy {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// SPD validation

double asymmetry(const MatrixXd& m) {
  const double norm = m.norm();
  return norm == 0 ? 0.0 : (m - m.transpose()).norm() / norm;
}

SpdMatrix::SpdMatrix(const MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw std::domain_error("SpdMatrix: requires a non-empty square matrix");
  if (!m.allFinite()) throw std::domain_error("SpdMatrix: non-finite entry");
  if (asymmetry(m) > 1e-12) throw std::domain_error("SpdMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0)) throw std::domain_error("SpdMatrix: matrix is not positive definite");
  if (hi / lo > kConditionCeiling) throw IllConditioned("SpdMatrix: condition number exceeds ceiling");
}

SpdMatrix SpdMatrix::identity(Index r) { return SpdMatrix(MatrixXd::Identity(r, r)); }

SpdPair::SpdPair(SpdMatrix x_, SpdMatrix y_) : x(std::move(x_)), y(std::move(y_)) {
  if (x.dim() != y.dim()) throw std::domain_error("SpdPair: dimensions differ");
}

// ---------------------------------------------------------------------------
// The map

namespace {

// m^-1 rhs, refusing numerically singular m
MatrixXd guarded_solve(const MatrixXd& m, const MatrixXd& rhs) {
  const Eigen::PartialPivLU<MatrixXd> lu(m);
  if (!(lu.rcond() * kConditionCeiling >= 1)) throw IllConditioned("f_dk_matrix: intermediate inverse is singular");
  return lu.solve(rhs);
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

MatrixImage f_dk_matrix_raw(const MapParams& p, const MatrixXd& x, const MatrixXd& y) {
  const Index r = x.rows();
  const MatrixXd id = MatrixXd::Identity(r, r);
  const MatrixXd xy = x * y;
  const MatrixXd yx = y * x;
  return {y * guarded_solve(id + p.alpha * xy, id + p.beta * xy), x * guarded_solve(id + p.beta * yx, id + p.alpha * yx)};
}

SpdPair f_dk_matrix(const MapParams& p, const SpdPair& xy) {
  if (!(p.alpha > 0 && p.beta > 0)) throw std::domain_error("f_dk_matrix: requires alpha > 0 and beta > 0");
  const auto img = f_dk_matrix_raw(p, xy.x.matrix(), xy.y.matrix());
  return {SpdMatrix(symmetrized(img.u)), SpdMatrix(symmetrized(img.v))};
}

VectorXd vech(const MatrixXd& m) {
  const Index r = m.rows();
  VectorXd v(r * (r + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < r; ++j) {
    for (Index i = j; i < r; ++i) v(k++) = i == j ? m(i, j) : std::numbers::sqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXd unvech(const VectorXd& v, Index r) {
  if (v.size() != r * (r + 1) / 2) throw std::invalid_argument("unvech: length does not match dimension");
  MatrixXd m(r, r);
  Index k = 0;
  for (Index j = 0; j < r; ++j) {
    for (Index i = j; i < r; ++i) {
      const double e = i == j ? v(k) : v(k) / std::numbers::sqrt2;
      m(i, j) = e;
      m(j, i) = e;
      ++k;
    }
  }
  return m;
}

double jacobian_det_matrix(const MapParams& p, const SpdPair& xy) {
  if (!(p.alpha > 0 && p.beta > 0)) throw std::domain_error("jacobian_det_matrix: requires alpha > 0 and beta > 0");
  const Index r = xy.x.dim();
  if (r > 4) throw std::domain_error("jacobian_det_matrix: dimension above 4");
  const Index half = r * (r + 1) / 2;
  VectorXd theta(2 * half);
  theta << vech(xy.x.matrix()), vech(xy.y.matrix());
  auto image = [&](const VectorXd& t) {
    const auto img = f_dk_matrix_raw(p, unvech(t.head(half), r), unvech(t.tail(half), r));
    VectorXd out(2 * half);
    out << vech(img.u), vech(img.v);
    return out;
  };
  MatrixXd jac(2 * half, 2 * half);
  for (Index k = 0; k < 2 * half; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta(k)));
    VectorXd plus = theta;
    VectorXd minus = theta;
    plus(k) += h;
    minus(k) -= h;
    jac.col(k) = (image(plus) - image(minus)) / (2 * h);
  }
  return jac.fullPivLu().determinant();
}

double jacobian_abs_matrix(const MapParams& p, const SpdPair& xy) { return std::abs(jacobian_det_matrix(p, xy)); }

double congruence_det(const SpdMatrix& x) {
  const Index r = x.dim();
  const Index half = r * (r + 1) / 2;
  MatrixXd op(half, half);
  for (Index k = 0; k < half; ++k) {
    const MatrixXd basis = unvech(VectorXd::Unit(half, k), r);
    op.col(k) = vech(x.matrix() * basis * x.matrix());
  }
  return op.fullPivLu().determinant();
}

MatrixXd matrix_log(const SpdMatrix& x) {
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(x.matrix());
  return eig.eigenvectors() * eig.eigenvalues().array().log().matrix().asDiagonal() * eig.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// MGIG density

MgigParams::MgigParams(double p_, SpdMatrix a_, SpdMatrix b_) : p(p_), a(std::move(a_)), b(std::move(b_)) {
  if (!std::isfinite(p)) throw std::domain_error("MgigParams: non-finite order");
  if (a.dim() != b.dim()) throw std::domain_error("MgigParams: dimensions of a and b differ");
}

double mgig_log_kernel(const MgigParams& params, const SpdMatrix& x) {
  if (x.dim() != params.dim()) throw std::domain_error("mgig_log_kernel: dimension mismatch");
  const Index r = x.dim();
  const Eigen::LLT<MatrixXd> llt(x.matrix());
  const double log_det = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double tr_ax = (params.a.matrix() * x.matrix()).trace();
  const double tr_bxinv = llt.solve(params.b.matrix()).trace();
  return (params.p - 0.5 * static_cast<double>(r + 1)) * log_det - 0.5 * (tr_ax + tr_bxinv);
}

SpdMatrix mgig_mode(const MgigParams& params) {
  const Index r = params.dim();
  const double c = 2 * params.p - static_cast<double>(r) - 1;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> ea(params.a.matrix());
  const MatrixXd a_half = ea.operatorSqrt();
  const MatrixXd a_half_inv = ea.operatorInverseSqrt();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> em(a_half * params.b.matrix() * a_half);
  VectorXd z(r);
  for (Index i = 0; i < r; ++i) {
    const double mu = em.eigenvalues()(i);
    const double root = std::sqrt(c * c + 4 * mu);
    z(i) = c >= 0 ? 0.5 * (c + root) : 2 * mu / (root - c);
  }
  const MatrixXd zm = em.eigenvectors() * z.asDiagonal() * em.eigenvectors().transpose();
  return SpdMatrix(symmetrized(a_half_inv * zm * a_half_inv));
}

namespace {

double log_multivariate_gamma(double y, Index r) {
  double v = 0.25 * static_cast<double>(r * (r - 1)) * std::log(std::numbers::pi);
  for (Index j = 0; j < r; ++j) v += log_gamma(y - 0.5 * static_cast<double>(j));
  return v;
}

}  // namespace

NormalizerEstimate mgig_log_normalizer(const MgigParams& params, Seed seed, std::size_t n) {
  const Index r = params.dim();
  if (r == 1) {
    const double a = params.a(0, 0);
    const double b = params.b(0, 0);
    return {std::numbers::ln2 + 0.5 * params.p * std::log(b / a) + bessel_k_log(params.p, std::sqrt(a * b)), 0.0, 0,
            true};
  }
  if (n < 2) throw std::invalid_argument("mgig_log_normalizer: requires n >= 2");
  // Wishart(k, sigma) proposal with mode (k - r - 1) sigma = x*. Its exp(-tr(sigma^-1 x)/2)
  // tail must be heavier than exp(-tr(a x)/2), i.e. kappa < lambda_min(x*^1/2 a x*^1/2).
  const SpdMatrix mode = mgig_mode(params);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> em(mode.matrix());
  const MatrixXd mode_half = em.operatorSqrt();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> ec(mode_half * params.a.matrix() * mode_half,
                                                   Eigen::EigenvaluesOnly);
  const double kappa = 0.9 * ec.eigenvalues().minCoeff();
  const double rd = static_cast<double>(r);
  const double k = kappa + rd + 1;
  const MatrixXd sigma = mode.matrix() / kappa;
  const MatrixXd sigma_l = sigma.llt().matrixL();
  const double log_det_sigma = 2 * sigma_l.diagonal().array().log().sum();
  const double log_q_const = -0.5 * k * rd * std::numbers::ln2 - 0.5 * k * log_det_sigma - log_multivariate_gamma(0.5 * k, r);
  const double kernel_order = params.p - 0.5 * (rd + 1);
  const MatrixXd b_l = params.b.matrix().llt().matrixL();
  const MatrixXd sigma_inv = sigma.inverse();

  RandomStream rng(seed, 0x4d474947);
  std::normal_distribution<double> normal;
  std::vector<double> log_w(n);
  MatrixXd bartlett = MatrixXd::Zero(r, r);
  for (std::size_t t = 0; t < n; ++t) {
    for (Index i = 0; i < r; ++i) {
      std::gamma_distribution<double> chi2_half(0.5 * (k - static_cast<double>(i)), 1.0);
      bartlett(i, i) = std::sqrt(2 * chi2_half(rng));
      for (Index j = 0; j < i; ++j) bartlett(i, j) = normal(rng);
    }
    const MatrixXd c = sigma_l * bartlett;  // lower triangular, x = c c^T
    const double log_det = 2 * c.diagonal().array().log().sum();
    const MatrixXd x = c * c.transpose();
    const double tr_ax = (params.a.matrix() * x).trace();
    const double tr_bxinv = c.triangularView<Eigen::Lower>().solve(b_l).squaredNorm();
    const double log_f = kernel_order * log_det - 0.5 * (tr_ax + tr_bxinv);
    const double log_q = log_q_const + 0.5 * (k - rd - 1) * log_det - 0.5 * (sigma_inv * x).trace();
    log_w[t] = log_f - log_q;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double sum = 0;
  double sum_sq = 0;
  for (const double lw : log_w) {
    const double w = std::exp(lw - top);
    sum += w;
    sum_sq += w * w;
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double var = std::max(0.0, (sum_sq / nd - mean * mean) * nd / (nd - 1));
  return {top + std::log(mean), std::sqrt(var) / (mean * std::sqrt(nd)), n, false};
}

double mgig_log_pdf(const MgigParams& params, const SpdMatrix& x, const NormalizerEstimate& normalizer) {
  return mgig_log_kernel(params, x) - normalizer.log_value;
}

// ---------------------------------------------------------------------------
// MCMC
//
// State theta holds the lower Cholesky factor of x column by column with log
// diagonal entries. The change of variables x = L L^T, L_ii = e^theta adds
// sum_i (r - i + 1) theta_ii (0-based i) to the log target.

namespace {

class CholeskyTarget {
 public:
  explicit CholeskyTarget(const MgigParams& params)
      : r_(params.dim()),
        order_(params.p - 0.5 * static_cast<double>(params.dim() + 1)),
        a_(params.a.matrix()),
        b_l_(params.b.matrix().llt().matrixL()) {}

  [[nodiscard]] Index dim() const { return r_ * (r_ + 1) / 2; }

  [[nodiscard]] MatrixXd factor(const VectorXd& theta) const {
    MatrixXd l = MatrixXd::Zero(r_, r_);
    Index k = 0;
    for (Index j = 0; j < r_; ++j) {
      for (Index i = j; i < r_; ++i) l(i, j) = i == j ? std::exp(theta(k++)) : theta(k++);
    }
    return l;
  }

  [[nodiscard]] VectorXd coordinates(const MatrixXd& x) const {
    const MatrixXd l = x.llt().matrixL();
    VectorXd theta(dim());
    Index k = 0;
    for (Index j = 0; j < r_; ++j) {
      for (Index i = j; i < r_; ++i) theta(k++) = i == j ? std::log(l(i, j)) : l(i, j);
    }
    return theta;
  }

  [[nodiscard]] double log_density(const VectorXd& theta) const {
    const MatrixXd l = factor(theta);
    double log_diag = 0;
    double jac = 0;
    for (Index i = 0; i < r_; ++i) {
      const double li = std::log(l(i, i));
      log_diag += li;
      jac += static_cast<double>(r_ - i + 1) * li;
    }
    const double tr_ax = (a_ * l).cwiseProduct(l).sum();
    const double tr_bxinv = l.triangularView<Eigen::Lower>().solve(b_l_).squaredNorm();
    const double v = order_ * 2 * log_diag - 0.5 * (tr_ax + tr_bxinv) + jac;
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  }

  // monitored scalar: log det x
  [[nodiscard]] double log_det(const VectorXd& theta) const {
    double s = 0;
    Index k = 0;
    for (Index j = 0; j < r_; ++j) {
      s += 2 * theta(k);
      k += r_ - j;
    }
    return s;
  }

 private:
  Index r_;
  double order_;
  MatrixXd a_;
  MatrixXd b_l_;
};

struct Chain {
  const CholeskyTarget* target;
  RandomStream rng;
  VectorXd theta;
  double log_p = 0;
  MatrixXd prop_l;
  double log_scale = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::normal_distribution<double> normal{};

  // one Metropolis step; returns the acceptance probability
  double step() {
    VectorXd z(theta.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const VectorXd cand = theta + std::exp(log_scale) * (prop_l * z);
    const double cand_log_p = target->log_density(cand);
    const double log_ratio = cand_log_p - log_p;
    const double accept_prob = log_ratio >= 0 ? 1.0 : std::exp(log_ratio);
    ++proposed;
    if (std::log(uniform_open01(rng)) < log_ratio) {
      theta = cand;
      log_p = cand_log_p;
      ++accepted;
    }
    return accept_prob;
  }
};

MatrixXd sample_covariance(const std::vector<VectorXd>& xs) {
  const Index d = xs.front().size();
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  return cov / static_cast<double>(xs.size() - 1);
}

void burn_in(Chain& chain, std::size_t steps, double target_acceptance) {
  const std::size_t d = static_cast<std::size_t>(chain.theta.size());
  // stage 1: isotropic proposal, scale adaptation only
  const std::size_t stage1 = steps / 2;
  std::vector<VectorXd> history;
  for (std::size_t t = 1; t <= stage1; ++t) {
    const double a = chain.step();
    chain.log_scale += (a - target_acceptance) / std::pow(static_cast<double>(t), 0.6);
    if (t > stage1 / 2) history.push_back(chain.theta);
  }
  // stage 2: proposal shaped by the stage-1 covariance
  if (history.size() > 2 * d) {
    const MatrixXd cov = sample_covariance(history) + 1e-10 * MatrixXd::Identity(static_cast<Index>(d), static_cast<Index>(d));
    const Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
      chain.prop_l = llt.matrixL();
      chain.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    }
  }
  for (std::size_t t = 1; t <= steps - stage1; ++t) {
    const double a = chain.step();
    chain.log_scale += (a - target_acceptance) / std::pow(static_cast<double>(t), 0.6);
  }
  chain.proposed = 0;
  chain.accepted = 0;
}

}  // namespace

McmcRun mgig_sample(const MgigParams& params, Seed seed, std::size_t n, const McmcConfig& config) {
  if (n == 0) throw std::invalid_argument("mgig_sample: requires n >= 1");
  if (config.chains == 0) throw std::invalid_argument("mgig_sample: requires at least one chain");
  const CholeskyTarget target(params);
  const Index d = target.dim();
  const VectorXd start = target.coordinates(mgig_mode(params).matrix());

  const RandomStream root(seed, 0x4d434d43);
  std::vector<Chain> chains;
  for (std::size_t c = 0; c < config.chains; ++c) {
    Chain chain{&target, root.split(c), start, 0.0, 0.1 * MatrixXd::Identity(d, d), 0.0};
    // over-dispersed start around the mode
    for (Index i = 0; i < d; ++i) chain.theta(i) += 0.5 * chain.normal(chain.rng);
    chain.log_p = target.log_density(chain.theta);
    burn_in(chain, config.burn_in, config.target_acceptance);
    chains.push_back(std::move(chain));
  }

  McmcDiagnostics diag;
  diag.burn_in = config.burn_in;
  std::size_t thin = config.thin;
  if (thin == 0) {
    double tau = 1;
    for (auto& chain : chains) {
      std::vector<double> trace;
      trace.reserve(config.pilot);
      for (std::size_t t = 0; t < config.pilot; ++t) {
        chain.step();
        trace.push_back(target.log_det(chain.theta));
      }
      tau = std::max(tau, autocorrelation_time(trace));
    }
    diag.tau = tau;
    thin = static_cast<std::size_t>(std::ceil(3 * tau));
  }
  diag.thin = thin;

  const std::size_t per_chain = (n + config.chains - 1) / config.chains;
  std::vector<std::vector<VectorXd>> kept(config.chains);
  for (std::size_t c = 0; c < config.chains; ++c) {
    kept[c].reserve(per_chain);
    for (std::size_t k = 0; k < per_chain; ++k) {
      for (std::size_t t = 0; t < thin; ++t) chains[c].step();
      kept[c].push_back(chains[c].theta);
    }
  }

  diag.acceptance_min = 1;
  diag.acceptance_max = 0;
  for (const auto& chain : chains) {
    const double rate = chain.proposed == 0 ? 0.0 : static_cast<double>(chain.accepted) / static_cast<double>(chain.proposed);
    diag.acceptance_min = std::min(diag.acceptance_min, rate);
    diag.acceptance_max = std::max(diag.acceptance_max, rate);
  }
  // monitored quantities: every coordinate and log det
  diag.rhat = 0;
  diag.ess = std::numeric_limits<double>::infinity();
  if (per_chain >= 4) {
    for (Index q = 0; q <= d; ++q) {
      std::vector<std::vector<double>> traces(config.chains);
      double ess = 0;
      for (std::size_t c = 0; c < config.chains; ++c) {
        for (const auto& th : kept[c]) traces[c].push_back(q < d ? th(q) : target.log_det(th));
        ess += effective_sample_size(traces[c]);
      }
      diag.rhat = std::max(diag.rhat, split_rhat(traces));
      diag.ess = std::min(diag.ess, ess);
    }
  } else {
    diag.ess = static_cast<double>(per_chain * config.chains);
  }

  McmcRun run;
  run.diagnostics = diag;
  run.draws.reserve(n);
  for (std::size_t c = 0; c < config.chains && run.draws.size() < n; ++c) {
    for (const auto& th : kept[c]) {
      if (run.draws.size() == n) break;
      const MatrixXd l = target.factor(th);
      run.draws.emplace_back(symmetrized(l * l.transpose()));
    }
  }
  return run;
}

}  // namespace gmy
