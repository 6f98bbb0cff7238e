#include "gmy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace gmy {

// ---------------------------------------------------------------------------
// Kolmogorov–Smirnov

double kolmogorov_survival(double t) {
  if (t <= 0) return 1.0;
  if (t < 1.18) {
    // Jacobi theta form of the CDF converges fast for small t
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2 * k - 1;
      sum += std::exp(-m * m * pi2 / (8 * t * t));
    }
    return std::clamp(1.0 - std::sqrt(2 * std::numbers::pi) / t * sum, 0.0, 1.0);
  }
  double sum = 0;
  double sign = 1;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2 * sum, 0.0, 1.0);
}

namespace {

double ks_pvalue(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

TestResult ks_from_cdf(std::span<const double> cdf_at_sorted) {
  const std::size_t n = cdf_at_sorted.size();
  if (n == 0) throw std::invalid_argument("ks: empty sample");
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf_at_sorted[i];
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, ks_pvalue(d, static_cast<double>(n))};
}

TestResult ks_test(const MarginalLaw& law, std::vector<double> data) {
  std::sort(data.begin(), data.end());
  const auto f = cdf_sorted(law, data);
  return ks_from_cdf(f);
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_pvalue(d, na * nb / (na + nb))};
}

// ---------------------------------------------------------------------------
// Distance covariance, scalar samples.
//
// With a_ij = |x_i - x_j| and b_ij = |y_i - y_j| the V-statistic is
//   S1/n^2 - 2 S2/n^3 + S3/n^4,
// S1 = sum a_ij b_ij, S2 = sum_i a_i. b_i., S3 = a.. b.. .
// Row sums come from sorting and prefix sums. S1 is accumulated in x order
// with a Fenwick tree over y ranks holding (count, sum x, sum y, sum xy), so
// each pair is split by the sign of y_j - y_i.

namespace {

struct Moments {
  double c = 0;
  double x = 0;
  double y = 0;
  double xy = 0;

  Moments& operator+=(const Moments& o) {
    c += o.c;
    x += o.x;
    y += o.y;
    xy += o.xy;
    return *this;
  }
};

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1) {}

  void add(std::size_t pos, const Moments& m) {
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += m;
  }

  // sum over positions [0, pos)
  [[nodiscard]] Moments prefix(std::size_t pos) const {
    Moments m;
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) m += tree_[i];
    return m;
  }

 private:
  std::vector<Moments> tree_;
};

std::vector<double> centered(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.begin(), v.end());
  for (auto& e : out) e -= mean;
  return out;
}

std::vector<std::size_t> argsort(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  return idx;
}

// sum_j |v_i - v_j| for every i
std::vector<double> abs_row_sums(std::span<const double> v, std::span<const std::size_t> order) {
  const std::size_t n = v.size();
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  std::vector<double> out(n);
  double below = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vk = v[order[k]];
    const double above = total - below - vk;
    out[order[k]] = vk * static_cast<double>(k) - below + above - vk * static_cast<double>(n - 1 - k);
    below += vk;
  }
  return out;
}

// dense ranks (ties share a rank)
std::vector<std::size_t> dense_ranks(std::span<const double> v, std::span<const std::size_t> order,
                                     std::size_t& levels) {
  std::vector<std::size_t> rank(v.size());
  std::size_t r = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && v[order[k]] != v[order[k - 1]]) ++r;
    rank[order[k]] = r;
  }
  levels = order.empty() ? 0 : r + 1;
  return rank;
}

class ScalarDcov {
 public:
  ScalarDcov(std::span<const double> x, std::span<const double> y) : x_(centered(x)), y_(centered(y)) {
    if (x.size() != y.size()) throw std::invalid_argument("dcov: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("dcov: need at least two observations");
    x_order_ = argsort(x_);
    x_sorted_.resize(x_.size());
    for (std::size_t k = 0; k < x_.size(); ++k) x_sorted_[k] = x_[x_order_[k]];
    const auto y_order = argsort(y_);
    a_row_ = abs_row_sums(x_, x_order_);
    b_row_ = abs_row_sums(y_, y_order);
    y_rank_ = dense_ranks(y_, y_order, y_levels_);
    a_total_ = std::accumulate(a_row_.begin(), a_row_.end(), 0.0);
    b_total_ = std::accumulate(b_row_.begin(), b_row_.end(), 0.0);
  }

  [[nodiscard]] std::size_t size() const { return x_.size(); }

  // dCov^2 with y replaced by y[perm[i]]; identity when perm is empty
  [[nodiscard]] double value(std::span<const std::size_t> perm = {}) const {
    const std::size_t n = x_.size();
    auto pi = [&](std::size_t i) { return perm.empty() ? i : perm[i]; };
    // gather once so the sweep below reads contiguous memory
    std::vector<double> yk(n);
    std::vector<std::size_t> rk(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = pi(x_order_[k]);
      yk[k] = y_[i];
      rk[k] = y_rank_[i];
    }
    Fenwick tree(y_levels_);
    Moments all;
    double s1 = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double xj = x_sorted_[k];
      const double yj = yk[k];
      const Moments lo = tree.prefix(rk[k]);
      const Moments le = tree.prefix(rk[k] + 1);
      const Moments hi{all.c - le.c, all.x - le.x, all.y - le.y, all.xy - le.xy};
      s1 += (xj * yj * lo.c - xj * lo.y - yj * lo.x + lo.xy) - (xj * yj * hi.c - xj * hi.y - yj * hi.x + hi.xy);
      const Moments m{1.0, xj, yj, xj * yj};
      tree.add(rk[k], m);
      all += m;
    }
    s1 *= 2;
    double s2 = 0;
    for (std::size_t i = 0; i < n; ++i) s2 += a_row_[i] * b_row_[pi(i)];
    const double nd = static_cast<double>(n);
    return s1 / (nd * nd) - 2 * s2 / (nd * nd * nd) + a_total_ * b_total_ / (nd * nd * nd * nd);
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::size_t> x_order_;
  std::vector<double> x_sorted_;
  std::vector<double> a_row_;
  std::vector<double> b_row_;
  std::vector<std::size_t> y_rank_;
  std::size_t y_levels_ = 0;
  double a_total_ = 0;
  double b_total_ = 0;
};

std::vector<std::size_t> random_permutation(std::size_t n, RandomStream rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(p[i], p[uniform_index(rng, i + 1)]);
  return p;
}

double dcor_from(double vxy, double vxx, double vyy) {
  if (vxx <= 0 || vyy <= 0) return 0.0;
  return std::sqrt(std::max(vxy, 0.0) / std::sqrt(vxx * vyy));
}

}  // namespace

double distance_covariance_sq(std::span<const double> x, std::span<const double> y) {
  return ScalarDcov(x, y).value();
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  return dcor_from(distance_covariance_sq(x, y), distance_covariance_sq(x, x), distance_covariance_sq(y, y));
}

TestResult dcor_permutation_test(std::span<const double> x, std::span<const double> y, int permutations,
                                 const RandomStream& rng) {
  if (permutations < 1) throw std::invalid_argument("dcor test: permutations must be >= 1");
  const ScalarDcov d(x, y);
  const double observed = d.value();
  // the statistic is compared within one rounding of the observed value
  const double tol = 1e-12 * std::abs(observed);
  int exceed = 0;
  for (int k = 0; k < permutations; ++k) {
    const auto perm = random_permutation(d.size(), rng.split(static_cast<std::uint64_t>(k)));
    if (d.value(perm) >= observed - tol) ++exceed;
  }
  const double dcor = dcor_from(observed, distance_covariance_sq(x, x), distance_covariance_sq(y, y));
  return {dcor, (1.0 + exceed) / (1.0 + permutations)};
}

// ---------------------------------------------------------------------------
// Distance covariance, vector samples: double-centred distance matrices held
// in single precision to halve the footprint at n ~ 10^4.

namespace {

struct CentredDistances {
  std::size_t n = 0;
  std::vector<float> m;

  explicit CentredDistances(const Eigen::MatrixXd& pts) : n(static_cast<std::size_t>(pts.rows())), m(n * n) {
    std::vector<double> row_mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = (pts.row(static_cast<Eigen::Index>(i)) - pts.row(static_cast<Eigen::Index>(j))).norm();
        m[i * n + j] = static_cast<float>(d);
        m[j * n + i] = static_cast<float>(d);
        row_mean[i] += d;
        row_mean[j] += d;
      }
    }
    double grand = 0;
    for (auto& r : row_mean) {
      r /= static_cast<double>(n);
      grand += r;
    }
    grand /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        m[i * n + j] = static_cast<float>(m[i * n + j] - row_mean[i] - row_mean[j] + grand);
      }
    }
  }

  // (1/n^2) sum_ij A_ij B_{p(i) p(j)}
  [[nodiscard]] double inner(const CentredDistances& other, std::span<const std::size_t> perm = {}) const {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* a = &m[i * n];
      const float* b = &other.m[(perm.empty() ? i : perm[i]) * n];
      double row = 0;
      if (perm.empty()) {
        for (std::size_t j = 0; j < n; ++j) row += static_cast<double>(a[j] * b[j]);
      } else {
        for (std::size_t j = 0; j < n; ++j) row += static_cast<double>(a[j] * b[perm[j]]);
      }
      total += row;
    }
    const double nd = static_cast<double>(n);
    return total / (nd * nd);
  }
};

}  // namespace

TestResult dcor_permutation_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int permutations,
                                 const RandomStream& rng) {
  if (x.rows() != y.rows()) throw std::invalid_argument("dcor test: row count mismatch");
  if (x.rows() < 2) throw std::invalid_argument("dcor test: need at least two observations");
  if (permutations < 1) throw std::invalid_argument("dcor test: permutations must be >= 1");
  const CentredDistances a(x);
  const CentredDistances b(y);
  const double observed = a.inner(b);
  const double tol = 1e-6 * std::abs(observed);
  int exceed = 0;
  for (int k = 0; k < permutations; ++k) {
    const auto perm = random_permutation(a.n, rng.split(static_cast<std::uint64_t>(k)));
    if (a.inner(b, perm) >= observed - tol) ++exceed;
  }
  return {dcor_from(observed, a.inner(a), b.inner(b)), (1.0 + exceed) / (1.0 + permutations)};
}

// ---------------------------------------------------------------------------
// MCMC diagnostics

double autocorrelation_time(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) throw std::invalid_argument("autocorrelation_time: chain too short");
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(chain.begin(), chain.end());
  for (auto& v : c) v -= mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0;
    for (std::size_t t = 0; t + lag < n; ++t) s += c[t] * c[t + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (g0 <= 0) return 1.0;
  // Geyer: sum of positive, monotone non-increasing pair sums
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / g0;
    if (pair <= 0) break;
    pair = std::min(pair, prev_pair);
    tau += 2 * pair;
    prev_pair = pair;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

double effective_sample_size(std::span<const double> chain) {
  return static_cast<double>(chain.size()) / autocorrelation_time(chain);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("split_rhat: no chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len) throw std::invalid_argument("split_rhat: chains differ in length");
  }
  const std::size_t h = len / 2;
  if (h < 2) throw std::invalid_argument("split_rhat: chains too short");
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    for (int half = 0; half < 2; ++half) {
      const auto first = c.begin() + static_cast<std::ptrdiff_t>(half * (len - h));
      const double mean = std::accumulate(first, first + static_cast<std::ptrdiff_t>(h), 0.0) / static_cast<double>(h);
      double ss = 0;
      for (auto it = first; it != first + static_cast<std::ptrdiff_t>(h); ++it) ss += (*it - mean) * (*it - mean);
      means.push_back(mean);
      vars.push_back(ss / static_cast<double>(h - 1));
    }
  }
  const double m = static_cast<double>(means.size());
  const double hd = static_cast<double>(h);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0;
  for (const double mu : means) between += (mu - grand) * (mu - grand);
  between *= hd / (m - 1);
  const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (within <= 0) return 1.0;
  const double var_plus = (hd - 1) / hd * within + between / hd;
  return std::sqrt(var_plus / within);
}

}  // namespace gmy
