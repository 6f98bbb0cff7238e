#include "gmy/dist.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmy/specfun.hpp"

namespace gmy {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

GigParams::GigParams(double lambda_, double a_, double b_) : lambda(lambda_), a(a_), b(b_) {
  require(std::isfinite(lambda) && std::isfinite(a) && std::isfinite(b), "GIG: non-finite parameter");
  require(a > 0 && b > 0, "GIG: requires a > 0 and b > 0");
}

GammaParams::GammaParams(double lambda_, double a_) : lambda(lambda_), a(a_) {
  require(std::isfinite(lambda) && std::isfinite(a), "Gamma: non-finite parameter");
  require(lambda > 0 && a > 0, "Gamma: requires lambda > 0 and a > 0");
}

InvGammaParams::InvGammaParams(double lambda_, double b_) : lambda(lambda_), b(b_) {
  require(std::isfinite(lambda) && std::isfinite(b), "InvGamma: non-finite parameter");
  require(lambda > 0 && b > 0, "InvGamma: requires lambda > 0 and b > 0");
}

MarginalLaw gig_or_limit(double lambda, double a, double b) {
  if (a > 0 && b > 0) return GigParams(lambda, a, b);
  if (b == 0 && a > 0) return GammaParams(lambda, a);
  if (a == 0 && b > 0) return InvGammaParams(-lambda, b);
  throw std::domain_error("gig_or_limit: at most one rate may vanish and rates must be >= 0");
}

std::string describe(const MarginalLaw& law) {
  auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  return std::visit(Overloaded{
                        [&](const GigParams& p) { return "GIG(" + num(p.lambda) + "," + num(p.a) + "," + num(p.b) + ")"; },
                        [&](const GammaParams& p) { return "Gamma(" + num(p.lambda) + "," + num(p.a) + ")"; },
                        [&](const InvGammaParams& p) { return "InvGamma(" + num(p.lambda) + "," + num(p.b) + ")"; },
                    },
                    law);
}

// ---------------------------------------------------------------------------
// Log-variable kernel

double LogKernel::operator()(double y) const {
  double v = order * y;
  if (a > 0) v -= a * std::exp(y);
  if (b > 0) v -= b * std::exp(-y);
  return v;
}

double LogKernel::slope(double y) const {
  double v = order;
  if (a > 0) v -= a * std::exp(y);
  if (b > 0) v += b * std::exp(-y);
  return v;
}

double LogKernel::mode() const {
  // a t^2 - order t - b = 0 with t = e^y
  if (b == 0) return std::log(order / a);
  if (a == 0) return std::log(-b / order);
  const double root = std::sqrt(order * order + 4 * a * b);
  const double t = order >= 0 ? (order + root) / (2 * a) : 2 * b / (root - order);
  return std::log(t);
}

double LogKernel::drop_point(double drop, int dir) const {
  const double m = mode();
  const double target = (*this)(m) - drop;
  // bracket [inner, outer] with h(inner) >= target > h(outer)
  double inner = m;
  double step = 0.5;
  double outer = m + dir * step;
  while ((*this)(outer) >= target) {
    inner = outer;
    step *= 2;
    outer = m + dir * step;
  }
  for (int it = 0; it < 200; ++it) {
    // Newton from the outer end stays bracketed for a concave function
    const double g = (*this)(outer) - target;
    const double s = slope(outer);
    double next = outer - g / s;
    if (!(dir > 0 ? (next > inner && next < outer) : (next < inner && next > outer))) {
      next = 0.5 * (inner + outer);
    }
    if ((*this)(next) >= target) {
      inner = next;
    } else {
      outer = next;
    }
    if (std::abs(outer - inner) <= 1e-14 * std::max(1.0, std::abs(outer))) break;
  }
  return 0.5 * (inner + outer);
}

LogKernel log_kernel(const MarginalLaw& law) {
  return std::visit(Overloaded{
                        [](const GigParams& p) { return LogKernel{p.lambda, p.a, p.b}; },
                        [](const GammaParams& p) { return LogKernel{p.lambda, p.a, 0.0}; },
                        [](const InvGammaParams& p) { return LogKernel{-p.lambda, 0.0, p.b}; },
                    },
                    law);
}

double log_normalizer(const MarginalLaw& law) {
  return std::visit(
      Overloaded{
          [](const GigParams& p) {
            return 0.5 * p.lambda * std::log(p.a / p.b) - std::numbers::ln2 -
                   bessel_k_log(p.lambda, 2 * std::sqrt(p.a * p.b));
          },
          [](const GammaParams& p) { return p.lambda * std::log(p.a) - log_gamma(p.lambda); },
          [](const InvGammaParams& p) { return p.lambda * std::log(p.b) - log_gamma(p.lambda); },
      },
      law);
}

double log_pdf(const MarginalLaw& law, double x) {
  require(x > 0 && std::isfinite(x), "log_pdf: requires finite x > 0");
  const LogKernel k = log_kernel(law);
  const double y = std::log(x);
  return log_normalizer(law) + k(y) - y;
}

// ---------------------------------------------------------------------------
// CDF

namespace {

class LogDensity {
 public:
  explicit LogDensity(const MarginalLaw& law)
      : kernel_(log_kernel(law)), log_c_(log_normalizer(law)), mode_(kernel_.mode()) {}

  double operator()(double y) const { return std::exp(kernel_(y) + log_c_); }
  [[nodiscard]] double mode() const { return mode_; }

  // integral of the Y-density over [lo, hi], lo <= hi, finite or infinite ends
  [[nodiscard]] double integrate(double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    auto f = [this](double y) { return (*this)(y); };
    // split at the mode so each piece is monotone
    if (lo < mode_ && mode_ < hi) return integrate(lo, mode_) + integrate(mode_, hi);
    // the density is monotone on [lo, hi]; bound the mass from the end nearer
    // the mode, using the tangent line for an infinite end (log-concavity)
    const double near = hi <= mode_ ? hi : lo;
    const double bound = std::isinf(hi - lo) ? (*this)(near) / std::abs(kernel_.slope(near))
                                             : (*this)(near) * (hi - lo);
    if (!(bound > 1e-18)) return 0.0;
    double err = 0;
    return gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-13, &err);
  }

  [[nodiscard]] double cdf_log(double y) const {
    const double inf = std::numeric_limits<double>::infinity();
    if (y <= mode_) return integrate(-inf, y);
    return 1.0 - integrate(y, inf);
  }

 private:
  LogKernel kernel_;
  double log_c_;
  double mode_;
};

}  // namespace

double cdf(const MarginalLaw& law, double x) {
  require(x > 0 && !std::isnan(x), "cdf: requires x > 0");
  if (std::isinf(x)) return 1.0;
  const LogDensity dens(law);
  return std::clamp(dens.cdf_log(std::log(x)), 0.0, 1.0);
}

std::vector<double> cdf_sorted(const MarginalLaw& law, std::span<const double> ascending) {
  std::vector<double> out(ascending.size());
  if (ascending.empty()) return out;
  const LogDensity dens(law);
  auto f = [&dens](double y) { return dens(y); };
  double prev_y = std::log(ascending[0]);
  require(ascending[0] > 0, "cdf_sorted: requires x > 0");
  double acc = dens.cdf_log(prev_y);
  out[0] = std::clamp(acc, 0.0, 1.0);
  for (std::size_t i = 1; i < ascending.size(); ++i) {
    if (ascending[i] < ascending[i - 1]) throw std::invalid_argument("cdf_sorted: input not ascending");
    const double y = std::log(ascending[i]);
    const double width = y - prev_y;
    if (width > 0.05 || (prev_y < dens.mode() && y > dens.mode())) {
      acc += dens.integrate(prev_y, y);
    } else if (width > 0) {
      acc += boost::math::quadrature::gauss<double, 10>::integrate(f, prev_y, y);
    }
    out[i] = std::clamp(acc, 0.0, 1.0);
    prev_y = y;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transforms of the parameters

double ext_laplace_log(const GigParams& law, const ExtLaplaceArgs& args) {
  require(args.sigma < law.a && args.theta < law.b, "ext_laplace: requires sigma < a and theta < b");
  const double as = law.a - args.sigma;
  const double bt = law.b - args.theta;
  const double order = law.lambda + args.s;
  return 0.5 * order * std::log(bt / as) + 0.5 * law.lambda * std::log(law.a / law.b) +
         bessel_k_log(order, 2 * std::sqrt(as * bt)) - bessel_k_log(law.lambda, 2 * std::sqrt(law.a * law.b));
}

double ext_laplace(const GigParams& law, const ExtLaplaceArgs& args) {
  return std::exp(ext_laplace_log(law, args));
}

GigParams reciprocal_law(const GigParams& law) { return {-law.lambda, law.b, law.a}; }

GigParams tilt(const GigParams& law, double s, double a_tilt, double b_tilt) {
  require(a_tilt < law.a && b_tilt < law.b, "tilt: requires a_tilt < a and b_tilt < b");
  return {law.lambda + s, law.a - a_tilt, law.b - b_tilt};
}

// ---------------------------------------------------------------------------
// Sampling: rejection from a flat-plus-two-exponentials envelope of the
// log-concave density of log X. The tails are the tangents at the points where
// the log-density has dropped by one from its peak.

MarginalSampler::MarginalSampler(const MarginalLaw& law) : law_(law) {
  LogKernel kernel = log_kernel(law);
  if (const auto* gig = std::get_if<GigParams>(&law); gig && gig->lambda < 0) {
    // sample 1/X ~ GIG(-lambda, b, a)
    const GigParams r = reciprocal_law(*gig);
    kernel = LogKernel{r.lambda, r.a, r.b};
    invert_ = true;
  }
  env_ = make_envelope(kernel);
}

MarginalSampler::Envelope MarginalSampler::make_envelope(const LogKernel& kernel) {
  Envelope e{kernel, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  e.mode = kernel.mode();
  e.peak = kernel(e.mode);
  e.left = kernel.drop_point(1.0, -1);
  e.right = kernel.drop_point(1.0, +1);
  e.left_slope = kernel.slope(e.left);
  e.right_slope = kernel.slope(e.right);
  e.w_mid = e.right - e.left;
  e.w_left = std::exp(kernel(e.left) - e.peak) / e.left_slope;
  e.w_right = std::exp(kernel(e.right) - e.peak) / -e.right_slope;
  return e;
}

double MarginalSampler::draw_log(const Envelope& env, RandomStream& rng) {
  const double total = env.w_left + env.w_mid + env.w_right;
  const double h_left = env.kernel(env.left) - env.peak;
  const double h_right = env.kernel(env.right) - env.peak;
  for (;;) {
    const double u = uniform_open01(rng) * total;
    double y;
    double log_env;
    if (u < env.w_mid) {
      y = env.left + u;
      log_env = 0.0;
    } else if (u < env.w_mid + env.w_right) {
      const double e = standard_exponential(rng);
      y = env.right + e / -env.right_slope;
      log_env = h_right - e;
    } else {
      const double e = standard_exponential(rng);
      y = env.left - e / env.left_slope;
      log_env = h_left - e;
    }
    const double log_accept = env.kernel(y) - env.peak - log_env;
    if (std::log(uniform_open01(rng)) <= log_accept) return y;
  }
}

double MarginalSampler::operator()(RandomStream& rng) const {
  const double y = draw_log(env_, rng);
  return invert_ ? std::exp(-y) : std::exp(y);
}

std::vector<double> sample(const MarginalLaw& law, Seed seed, std::size_t n, std::uint64_t stream) {
  if (n == 0) throw std::invalid_argument("sample: requires n >= 1");
  const MarginalSampler sampler(law);
  RandomStream rng(seed, stream);
  std::vector<double> out(n);
  for (auto& v : out) v = sampler(rng);
  return out;
}

}  // namespace gmy
