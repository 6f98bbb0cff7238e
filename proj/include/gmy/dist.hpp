#pragma once

// GIG, Gamma and inverse-Gamma laws on (0, inf).
//
// All three are handled through the density of Y = log X, which for every law
// here has the form exp(order * y - a e^y - b e^{-y}) up to normalization and is
// therefore log-concave. Densities, CDFs and the sampler are built on that form.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gmy/random.hpp"

namespace gmy {

/// GIG(lambda, a, b): density proportional to x^(lambda-1) exp(-a x - b/x), a, b > 0.
struct GigParams {
  double lambda;
  double a;
  double b;

  GigParams(double lambda, double a, double b);
  friend bool operator==(const GigParams&, const GigParams&) = default;
};

/// Gamma(lambda, a): density a^lambda / Gamma(lambda) x^(lambda-1) e^(-a x).
struct GammaParams {
  double lambda;
  double a;

  GammaParams(double lambda, double a);
  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

/// InvGamma(lambda, b): density b^lambda / Gamma(lambda) x^(-lambda-1) e^(-b/x).
struct InvGammaParams {
  double lambda;
  double b;

  InvGammaParams(double lambda, double b);
  friend bool operator==(const InvGammaParams&, const InvGammaParams&) = default;
};

using MarginalLaw = std::variant<GigParams, GammaParams, InvGammaParams>;

/// The law with kernel x^(lambda-1) exp(-a x - b/x). A zero rate selects the
/// Gamma (b == 0, needs lambda > 0) or inverse-Gamma (a == 0, needs lambda < 0) limit.
MarginalLaw gig_or_limit(double lambda, double a, double b);

std::string describe(const MarginalLaw& law);

/// Arguments (s, sigma, theta) of E X^s exp(sigma X + theta / X).
struct ExtLaplaceArgs {
  double s;
  double sigma;
  double theta;
};

/// Log-concave kernel h(y) = order * y - a e^y - b e^{-y} of Y = log X.
struct LogKernel {
  double order;
  double a;
  double b;

  [[nodiscard]] double operator()(double y) const;
  [[nodiscard]] double slope(double y) const;
  [[nodiscard]] double mode() const;
  /// Point on the given side of the mode (dir = +1 or -1) where h has fallen by `drop`.
  [[nodiscard]] double drop_point(double drop, int dir) const;
};

LogKernel log_kernel(const MarginalLaw& law);

/// log of the constant C with pdf(x) = C x^(order-1) exp(-a x - b/x).
double log_normalizer(const MarginalLaw& law);

double log_pdf(const MarginalLaw& law, double x);

/// P(X <= x) by adaptive quadrature of the density (in log x).
double cdf(const MarginalLaw& law, double x);

/// CDF at each point of an ascending sequence, integrating only between neighbours.
std::vector<double> cdf_sorted(const MarginalLaw& law, std::span<const double> ascending);

/// E X^s exp(sigma X + theta / X) in closed Bessel form; requires sigma < a, theta < b.
double ext_laplace(const GigParams& law, const ExtLaplaceArgs& args);
double ext_laplace_log(const GigParams& law, const ExtLaplaceArgs& args);

/// GIG(lambda, a, b) -> GIG(-lambda, b, a), the law of 1/X.
GigParams reciprocal_law(const GigParams& law);

/// Law proportional to x^s exp(a_tilt x + b_tilt / x) f(x): GIG(lambda + s, a - a_tilt, b - b_tilt).
GigParams tilt(const GigParams& law, double s, double a_tilt, double b_tilt);

/// Exact sampler for one law; construction does the envelope setup once.
class MarginalSampler {
 public:
  explicit MarginalSampler(const MarginalLaw& law);

  double operator()(RandomStream& rng) const;

  [[nodiscard]] const MarginalLaw& law() const { return law_; }

 private:
  struct Envelope {
    LogKernel kernel;
    double mode;
    double peak;
    double left;
    double right;
    double left_slope;
    double right_slope;
    double w_left;
    double w_mid;
    double w_right;
  };

  static Envelope make_envelope(const LogKernel& kernel);
  static double draw_log(const Envelope& env, RandomStream& rng);

  MarginalLaw law_;
  bool invert_ = false;
  Envelope env_{};
};

/// n i.i.d. draws, deterministic in (seed, stream).
std::vector<double> sample(const MarginalLaw& law, Seed seed, std::size_t n, std::uint64_t stream = 0);

}  // namespace gmy
