#include "gmy/checks.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gmy/dist.hpp"
#include "gmy/matrix.hpp"
#include "gmy/specfun.hpp"
#include "gmy/stats.hpp"

namespace gmy {

CheckRow at_most(std::string test, double statistic, double threshold) {
  return {std::move(test), statistic, threshold, statistic <= threshold};
}

CheckRow above(std::string test, double p_value, double threshold) {
  return {std::move(test), p_value, threshold, p_value > threshold};
}

bool CheckTable::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

void CheckTable::append(const CheckTable& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string to_csv(const CheckTable& table) {
  std::string out = "test,statistic,threshold,pass\n";
  for (const auto& r : table.rows) {
    out += csv_field(r.test) + ',' + format_double(r.statistic) + ',' + format_double(r.threshold) + ',' +
           (r.pass ? "true" : "false") + '\n';
  }
  return out;
}

nlohmann::json to_json(const CheckTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"test", r.test}, {"statistic", r.statistic}, {"threshold", r.threshold}, {"pass", r.pass}});
  }
  return {{"schema", "gmy.checks/1"}, {"rows", rows}, {"pass", table.all_pass()}};
}

CheckTable from_machinery(const std::vector<MachineryRow>& rows) {
  CheckTable t;
  for (const auto& r : rows) t.add({r.check, r.residual, r.tolerance, r.pass});
  return t;
}

std::string machinery_csv(const std::vector<MachineryRow>& rows) {
  std::string out = "check,value,reference,residual,tolerance,pass\n";
  for (const auto& r : rows) {
    out += csv_field(r.check) + ',' + format_double(r.value) + ',' + format_double(r.reference) + ',' + format_double(r.residual) +
           ',' + format_double(r.tolerance) + ',' + (r.pass ? "true" : "false") + '\n';
  }
  return out;
}

namespace {

std::string fmt(double v) { return format_double(v); }

std::vector<double> log_grid(double lo, double hi, int m) {
  std::vector<double> z(m);
  for (int i = 0; i < m; ++i) z[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (m - 1));
  return z;
}

double rel(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

// z^2 g'' + z g' - (z^2 + nu^2) g relative to |g|, from central differences at
// h = 1e-5 z and 2h combined by one Richardson step, in long double.
template <class G>
double ode_residual(G g, long double nu, const std::vector<double>& zs) {
  double worst = 0;
  for (const double zd : zs) {
    const long double z = zd;
    const long double h = 1e-5L * z;
    const long double g0 = g(nu, z);
    auto diffs = [&](long double step, long double& d1, long double& d2) {
      const long double gp = g(nu, z + step);
      const long double gm = g(nu, z - step);
      d1 = (gp - gm) / (2 * step);
      d2 = (gp - 2 * g0 + gm) / (step * step);
    };
    long double a1, a2, b1, b2;
    diffs(h, a1, a2);
    diffs(2 * h, b1, b2);
    const long double d1 = (4 * a1 - b1) / 3;
    const long double d2 = (4 * a2 - b2) / 3;
    const long double r = z * z * d2 + z * d1 - (z * z + nu * nu) * g0;
    worst = std::max(worst, static_cast<double>(std::abs(r / g0)));
  }
  return worst;
}

}  // namespace

CheckTable specfun_battery() {
  CheckTable t;
  const auto zs = log_grid(0.01, 600, 121);
  double k_half = 0;
  double i_half = 0;
  for (const double z : zs) {
    k_half = std::max(k_half, rel(bessel_k(0.5, z), std::sqrt(std::numbers::pi / (2 * z)) * std::exp(-z)));
    i_half = std::max(i_half, rel(bessel_i(0.5, z), std::sqrt(2 / (std::numbers::pi * z)) * std::sinh(z)));
  }
  t.add(at_most("k_half_closed_form", k_half, 1e-12));
  t.add(at_most("i_half_closed_form", i_half, 1e-12));
  t.add(at_most("k_half_at_2", rel(bessel_k(0.5, 2.0), std::sqrt(std::numbers::pi / 4) * std::exp(-2.0)), 1e-12));
  t.add(at_most("i0_small_z", std::abs(bessel_i(0.0, 1e-10) - 1), 1e-15));

  double oracle = 0;
  for (const double nu : {0.0, 0.3, 1.0, 2.5, 7.5, 20.0, 49.0}) {
    for (const double z : {1e-3, 0.1, 1.0, 5.0, 30.0, 200.0, 650.0}) {
      // |delta log| is the relative error to first order
      oracle = std::max(oracle, std::abs(bessel_k_log(nu, z) - bessel_k_log_integral(nu, z)));
    }
  }
  t.add(at_most("k_vs_integral", oracle, 1e-12));

  double mismatches = 0;
  double recurrence = 0;
  double wronskian = 0;
  double monotone = 0;
  const auto zw = log_grid(0.1, 50, 60);
  for (const double nu : {0.0, 0.25, 0.5, 1.0, 2.0, 3.2, 7.7, 15.0, 40.0}) {
    double prev = INFINITY;
    for (const double z : zw) {
      const double k = bessel_k(nu, z);
      if (bessel_k(-nu, z) != k) ++mismatches;
      if (!(k < prev)) ++monotone;
      prev = k;
      if (nu >= 1) recurrence = std::max(recurrence, rel(bessel_k(nu - 1, z) + 2 * nu / z * k, bessel_k(nu + 1, z)));
      // I K' - I' K = -(I_nu K_{nu+1} + I_{nu+1} K_nu) by the derivative recurrences
      const double w = -(bessel_i(nu, z) * bessel_k(nu + 1, z) + bessel_i(nu + 1, z) * k);
      wronskian = std::max(wronskian, rel(w, -1 / z));
    }
  }
  t.add(at_most("k_symmetry_mismatches", mismatches, 0));
  t.add(at_most("k_recurrence", recurrence, 1e-10));
  t.add(at_most("wronskian", wronskian, 1e-10));
  t.add(at_most("k_monotone_violations", monotone, 0));

  const auto zo = log_grid(0.1, 50, 201);
  for (const double nu : {0.0, 0.5, 1.0, 2.5, 7.0}) {
    t.add(at_most("ode_k nu=" + fmt(nu),
                  ode_residual([](long double n, long double z) { return bessel_k(n, z); }, nu, zo), 1e-6));
    t.add(at_most("ode_i nu=" + fmt(nu),
                  ode_residual([](long double n, long double z) { return bessel_i(n, z); }, nu, zo), 1e-6));
  }
  t.add(at_most("ode_k nu=-3.2", ode_residual([](long double n, long double z) { return bessel_k(n, z); }, -3.2L, zo),
                1e-6));
  return t;
}

namespace {

// E g(X) = int exp(log_pdf(e^y) + y) g(e^y) dy for g(x) = x^s exp(sigma x + theta / x),
// by tanh-sinh over the window where the tilted integrand is above e^-60 of its peak.
double quad_expect(const MarginalLaw& law, double s, double sigma, double theta) {
  const LogKernel k = log_kernel(law);
  const LogKernel tilted{k.order + s, k.a - sigma, k.b - theta};
  const double lo = tilted.drop_point(60, -1);
  const double hi = tilted.drop_point(60, +1);
  boost::math::quadrature::tanh_sinh<double> q;
  auto f = [&](double y) {
    const double x = std::exp(y);
    return std::exp(log_pdf(law, x) + y + s * y + sigma * x + theta / x);
  };
  return q.integrate(f, lo, hi, 1e-14);
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& v) {
  double m = 0;
  for (const double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0;
  for (const double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

}  // namespace

CheckTable dist_battery(Seed seed, std::size_t n) {
  CheckTable t;
  const std::vector<MarginalLaw> laws{GigParams(0.5, 1, 1),  GigParams(-2.5, 0.3, 4), GigParams(3, 7, 0.2),
                                      GigParams(0, 10, 10),   GammaParams(2, 3),       InvGammaParams(1.5, 2)};
  for (const auto& law : laws) {
    t.add(at_most("normalization " + describe(law), std::abs(quad_expect(law, 0, 0, 0) - 1), 1e-9));
  }
  t.add(at_most("log_pdf_gig_oracle",
                std::abs(log_pdf(GigParams(0.5, 1, 1), 1.0) - (-std::log(2 * bessel_k(0.5, 2.0)) - 2)), 1e-12));
  t.add(at_most("log_pdf_gamma_oracle", std::abs(log_pdf(GammaParams(2, 3), 1.0) - std::log(9 * std::exp(-3.0))),
                1e-12));

  double recip = 0;
  double recip_cdf = 0;
  for (const GigParams g : {GigParams(2, 3, 5), GigParams(-0.7, 0.4, 2), GigParams(0, 1, 1)}) {
    const GigParams r = reciprocal_law(g);
    for (const double x : log_grid(1e-3, 1e3, 61)) {
      recip = std::max(recip, std::abs(log_pdf(g, x) - (log_pdf(r, 1 / x) - 2 * std::log(x))));
      recip_cdf = std::max(recip_cdf, std::abs(cdf(g, x) - (1 - cdf(r, 1 / x))));
    }
  }
  t.add(at_most("reciprocity_log_pdf", recip, 1e-10));
  t.add(at_most("reciprocity_cdf", recip_cdf, 1e-10));

  double gamma_limit = 0;
  double inv_gamma_limit = 0;
  double expo = 0;
  for (const double x : log_grid(1e-2, 20, 40)) {
    gamma_limit = std::max(gamma_limit, std::abs(cdf(GigParams(1.5, 2, 1e-8), x) - cdf(GammaParams(1.5, 2), x)));
    inv_gamma_limit =
        std::max(inv_gamma_limit, std::abs(cdf(GigParams(-1.5, 1e-8, 2), x) - cdf(InvGammaParams(1.5, 2), x)));
    expo = std::max(expo, std::abs(cdf(GammaParams(1, 2.5), x) - -std::expm1(-2.5 * x)));
  }
  t.add(at_most("weak_limit_gamma", gamma_limit, 1e-3));
  t.add(at_most("weak_limit_inv_gamma", inv_gamma_limit, 1e-3));
  t.add(at_most("cdf_exponential", expo, 1e-10));

  double moments = 0;
  double two_param = 0;
  double recip_transform = 0;
  for (const GigParams g : {GigParams(0.3, 2, 1), GigParams(-1.7, 0.5, 3), GigParams(4, 1, 0.1)}) {
    for (const double s : {-2.0, 0.5, 1.0, 3.0}) {
      moments = std::max(moments, rel(ext_laplace(g, {s, 0, 0}), quad_expect(g, s, 0, 0)));
    }
    for (const auto& [sigma, theta] : {std::pair{-1.0, -0.5}, std::pair{0.5 * g.a, 0.3 * g.b}, std::pair{0.0, -2.0}}) {
      two_param = std::max(two_param, rel(ext_laplace(g, {0, sigma, theta}), quad_expect(g, 0, sigma, theta)));
      recip_transform = std::max(recip_transform,
                                 rel(ext_laplace(g, {1.3, sigma, theta}), ext_laplace(reciprocal_law(g), {-1.3, theta, sigma})));
    }
  }
  t.add(at_most("ext_laplace_moments", moments, 1e-8));
  t.add(at_most("ext_laplace_two_parameter", two_param, 1e-8));
  t.add(at_most("ext_laplace_reciprocal", recip_transform, 1e-12));

  {
    const GigParams base(1, 2, 2);
    const GigParams tilted = tilt(base, 1, 1, 0.5);
    const double z = quad_expect(base, 1, 1, 0.5);
    double worst = 0;
    for (const double x : log_grid(1e-2, 50, 41)) {
      const double direct = log_pdf(base, x) + std::log(x) + x + 0.5 / x - std::log(z);
      worst = std::max(worst, std::abs(direct - log_pdf(tilted, x)));
    }
    t.add(at_most("tilt_pointwise", worst, 1e-10));
    const GigParams twice = tilt(tilt(base, 0.5, 0.3, -1), 0.5, 0.7, 1.5);
    t.add(at_most("tilt_composition", twice == tilted ? 0.0 : 1.0, 0));
  }

  for (int i = 0; i < 20; ++i) {
    const double frac_a = std::fmod(0.618033988749895 * i, 1.0);
    const double frac_b = std::fmod(0.381966011250105 * i + 0.5, 1.0);
    const GigParams g(-5 + 10.0 * i / 19, std::pow(10.0, -1 + 2 * frac_a), std::pow(10.0, -1 + 2 * frac_b));
    t.add(above("ks_p " + describe(g), ks_test(g, sample(g, seed, n, 100 + i)).p_value, 0.01));
  }
  t.add(above("ks_p " + describe(GammaParams(0.4, 2)), ks_test(GammaParams(0.4, 2), sample(GammaParams(0.4, 2), seed, n, 120)).p_value, 0.01));
  t.add(above("ks_p " + describe(InvGammaParams(2.5, 0.5)),
              ks_test(InvGammaParams(2.5, 0.5), sample(InvGammaParams(2.5, 0.5), seed, n, 121)).p_value, 0.01));

  {
    const GigParams g(0.8, 1.5, 0.6);
    std::vector<double> v = sample(g, seed, n, 130);
    const MeanSe ms = mean_se(v);
    t.add(at_most("mean_z " + describe(g), std::abs(ms.mean - ext_laplace(g, {1, 0, 0})) / ms.se, 4));
    for (auto& x : v) x = 1 / x;
    t.add(above("ks_p reciprocal draws", ks_test(reciprocal_law(g), std::move(v)).p_value, 0.01));
    const MeanSe gm = mean_se(sample(GammaParams(2.2, 0.7), seed, n, 131));
    t.add(at_most("mean_z " + describe(GammaParams(2.2, 0.7)), std::abs(gm.mean - 2.2 / 0.7) / gm.se, 4));
  }
  return t;
}

std::vector<MapParams> default_map_params() {
  return {MapParams(1, 2), MapParams(0.5, 3), MapParams(3, 0.2), MapParams(1, 0), MapParams(0, 1)};
}

CheckTable map_battery(const std::vector<MapParams>& params, Seed seed, std::size_t n) {
  CheckTable t;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const MapParams& p = params[k];
    const std::string tag = " alpha=" + fmt(p.alpha) + " beta=" + fmt(p.beta);
    RandomStream rng(seed, k);
    double inv = 0, jac = 0, prod = 0, psi_inv = 0, psi_id = 0, psi_jac = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const PositivePair xy{std::pow(10.0, -3 + 6 * uniform_open01(rng)), std::pow(10.0, -3 + 6 * uniform_open01(rng))};
      inv = std::max(inv, involution_residual(p, xy));
      jac = std::max(jac, std::abs(jacobian_det(p, xy) + 1));
      const PositivePair uv = f_dk(p, xy);
      prod = std::max(prod, rel(uv.first * uv.second, xy.first * xy.second));
      psi_inv = std::max(psi_inv, involution_residual(p, xy, ScalarMap::Psi));
      psi_id = std::max(psi_id, psi_identities(p, xy).max());
      const PositivePair st = psi(p, xy);
      psi_jac = std::max(psi_jac, rel(jacobian_abs(p, xy, ScalarMap::Psi), st.second * st.second / (xy.second * xy.second)));
    }
    t.add(at_most("involution" + tag, inv, 1e-12));
    t.add(at_most("jacobian_plus_one" + tag, jac, 1e-6));
    t.add(at_most("product" + tag, prod, 1e-12));
    t.add(at_most("psi_involution" + tag, psi_inv, 1e-12));
    t.add(at_most("psi_identities" + tag, psi_id, 1e-12));
    // the difference step is up to 1e-3 of the coordinate here, psi is not
    // unimodular, and the h^2 term of the quotient's curvature reaches ~1e-6
    t.add(at_most("psi_jacobian" + tag, psi_jac, 1e-5));
  }
  return t;
}

namespace {

SpdMatrix random_spd(int r, RandomStream& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) g(i, j) = normal(rng);
  return SpdMatrix(g * g.transpose() / r + 0.3 * Eigen::MatrixXd::Identity(r, r));
}

double frob_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

CheckTable matrix_battery(const MapParams& params, const std::vector<int>& orders, Seed seed, std::size_t pairs) {
  CheckTable t;
  for (const int r : orders) {
    RandomStream rng(seed, static_cast<std::uint64_t>(r));
    double inv = 0, jac = 0, uv_yx = 0, asym = 0, cong = 0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const SpdPair xy(random_spd(r, rng), random_spd(r, rng));
      const MatrixImage raw = f_dk_matrix_raw(params, xy.x.matrix(), xy.y.matrix());
      asym = std::max({asym, asymmetry(raw.u), asymmetry(raw.v)});
      const SpdPair uv = f_dk_matrix(params, xy);
      const SpdPair back = f_dk_matrix(params, uv);
      inv = std::max({inv, frob_rel(back.x.matrix(), xy.x.matrix()), frob_rel(back.y.matrix(), xy.y.matrix())});
      uv_yx = std::max(uv_yx, frob_rel(uv.x.matrix() * uv.y.matrix(), xy.y.matrix() * xy.x.matrix()));
      jac = std::max(jac, std::abs(jacobian_abs_matrix(params, xy) - 1));
      cong = std::max(cong, rel(congruence_det(xy.x), std::pow(xy.x.matrix().determinant(), r + 1)));
    }
    const std::string tag = " r=" + std::to_string(r);
    t.add(at_most("involution" + tag, inv, 1e-10));
    t.add(at_most("abs_jacobian_minus_one" + tag, jac, 1e-4));
    t.add(at_most("uv_equals_yx" + tag, uv_yx, 1e-10));
    t.add(at_most("image_asymmetry" + tag, asym, 1e-10));
    t.add(at_most("congruence_det" + tag, cong, 1e-10));
  }
  return t;
}

CheckTable transport_battery() {
  struct Point {
    double lambda;
    MapParams map;
    double c1, c2;
  };
  const Point points[] = {{-2, MapParams(1, 2), 1, 1},
                          {-0.5, MapParams(0.5, 3), 1, 3},
                          {0, MapParams(1, 2), 1, 3},
                          {0.5, MapParams(0.5, 3), 1, 1},
                          {2, MapParams(1, 2), 1, 3}};
  CheckTable t;
  for (const bool use_psi : {false, true}) {
    for (const auto& p : points) {
      const BalanceSpec spec(p.map, p.c1, p.c2, p.lambda, use_psi ? BalanceVariant{ScalarPsi{}} : BalanceVariant{ScalarFdK{}});
      t.add(at_most("transport " + spec.variant_name() + " lambda=" + fmt(p.lambda) + " alpha=" + fmt(p.map.alpha) +
                        " beta=" + fmt(p.map.beta) + " c1=" + fmt(p.c1) + " c2=" + fmt(p.c2),
                    transport_residual_grid(spec), 1e-9));
    }
  }
  return t;
}

CheckTable ext_laplace_battery(Seed seed, std::size_t n) {
  struct Point {
    GigParams law;
    ExtLaplaceArgs args;
  };
  const Point points[] = {
      {GigParams(0.3, 2, 1), {1.5, -1, -0.5}},    {GigParams(-1.2, 1, 3), {-0.7, 0.3, -1}},
      {GigParams(2, 0.5, 0.5), {0.5, 0.2, 0.2}},   {GigParams(0, 1, 1), {2, -0.5, 0.4}},
      {GigParams(-3, 4, 0.5), {1, 1, 0}},          {GigParams(4.5, 3, 2), {-2, 0, 0.8}},
      {GigParams(0.5, 0.1, 10), {0.3, 0.04, -2}},  {GigParams(-0.5, 10, 0.1), {-1, -3, 0.04}},
      {GigParams(1, 1, 1), {0, -1, -1}},           {GigParams(-2, 2, 2), {3, 0.5, 0.5}},
  };
  CheckTable t;
  for (std::size_t i = 0; i < std::size(points); ++i) {
    const auto& [law, a] = points[i];
    std::vector<double> v = sample(law, seed, n, i);
    for (auto& x : v) x = std::pow(x, a.s) * std::exp(a.sigma * x + a.theta / x);
    const MeanSe ms = mean_se(v);
    t.add(at_most("ext_laplace_z " + describe(law) + " s=" + fmt(a.s) + " sigma=" + fmt(a.sigma) +
                      " theta=" + fmt(a.theta),
                  std::abs(ms.mean - ext_laplace(law, a)) / ms.se, 4));
  }
  return t;
}

}  // namespace gmy
