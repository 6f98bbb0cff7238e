#include "gmy/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gmy/specfun.hpp"

namespace gmy {

namespace {

ScalarLaws scalar_laws_with(const BalanceSpec& spec, double c1, double c2) {
  const double a = spec.map.alpha;
  const double b = spec.map.beta;
  const double l = spec.lambda;
  if (std::holds_alternative<ScalarPsi>(spec.variant)) {
    return {gig_or_limit(-l, a * c1, c2), gig_or_limit(l, c1, b * c2), gig_or_limit(-l, a * c2, c1),
            gig_or_limit(l, c2, b * c1)};
  }
  return {gig_or_limit(-l, a * c1, c2), gig_or_limit(-l, b * c2, c1), gig_or_limit(-l, a * c2, c1),
          gig_or_limit(-l, b * c1, c2)};
}

// Y's law with c1 doubled
MarginalLaw perturbed_y(const BalanceSpec& spec) { return scalar_laws_with(spec, 2 * spec.c1, spec.c2).y; }

SpdMatrix scaled(const SpdMatrix& m, double k) { return SpdMatrix(k * m.matrix()); }

}  // namespace

BalanceSpec::BalanceSpec(MapParams map_, double c1_, double c2_, double lambda_, BalanceVariant variant_)
    : map(map_), c1(c1_), c2(c2_), lambda(lambda_), variant(std::move(variant_)) {
  if (!(c1 > 0 && c2 > 0 && std::isfinite(c1) && std::isfinite(c2))) {
    throw std::domain_error("BalanceSpec: c1 and c2 must be finite and > 0");
  }
  if (!std::isfinite(lambda)) throw std::domain_error("BalanceSpec: non-finite lambda");
  if (const auto* m = std::get_if<MatrixFdK>(&variant)) {
    if (m->a.dim() != m->b.dim()) throw std::domain_error("BalanceSpec: a and b differ in dimension");
    if (!(map.alpha > 0 && map.beta > 0)) throw std::domain_error("BalanceSpec: matrix map needs alpha, beta > 0");
    return;
  }
  // constructs (and so validates) every law; the claimed output laws are the
  // input laws with c1 and c2 exchanged
  const ScalarLaws laws = scalar_laws_with(*this, c1, c2);
  const ScalarLaws swapped = scalar_laws_with(*this, c2, c1);
  if (!(laws.u == swapped.x && laws.v == swapped.y)) {
    throw std::logic_error("BalanceSpec: output laws are not the swapped input laws");
  }
}

std::string BalanceSpec::variant_name() const {
  if (std::holds_alternative<ScalarFdK>(variant)) return "fdk";
  if (std::holds_alternative<ScalarPsi>(variant)) return "psi";
  return "matrix";
}

ScalarLaws scalar_laws(const BalanceSpec& spec) {
  if (spec.is_matrix()) throw std::invalid_argument("scalar_laws: spec is a matrix variant");
  return scalar_laws_with(spec, spec.c1, spec.c2);
}

MatrixLaws matrix_laws(const BalanceSpec& spec) {
  const auto* m = std::get_if<MatrixFdK>(&spec.variant);
  if (m == nullptr) throw std::invalid_argument("matrix_laws: spec is a scalar variant");
  const double al = spec.map.alpha;
  const double be = spec.map.beta;
  const double l = spec.lambda;
  return {MgigParams(l, scaled(m->a, al), m->b), MgigParams(l, scaled(m->b, be), m->a),
          MgigParams(l, scaled(m->b, al), m->a), MgigParams(l, scaled(m->a, be), m->b)};
}

PositivePair apply_map(const BalanceSpec& spec, const PositivePair& in) {
  if (std::holds_alternative<ScalarPsi>(spec.variant)) return psi(spec.map, in);
  if (std::holds_alternative<ScalarFdK>(spec.variant)) return f_dk(spec.map, in);
  throw std::invalid_argument("apply_map: spec is a matrix variant");
}

double transport_residual(const BalanceSpec& spec, const PositivePair& point) {
  const ScalarLaws laws = scalar_laws(spec);
  const PositivePair out = apply_map(spec, point);
  // |J_F| = 1; |J_psi| = t^2 / b^2
  const double log_jac =
      std::holds_alternative<ScalarPsi>(spec.variant) ? 2 * (std::log(out.second) - std::log(point.second)) : 0.0;
  return std::abs(log_pdf(laws.x, point.first) + log_pdf(laws.y, point.second) - log_pdf(laws.u, out.first) -
                  log_pdf(laws.v, out.second) - log_jac);
}

double MatrixNormalizers::tolerance() const {
  if (x.exact && y.exact && u.exact && v.exact) return 1e-9;
  return 3 * std::sqrt(x.std_error * x.std_error + y.std_error * y.std_error + u.std_error * u.std_error +
                       v.std_error * v.std_error);
}

MatrixNormalizers matrix_normalizers(const BalanceSpec& spec, Seed seed, std::size_t draws) {
  const MatrixLaws laws = matrix_laws(spec);
  return {mgig_log_normalizer(laws.x, derive_seed(seed, 11), draws),
          mgig_log_normalizer(laws.y, derive_seed(seed, 12), draws),
          mgig_log_normalizer(laws.u, derive_seed(seed, 13), draws),
          mgig_log_normalizer(laws.v, derive_seed(seed, 14), draws)};
}

double transport_residual(const BalanceSpec& spec, const SpdPair& point, const MatrixNormalizers& normalizers) {
  const MatrixLaws laws = matrix_laws(spec);
  const SpdPair out = f_dk_matrix(spec.map, point);
  return std::abs(mgig_log_pdf(laws.x, point.x, normalizers.x) + mgig_log_pdf(laws.y, point.y, normalizers.y) -
                  mgig_log_pdf(laws.u, out.x, normalizers.u) - mgig_log_pdf(laws.v, out.y, normalizers.v));
}

double transport_residual_grid(const BalanceSpec& spec, int m, double lo, double hi) {
  if (m < 2) throw std::invalid_argument("transport_residual_grid: requires m >= 2");
  double worst = 0;
  const double step = std::log(hi / lo) / (m - 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const PositivePair pt{lo * std::exp(i * step), lo * std::exp(j * step)};
      worst = std::max(worst, transport_residual(spec, pt));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

std::vector<double> logs(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double e) { return std::log(e); });
  return out;
}

void finish(BalanceReport& r) {
  r.ks_pass = std::all_of(r.ks.begin(), r.ks.end(), [&](const MarginalTest& t) { return t.result.p_value > r.threshold; });
  r.independence_pass = r.independence.p_value > r.threshold;
  r.mcmc_pass = std::all_of(r.mcmc.begin(), r.mcmc.end(), [](const McmcSummary& m) { return m.diagnostics.converged(); });
  r.residual_pass = r.max_log_residual <= r.residual_tolerance;
  r.pass = r.ks_pass && r.independence_pass && r.mcmc_pass && r.residual_pass;
}

void scalar_balance(const BalanceSpec& spec, Seed seed, std::size_t n, const BalanceOptions& opt, BalanceReport& r) {
  const ScalarLaws laws = scalar_laws(spec);
  const MarginalLaw y_law = opt.negative_control ? perturbed_y(spec) : laws.y;
  const auto xs = sample(laws.x, seed, n, 1);
  const auto ys = sample(y_law, seed, n, 2);
  std::vector<double> us(n);
  std::vector<double> vs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PositivePair out = apply_map(spec, {xs[i], ys[i]});
    us[i] = out.first;
    vs[i] = out.second;
  }
  const bool is_psi = std::holds_alternative<ScalarPsi>(spec.variant);
  r.ks.push_back({is_psi ? "S" : "U", describe(laws.u), ks_test(laws.u, us)});
  r.ks.push_back({is_psi ? "T" : "V", describe(laws.v), ks_test(laws.v, vs)});
  r.independence = dcor_permutation_test(logs(us), logs(vs), opt.permutations, RandomStream(seed, 3));
  r.max_log_residual = transport_residual_grid(spec);
  r.residual_tolerance = 1e-9;
}

Eigen::MatrixXd log_features(const std::vector<SpdMatrix>& ms) {
  const Eigen::Index r = ms.front().dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ms.size()), r * (r + 1) / 2);
  for (std::size_t i = 0; i < ms.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = vech(matrix_log(ms[i])).transpose();
  return out;
}

std::vector<double> log_dets(const std::vector<SpdMatrix>& ms) {
  std::vector<double> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(std::log(m.matrix().determinant()));
  return out;
}

std::vector<double> traces(const std::vector<SpdMatrix>& ms) {
  std::vector<double> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(m.matrix().trace());
  return out;
}

std::string describe(const MgigParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "MGIG(" << p.p << ",a=[";
  const auto& a = p.a.matrix();
  for (Eigen::Index i = 0; i < a.size(); ++i) os << (i ? " " : "") << a(i);
  os << "],b=[";
  const auto& b = p.b.matrix();
  for (Eigen::Index i = 0; i < b.size(); ++i) os << (i ? " " : "") << b(i);
  os << "])";
  return os.str();
}

void matrix_balance(const BalanceSpec& spec, Seed seed, std::size_t n, const BalanceOptions& opt, BalanceReport& r) {
  const MatrixLaws laws = matrix_laws(spec);
  const auto& mv = std::get<MatrixFdK>(spec.variant);
  const MgigParams y_law = opt.negative_control
                               ? MgigParams(spec.lambda, scaled(mv.b, spec.map.beta), scaled(mv.a, 2))
                               : laws.y;
  const McmcRun xs = mgig_sample(laws.x, derive_seed(seed, 1), n, opt.mcmc);
  const McmcRun ys = mgig_sample(y_law, derive_seed(seed, 2), n, opt.mcmc);
  // independent reference runs of the claimed output laws
  const McmcRun u_ref = mgig_sample(laws.u, derive_seed(seed, 3), n, opt.mcmc);
  const McmcRun v_ref = mgig_sample(laws.v, derive_seed(seed, 4), n, opt.mcmc);
  r.mcmc = {{"X", xs.diagnostics}, {"Y", ys.diagnostics}, {"U_ref", u_ref.diagnostics}, {"V_ref", v_ref.diagnostics}};

  std::vector<SpdMatrix> us;
  std::vector<SpdMatrix> vs;
  us.reserve(n);
  vs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SpdPair out = f_dk_matrix(spec.map, SpdPair(xs.draws[i], ys.draws[i]));
    us.push_back(out.x);
    vs.push_back(out.y);
  }
  const std::string du = "two-sample vs " + describe(laws.u);
  const std::string dv = "two-sample vs " + describe(laws.v);
  r.ks.push_back({"logdet U", du, ks_two_sample(log_dets(us), log_dets(u_ref.draws))});
  r.ks.push_back({"trace U", du, ks_two_sample(traces(us), traces(u_ref.draws))});
  r.ks.push_back({"logdet V", dv, ks_two_sample(log_dets(vs), log_dets(v_ref.draws))});
  r.ks.push_back({"trace V", dv, ks_two_sample(traces(vs), traces(v_ref.draws))});
  r.independence = dcor_permutation_test(log_features(us), log_features(vs), opt.permutations, RandomStream(seed, 3));

  const MatrixNormalizers norms = matrix_normalizers(spec, seed, opt.normalizer_draws);
  r.residual_tolerance = norms.tolerance();
  const std::size_t probes = std::min<std::size_t>(n, 100);
  for (std::size_t i = 0; i < probes; ++i) {
    r.max_log_residual = std::max(r.max_log_residual, transport_residual(spec, SpdPair(xs.draws[i], ys.draws[i]), norms));
  }
}

}  // namespace

BalanceReport monte_carlo_balance(const BalanceSpec& spec, Seed seed, std::size_t n, const BalanceOptions& options) {
  if (n < 1000) throw std::invalid_argument("monte_carlo_balance: requires n >= 1000");
  BalanceReport r;
  r.variant = spec.variant_name();
  r.alpha = spec.map.alpha;
  r.beta = spec.map.beta;
  r.c1 = spec.c1;
  r.c2 = spec.c2;
  r.lambda = spec.lambda;
  r.seed = seed;
  r.n = n;
  r.negative_control = options.negative_control;
  r.permutations = options.permutations;
  r.threshold = options.threshold;
  if (spec.is_matrix()) {
    matrix_balance(spec, seed, n, options, r);
  } else {
    scalar_balance(spec, seed, n, options, r);
  }
  finish(r);
  return r;
}

nlohmann::json to_json(const BalanceReport& r) {
  nlohmann::json j;
  j["schema"] = "gmy.balance/1";
  j["variant"] = r.variant;
  j["params"] = {{"alpha", r.alpha}, {"beta", r.beta}, {"c1", r.c1}, {"c2", r.c2}, {"lambda", r.lambda}};
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["negative_control"] = r.negative_control;
  j["max_log_residual"] = r.max_log_residual;
  j["residual_tolerance"] = r.residual_tolerance;
  j["ks_stats"] = nlohmann::json::array();
  for (const auto& t : r.ks) {
    j["ks_stats"].push_back(
        {{"name", t.name}, {"reference", t.reference}, {"statistic", t.result.statistic}, {"p_value", t.result.p_value}});
  }
  j["independence"] = {{"method", "distance correlation"},
                       {"statistic", r.independence.statistic},
                       {"p_value", r.independence.p_value},
                       {"permutations", r.permutations}};
  if (!r.mcmc.empty()) {
    j["mcmc"] = nlohmann::json::array();
    for (const auto& m : r.mcmc) {
      const auto& d = m.diagnostics;
      j["mcmc"].push_back({{"name", m.name},
                           {"acceptance_min", d.acceptance_min},
                           {"acceptance_max", d.acceptance_max},
                           {"rhat", d.rhat},
                           {"ess", d.ess},
                           {"tau", d.tau},
                           {"thin", d.thin},
                           {"burn_in", d.burn_in},
                           {"converged", d.converged()}});
    }
  }
  j["threshold"] = r.threshold;
  j["pass"] = {{"residual", r.residual_pass},
               {"ks", r.ks_pass},
               {"independence", r.independence_pass},
               {"mcmc", r.mcmc_pass},
               {"all", r.pass}};
  return j;
}

// ---------------------------------------------------------------------------
// Extended-Laplace identities

namespace {

struct MeanSe {
  double mean;
  double se;
};

template <class F>
MeanSe mc_mean(std::size_t n, F&& term) {
  double sum = 0;
  double sum_sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = term(i);
    sum += t;
    sum_sq += t * t;
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double var = std::max(0.0, (sum_sq / nd - mean * mean) * nd / (nd - 1));
  return {mean, std::sqrt(var / nd)};
}

double kernel_term(double x, const ExtLaplaceArgs& a) { return std::exp(a.s * std::log(x) + a.sigma * x + a.theta / x); }

MachineryRow mc_row(const std::string& name, const MeanSe& est, double exact) {
  const double z = est.se > 0 ? std::abs(est.mean - exact) / est.se : std::abs(est.mean - exact);
  return {name, est.mean, exact, z, 4.0, z <= 4.0};
}

MachineryRow rel_row(const std::string& name, double value, double reference, double tol) {
  const double res = std::abs(value - reference) / std::abs(reference);
  return {name, value, reference, res, tol, res <= tol};
}

// log of the Bessel form ((p - theta)/(q - sigma))^(r/2) K_r(2 sqrt(beta (theta0 - theta)(sigma0 - sigma)))
// with (p, q) = (theta0, sigma0) for y_s and swapped for v_s
double log_bessel_form(double r, double beta, double sigma0, double theta0, double sigma, double theta, bool flip) {
  const double ratio = (theta0 - theta) / (sigma0 - sigma);
  return 0.5 * r * std::log(flip ? 1 / ratio : ratio) +
         bessel_k_log(r, 2 * std::sqrt(beta * (theta0 - theta) * (sigma0 - sigma)));
}

}  // namespace

std::vector<MachineryRow> machinery_check(const BalanceSpec& spec, double s, double sigma, double theta, Seed seed,
                                          std::size_t n) {
  if (!std::holds_alternative<ScalarPsi>(spec.variant)) throw std::invalid_argument("machinery_check: needs the psi variant");
  if (!(sigma < 0 && theta < 0)) throw std::domain_error("machinery_check: requires sigma < 0 and theta < 0");
  if (!(spec.map.alpha > 0 && spec.map.beta > 0)) throw std::domain_error("machinery_check: requires alpha, beta > 0");
  if (n < 2) throw std::invalid_argument("machinery_check: requires n >= 2");
  const double al = spec.map.alpha;
  const double be = spec.map.beta;
  const ScalarLaws laws = scalar_laws(spec);
  const GigParams a_law = std::get<GigParams>(laws.x);
  const GigParams b_law = std::get<GigParams>(laws.y);
  const GigParams s_law = std::get<GigParams>(laws.u);
  const GigParams t_law = std::get<GigParams>(laws.v);

  auto x_args = [&](double p, double sg, double th) { return ExtLaplaceArgs{p, al * sg, th}; };
  auto y_args = [&](double p, double sg, double th) { return ExtLaplaceArgs{p, sg, be * th}; };
  auto u_args = [&](double p, double sg, double th) { return ExtLaplaceArgs{p, al * th, sg}; };
  auto v_args = [&](double p, double sg, double th) { return ExtLaplaceArgs{p, th, be * sg}; };

  std::vector<MachineryRow> rows;

  // Monte Carlo against the closed form
  const auto as = sample(a_law, seed, n, 1);
  const auto bs = sample(b_law, seed, n, 2);
  const auto a2 = sample(a_law, seed, n, 3);
  const auto b2 = sample(b_law, seed, n, 4);
  std::vector<double> ss(n);
  std::vector<double> ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto st = psi(spec.map, {a2[i], b2[i]});
    ss[i] = st.first;
    ts[i] = st.second;
  }
  const MeanSe x_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(as[i], x_args(s, sigma, theta)); });
  const MeanSe y_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(bs[i], y_args(s, sigma, theta)); });
  const MeanSe u_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(ss[i], u_args(s, sigma, theta)); });
  const MeanSe v_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(ts[i], v_args(s, sigma, theta)); });
  rows.push_back(mc_row("x_s mc", x_mc, ext_laplace(a_law, x_args(s, sigma, theta))));
  rows.push_back(mc_row("y_s mc", y_mc, ext_laplace(b_law, y_args(s, sigma, theta))));
  rows.push_back(mc_row("u_s mc", u_mc, ext_laplace(s_law, u_args(s, sigma, theta))));
  rows.push_back(mc_row("v_s mc", v_mc, ext_laplace(t_law, v_args(s, sigma, theta))));

  // x_{-s} y_s = u_{-s} v_s: left side from (A, B) draws, right side from psi
  // of an independent (A, B) batch
  const MeanSe xm_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(as[i], x_args(-s, sigma, theta)); });
  const MeanSe um_mc = mc_mean(n, [&](std::size_t i) { return kernel_term(ss[i], u_args(-s, sigma, theta)); });
  const double lhs = xm_mc.mean * y_mc.mean;
  const double rhs = um_mc.mean * v_mc.mean;
  const double se_l = std::hypot(y_mc.mean * xm_mc.se, xm_mc.mean * y_mc.se);
  const double se_r = std::hypot(v_mc.mean * um_mc.se, um_mc.mean * v_mc.se);
  rows.push_back(mc_row("product identity mc", {lhs, std::hypot(se_l, se_r)}, rhs));
  const double lhs_exact = ext_laplace_log(a_law, x_args(-s, sigma, theta)) + ext_laplace_log(b_law, y_args(s, sigma, theta));
  const double rhs_exact = ext_laplace_log(s_law, u_args(-s, sigma, theta)) + ext_laplace_log(t_law, v_args(s, sigma, theta));
  rows.push_back(rel_row("product identity closed form", std::exp(lhs_exact), std::exp(rhs_exact), 1e-10));

  // Bessel forms of y_s and v_s in (sigma0, theta0) = (c1, c2), r_s = lambda + s.
  // The s-dependent constants cancel in the ratio to a second point.
  const double r_s = spec.lambda + s;
  const double sigma_ref = 2 * sigma;
  const double theta_ref = 2 * theta;
  const double y_ratio = ext_laplace_log(b_law, y_args(s, sigma, theta)) - ext_laplace_log(b_law, y_args(s, sigma_ref, theta_ref));
  const double y_form = log_bessel_form(r_s, be, spec.c1, spec.c2, sigma, theta, false) -
                        log_bessel_form(r_s, be, spec.c1, spec.c2, sigma_ref, theta_ref, false);
  rows.push_back(rel_row("y bessel form ratio", std::exp(y_form), std::exp(y_ratio), 1e-8));
  const double v_ratio = ext_laplace_log(t_law, v_args(s, sigma, theta)) - ext_laplace_log(t_law, v_args(s, sigma_ref, theta_ref));
  const double v_form = log_bessel_form(r_s, be, spec.c1, spec.c2, sigma, theta, true) -
                        log_bessel_form(r_s, be, spec.c1, spec.c2, sigma_ref, theta_ref, true);
  rows.push_back(rel_row("v bessel form ratio", std::exp(v_form), std::exp(v_ratio), 1e-8));

  // s = 0, sigma = theta = 0-: every transform is 1
  constexpr double eps = -1e-12;
  double worst = 1;
  for (const double v : {ext_laplace(a_law, x_args(0, eps, eps)), ext_laplace(b_law, y_args(0, eps, eps)),
                         ext_laplace(s_law, u_args(0, eps, eps)), ext_laplace(t_law, v_args(0, eps, eps))}) {
    if (std::abs(v - 1) >= std::abs(worst - 1)) worst = v;
  }
  rows.push_back(rel_row("unit limit", worst, 1.0, 1e-9));
  return rows;
}

}  // namespace gmy
