#include "gmy/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmy {

LatticeConfig LatticeConfig::stationary(std::size_t width, std::size_t horizon, MapParams map, double lambda, double c1,
                                        double c2, Seed seed) {
  // F_dK sends (X, Y) with rates (c1, c2) to (U, V), the same family with c1 and c2 exchanged
  const MarginalLaw x = gig_or_limit(-lambda, map.alpha * c1, c2);
  const MarginalLaw y = gig_or_limit(-lambda, map.beta * c2, c1);
  const MarginalLaw u = gig_or_limit(-lambda, map.alpha * c2, c1);
  const MarginalLaw v = gig_or_limit(-lambda, map.beta * c1, c2);
  LatticeConfig cfg{width, horizon, map, {x, u}, {y, v}, seed};
  cfg.expect_stationary = true;
  return cfg;
}

void LatticeConfig::validate() const {
  if (width == 0 || horizon == 0) throw std::domain_error("lattice: width and horizon must be >= 1");
  if (!(x_scale > 0 && std::isfinite(x_scale))) throw std::domain_error("lattice: x_scale must be finite and > 0");
  if (const auto* r = std::get_if<ReplayBoundary>(&boundary)) {
    if (r->x0.size() != width || r->y0.size() != horizon) {
      throw std::domain_error("lattice: replay boundary lengths must equal width and horizon");
    }
    auto bad = [](double v) { return !(v > 0 && std::isfinite(v)); };
    if (std::any_of(r->x0.begin(), r->x0.end(), bad) || std::any_of(r->y0.begin(), r->y0.end(), bad)) {
      throw std::domain_error("lattice: replay boundary values must be finite and > 0");
    }
  }
}

namespace {

struct Boundary {
  std::vector<double> x0;  // index n - 1
  std::vector<double> y0;  // index t - 1
};

// x_n^0 has parity of n; y_0^t has parity of t
Boundary make_boundary(const LatticeConfig& cfg) {
  Boundary b;
  if (const auto* r = std::get_if<ReplayBoundary>(&cfg.boundary)) {
    b.x0 = r->x0;
    b.y0 = r->y0;
  } else {
    const MarginalSampler x_odd(cfg.x_laws.odd);
    const MarginalSampler x_even(cfg.x_laws.even);
    const MarginalSampler y_odd(cfg.y_laws.odd);
    const MarginalSampler y_even(cfg.y_laws.even);
    RandomStream rx(cfg.seed, 1);
    RandomStream ry(cfg.seed, 2);
    b.x0.resize(cfg.width);
    for (std::size_t n = 1; n <= cfg.width; ++n) b.x0[n - 1] = (n % 2 == 1 ? x_odd : x_even)(rx);
    b.y0.resize(cfg.horizon);
    for (std::size_t t = 1; t <= cfg.horizon; ++t) b.y0[t - 1] = (t % 2 == 1 ? y_odd : y_even)(ry);
  }
  for (auto& v : b.x0) v *= cfg.x_scale;
  return b;
}

struct CellUpdate {
  const MapParams& map;
  EvolveSummary& summary;

  void operator()(double& x, double& y) const {
    const double in = x * y;
    const PositivePair out = f_dk(map, {x, y});
    x = out.first;
    y = out.second;
    const double prod = x * y;
    summary.max_product_residual = std::max(summary.max_product_residual, std::abs(in - prod) / prod);
    if (!(x > 0 && y > 0)) summary.all_positive = false;
  }
};

}  // namespace

EvolveSummary evolve(const LatticeConfig& config, const std::function<void(const LatticeFrame&)>& sink) {
  config.validate();
  const Boundary b = make_boundary(config);
  EvolveSummary summary;
  const CellUpdate update{config.map, summary};
  LatticeFrame frame;
  frame.t = 0;
  frame.x_row = b.x0;
  sink(frame);
  frame.y_row.resize(config.width);
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    frame.t = t;
    frame.y_boundary = b.y0[t - 1];
    double y = frame.y_boundary;
    for (std::size_t n = 0; n < config.width; ++n) {
      update(frame.x_row[n], y);
      frame.y_row[n] = y;
    }
    sink(frame);
  }
  return summary;
}

EvolveSummary evolve_wavefront(const LatticeConfig& config, const std::function<void(const LatticeCell&)>& sink) {
  config.validate();
  const Boundary b = make_boundary(config);
  EvolveSummary summary;
  const CellUpdate update{config.map, summary};
  // x_col[n-1]: latest x in column n; y_row[t-1]: latest y in row t
  std::vector<double> x_col = b.x0;
  std::vector<double> y_row = b.y0;
  const std::size_t width = config.width;
  const std::size_t horizon = config.horizon;
  for (std::size_t k = 2; k <= width + horizon; ++k) {
    const std::size_t n_lo = k > horizon ? k - horizon : 1;
    const std::size_t n_hi = std::min(width, k - 1);
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
      const std::size_t t = k - n;
      update(x_col[n - 1], y_row[t - 1]);
      sink({t, n, x_col[n - 1], y_row[t - 1]});
    }
  }
  return summary;
}

bool StationarityReport::all_pass() const {
  return std::all_of(probes.begin(), probes.end(), [&](const ProbeResult& p) { return p.ks.p_value > threshold; });
}

bool StationarityReport::any_fail() const { return !all_pass(); }

namespace {

// sites of `row` (n = 1..N) whose n + t has the given parity
std::vector<double> parity_class(const std::vector<double>& row, std::size_t t, bool odd) {
  std::vector<double> out;
  out.reserve(row.size() / 2 + 1);
  for (std::size_t n = 1; n <= row.size(); ++n) {
    if (((n + t) % 2 == 1) == odd) out.push_back(row[n - 1]);
  }
  return out;
}

}  // namespace

StationarityReport stationarity_report(const LatticeConfig& config, std::span<const std::size_t> probe_times) {
  for (const std::size_t t : probe_times) {
    if (t < 1 || t > config.horizon) throw std::domain_error("stationarity_report: probe time outside 1..T");
  }
  std::vector<double> x_ref;
  std::vector<double> y_ref;
  std::vector<LatticeFrame> kept;
  StationarityReport report;
  report.evolve = evolve(config, [&](const LatticeFrame& f) {
    if (f.t == 0) x_ref = f.x_row;
    if (f.t == 1) y_ref = f.y_row;
    if (std::find(probe_times.begin(), probe_times.end(), f.t) != probe_times.end()) kept.push_back(f);
  });
  for (const auto& f : kept) {
    for (const bool odd : {true, false}) {
      const char* parity = odd ? "odd" : "even";
      const MarginalLaw& xl = odd ? config.x_laws.odd : config.x_laws.even;
      const MarginalLaw& yl = odd ? config.y_laws.odd : config.y_laws.even;
      report.probes.push_back({"x", f.t, parity, 0, describe(xl),
                               ks_two_sample(parity_class(f.x_row, f.t, odd), parity_class(x_ref, 0, odd))});
      report.probes.push_back({"y", f.t, parity, 1, describe(yl),
                               ks_two_sample(parity_class(f.y_row, f.t, odd), parity_class(y_ref, 1, odd))});
    }
  }
  return report;
}

nlohmann::json to_json(const LatticeConfig& config, const StationarityReport& report) {
  nlohmann::json j;
  j["schema"] = "gmy.lattice/1";
  j["width"] = config.width;
  j["horizon"] = config.horizon;
  j["params"] = {{"alpha", config.map.alpha}, {"beta", config.map.beta}};
  j["laws"] = {{"x_odd", describe(config.x_laws.odd)},
               {"x_even", describe(config.x_laws.even)},
               {"y_odd", describe(config.y_laws.odd)},
               {"y_even", describe(config.y_laws.even)}};
  j["seed"] = config.seed;
  j["boundary"] = std::holds_alternative<ReplayBoundary>(config.boundary) ? "replay" : "iid";
  j["x_scale"] = config.x_scale;
  j["expect_stationary"] = config.expect_stationary;
  j["max_product_residual"] = report.evolve.max_product_residual;
  j["all_positive"] = report.evolve.all_positive;
  j["threshold"] = report.threshold;
  j["probes"] = nlohmann::json::array();
  for (const auto& p : report.probes) {
    j["probes"].push_back({{"field", p.field},
                           {"t", p.t},
                           {"parity", p.parity},
                           {"reference_t", p.reference_t},
                           {"law", p.law},
                           {"statistic", p.ks.statistic},
                           {"p_value", p.ks.p_value},
                           {"pass", p.ks.p_value > report.threshold}});
  }
  j["pass"] = report.all_pass();
  return j;
}

}  // namespace gmy
