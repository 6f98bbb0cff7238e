// End-to-end acceptance run: one PASS/FAIL line per criterion with its runtime
// budget, then a rerun of each criterion to compare report bodies byte for byte.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gmy/balance.hpp"
#include "gmy/checks.hpp"
#include "gmy/lattice.hpp"

using namespace gmy;

namespace {

constexpr Seed kSeed = 20240601;

struct Outcome {
  bool pass;
  std::string body;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

Outcome from_table(const CheckTable& t) {
  std::string detail;
  for (const auto& row : t.rows) {
    if (!row.pass) detail += " [" + row.test + " = " + format_double(row.statistic) + "]";
  }
  return {t.all_pass(), to_csv(t), detail};
}

CheckTable only_fdk_rows(const CheckTable& t) {
  CheckTable out;
  for (const auto& row : t.rows) {
    if (!row.test.starts_with("psi")) out.add(row);
  }
  return out;
}

Outcome scalar_map() { return from_table(only_fdk_rows(map_battery(default_map_params(), kSeed, 10000))); }

Outcome matrix_map() { return from_table(matrix_battery(MapParams(1, 2), {1, 2, 3}, kSeed, 100)); }

Outcome transport() { return from_table(transport_battery()); }

Outcome monte_carlo() {
  std::string body;
  std::string detail;
  bool pass = true;
  auto record = [&](const std::string& label, const BalanceReport& r, bool expect_pass) {
    body += to_json(r).dump() + "\n";
    if (r.pass != expect_pass) {
      pass = false;
      detail += " [" + label + (expect_pass ? " failed" : " control passed") + "]";
    }
  };
  BalanceOptions opt;
  for (const auto& v : {BalanceVariant{ScalarFdK{}}, BalanceVariant{ScalarPsi{}}}) {
    const BalanceSpec spec(MapParams(1, 2), 1, 3, 0.5, v);
    opt.negative_control = false;
    record(spec.variant_name(), monte_carlo_balance(spec, kSeed, 100000, opt), true);
    opt.negative_control = true;
    record(spec.variant_name() + " control", monte_carlo_balance(spec, kSeed, 100000, opt), false);
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const BalanceSpec mspec(MapParams(1, 2), 1, 1, 2.5, MatrixFdK{SpdMatrix(id), SpdMatrix(id)});
  opt.negative_control = false;
  const BalanceReport m = monte_carlo_balance(mspec, kSeed, 6000, opt);
  record("matrix", m, true);
  for (const auto& s : m.mcmc) {
    if (s.diagnostics.ess < 5000) {
      pass = false;
      detail += " [" + s.name + " ess " + format_double(s.diagnostics.ess) + " < 5000]";
    }
  }
  opt.negative_control = true;
  record("matrix control", monte_carlo_balance(mspec, kSeed, 6000, opt), false);
  return {pass, body, detail};
}

Outcome laplace_transform() { return from_table(ext_laplace_battery(kSeed, 1000000)); }

Outcome machinery() {
  const BalanceSpec spec(MapParams(1, 2), 1, 3, 0.5, ScalarPsi{});
  const auto rows = machinery_check(spec, 0.7, -0.5, -0.8, kSeed, 1000000);
  Outcome o = from_table(from_machinery(rows));
  o.body = machinery_csv(rows);
  return o;
}

Outcome special_functions() { return from_table(specfun_battery()); }

Outcome lattice() {
  const std::array<std::size_t, 3> probes{10, 25, 50};
  std::string body;
  std::string detail;
  bool pass = true;
  struct Run {
    const char* label;
    double c1, c2, x_scale;
    bool expect_pass;
  };
  const Run runs[] = {{"c1=c2", 1, 1, 1, true}, {"c1!=c2", 1, 2.5, 1, true}, {"perturbed", 1, 1, 2, false}};
  for (const auto& run : runs) {
    LatticeConfig cfg = LatticeConfig::stationary(100000, 50, MapParams(1, 2), 0.5, run.c1, run.c2, kSeed);
    cfg.x_scale = run.x_scale;
    const StationarityReport r = stationarity_report(cfg, probes);
    body += to_json(cfg, r).dump() + "\n";
    if (r.all_pass() != run.expect_pass) {
      pass = false;
      detail += std::string(" [") + run.label + (run.expect_pass ? " failed" : " did not drift") + "]";
    }
    if (r.evolve.max_product_residual > 1e-12 || !r.evolve.all_positive) {
      pass = false;
      detail += std::string(" [") + run.label + " conservation]";
    }
  }
  return {pass, body, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "scalar involution and Jacobian", 5, scalar_map},
      {2, "matrix involution and Jacobian", 60, matrix_map},
      {3, "density transport", 5, transport},
      {4, "Monte Carlo detailed balance", 600, monte_carlo},
      {5, "extended Laplace transform", 120, laplace_transform},
      {6, "extended-Laplace identities", 120, machinery},
      {7, "special functions", 5, special_functions},
      {8, "lattice stationarity", 180, lattice},
  };
  using clock = std::chrono::steady_clock;
  bool all = true;
  std::vector<std::string> bodies;
  for (const auto& c : criteria) {
    const auto t0 = clock::now();
    const Outcome o = c.run();
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    const bool ok = o.pass && secs < c.budget_s;
    all = all && ok;
    bodies.push_back(o.body);
    std::printf("C%d %s: %s (%.2f s, limit %.0f s)%s\n", c.id, c.name, ok ? "PASS" : "FAIL", secs, c.budget_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::string mismatched;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (criteria[i].run().body != bodies[i]) mismatched += " C" + std::to_string(criteria[i].id);
  }
  const bool reproducible = mismatched.empty();
  all = all && reproducible;
  std::printf("C9 reproducibility: %s%s\n", reproducible ? "PASS" : "FAIL",
              reproducible ? "" : (" [differs:" + mismatched + "]").c_str());
  return all ? 0 : 1;
}
