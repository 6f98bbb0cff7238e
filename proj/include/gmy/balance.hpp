#pragma once

// Detailed-balance verification for the scalar maps (F_dK and psi) and the
// matrix map: pointwise density transport, Monte Carlo marginal and
// independence tests, and the extended-Laplace identities behind them.

#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

#include "gmy/dist.hpp"
#include "gmy/maps.hpp"
#include "gmy/matrix.hpp"
#include "gmy/stats.hpp"

namespace gmy {

struct ScalarFdK {};
struct ScalarPsi {};
struct MatrixFdK {
  SpdMatrix a;
  SpdMatrix b;
};
using BalanceVariant = std::variant<ScalarFdK, ScalarPsi, MatrixFdK>;

/// Inputs (X, Y) and claimed outputs (U, V) of one detailed-balance statement.
///   F_dK:   X ~ GIG(-l, alpha c1, c2),  Y ~ GIG(-l, beta c2, c1),
///           U ~ GIG(-l, alpha c2, c1),  V ~ GIG(-l, beta c1, c2).
///   psi:    X ~ GIG(-l, alpha c1, c2),  Y ~ GIG(l, c1, beta c2),
///           U ~ GIG(-l, alpha c2, c1),  V ~ GIG(l, c2, beta c1).
///   matrix: X ~ MGIG(l, alpha a, b), Y ~ MGIG(l, beta b, a),
///           U ~ MGIG(l, alpha b, a), V ~ MGIG(l, beta a, b).
/// A vanishing rate turns the scalar laws into their Gamma / inverse-Gamma limits.
struct BalanceSpec {
  MapParams map;
  double c1;
  double c2;
  double lambda;
  BalanceVariant variant;

  BalanceSpec(MapParams map, double c1, double c2, double lambda, BalanceVariant variant = ScalarFdK{});

  [[nodiscard]] std::string variant_name() const;
  [[nodiscard]] bool is_matrix() const { return std::holds_alternative<MatrixFdK>(variant); }
};

struct ScalarLaws {
  MarginalLaw x;
  MarginalLaw y;
  MarginalLaw u;
  MarginalLaw v;
};

struct MatrixLaws {
  MgigParams x;
  MgigParams y;
  MgigParams u;
  MgigParams v;
};

ScalarLaws scalar_laws(const BalanceSpec& spec);
MatrixLaws matrix_laws(const BalanceSpec& spec);

/// The scalar map named by `spec` applied to one point.
PositivePair apply_map(const BalanceSpec& spec, const PositivePair& in);

/// |log f_X(x) + log f_Y(y) - log f_U(u) - log f_V(v) - log|J|| with normalized densities.
double transport_residual(const BalanceSpec& spec, const PositivePair& point);

/// Normalizers of the four matrix laws.
struct MatrixNormalizers {
  NormalizerEstimate x;
  NormalizerEstimate y;
  NormalizerEstimate u;
  NormalizerEstimate v;

  /// Three combined standard errors, or 1e-9 when all four are exact.
  [[nodiscard]] double tolerance() const;
};

MatrixNormalizers matrix_normalizers(const BalanceSpec& spec, Seed seed, std::size_t draws = 200000);

double transport_residual(const BalanceSpec& spec, const SpdPair& point, const MatrixNormalizers& normalizers);

/// Largest scalar transport residual over an m x m log-grid on [lo, hi]^2.
double transport_residual_grid(const BalanceSpec& spec, int m = 20, double lo = 0.05, double hi = 20);

struct BalanceOptions {
  int permutations = 499;
  double threshold = 0.01;
  /// Draw Y with c1 (a for the matrix map) doubled in its law; the output marginals should then fail.
  bool negative_control = false;
  McmcConfig mcmc{};
  std::size_t normalizer_draws = 200000;
};

struct MarginalTest {
  std::string name;
  std::string reference;
  TestResult result;
};

struct McmcSummary {
  std::string name;
  McmcDiagnostics diagnostics;
};

struct BalanceReport {
  std::string variant;
  double alpha = 0;
  double beta = 0;
  double c1 = 0;
  double c2 = 0;
  double lambda = 0;
  Seed seed = 0;
  std::size_t n = 0;
  bool negative_control = false;
  int permutations = 0;
  double threshold = 0;

  double max_log_residual = 0;
  double residual_tolerance = 0;
  std::vector<MarginalTest> ks;
  TestResult independence;
  std::vector<McmcSummary> mcmc;

  bool residual_pass = false;
  bool ks_pass = false;
  bool independence_pass = false;
  bool mcmc_pass = true;
  bool pass = false;
};

BalanceReport monte_carlo_balance(const BalanceSpec& spec, Seed seed, std::size_t n, const BalanceOptions& options = {});

nlohmann::json to_json(const BalanceReport& report);

/// One line of the extended-Laplace identity table.
struct MachineryRow {
  std::string check;
  double value;
  double reference;
  double residual;
  double tolerance;
  bool pass;
};

/// Transforms x_s = L_A(s, alpha sigma, theta), y_s = L_B(s, sigma, beta theta),
/// u_s = L_S(s, alpha theta, sigma), v_s = L_T(s, theta, beta sigma) for the psi
/// laws, checked by Monte Carlo against the closed form, the product identity
/// x_{-s} y_s = u_{-s} v_s, and the Bessel forms of y_s and v_s in
/// (sigma0, theta0) = (c1, c2) up to constants. Requires sigma, theta < 0 and beta > 0.
std::vector<MachineryRow> machinery_check(const BalanceSpec& spec, double s, double sigma, double theta, Seed seed,
                                          std::size_t n);

}  // namespace gmy
