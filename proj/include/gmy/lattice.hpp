#pragma once

// The lattice dynamics (x_n^t, y_n^t) = F_dK(x_n^{t-1}, y_{n-1}^t) on sites
// n = 1..N, times t = 1..T, driven by the boundary row x_n^0 and column y_0^t.

#include <cstddef>
#include <functional>
#include <json.hpp>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gmy/dist.hpp"
#include "gmy/maps.hpp"
#include "gmy/random.hpp"
#include "gmy/stats.hpp"

namespace gmy {

/// Laws of a field at sites with n + t odd and even.
struct ParityLaws {
  MarginalLaw odd;
  MarginalLaw even;
};

struct IidBoundary {};

/// Explicit boundary values: x_n^0 for n = 1..N and y_0^t for t = 1..T.
struct ReplayBoundary {
  std::vector<double> x0;
  std::vector<double> y0;
};

struct LatticeConfig {
  std::size_t width;
  std::size_t horizon;
  MapParams map;
  ParityLaws x_laws;
  ParityLaws y_laws;
  Seed seed = 0;
  std::variant<IidBoundary, ReplayBoundary> boundary = IidBoundary{};
  /// Multiplies the x boundary row; 1 leaves the configured laws intact.
  double x_scale = 1;
  bool expect_stationary = false;

  /// Stationary parameterization: with X, Y, U, V the laws of the F_dK balance
  /// statement for (lambda, c1, c2), x ~ X and y ~ Y where n + t is odd and
  /// x ~ U, y ~ V where it is even. For c1 = c2 the four laws are two.
  static LatticeConfig stationary(std::size_t width, std::size_t horizon, MapParams map, double lambda, double c1,
                                  double c2, Seed seed);

  void validate() const;
};

/// One row of the lattice: x_n^t and y_n^t for n = 1..N, and the boundary value
/// y_0^t entering it. Row 0 has no y values.
struct LatticeFrame {
  std::size_t t = 0;
  double y_boundary = 0;
  std::vector<double> x_row;
  std::vector<double> y_row;
};

struct EvolveSummary {
  /// Largest |x_n^{t-1} y_{n-1}^t - x_n^t y_n^t| / (x_n^t y_n^t) over all cells.
  double max_product_residual = 0;
  bool all_positive = true;
};

/// Row-by-row sweep holding one row in memory. Frames 0..T reach `sink` in order.
EvolveSummary evolve(const LatticeConfig& config, const std::function<void(const LatticeFrame&)>& sink);

/// One updated cell.
struct LatticeCell {
  std::size_t t;
  std::size_t n;
  double x;
  double y;
};

/// Anti-diagonal sweep (cells with n + t = const together), O(N + T) memory.
/// Produces exactly the values of `evolve`.
EvolveSummary evolve_wavefront(const LatticeConfig& config, const std::function<void(const LatticeCell&)>& sink);

struct ProbeResult {
  std::string field;
  std::size_t t;
  std::string parity;
  std::size_t reference_t;
  std::string law;
  TestResult ks;
};

struct StationarityReport {
  std::vector<ProbeResult> probes;
  EvolveSummary evolve;
  double threshold = 0.01;

  [[nodiscard]] bool all_pass() const;
  [[nodiscard]] bool any_fail() const;
};

/// Two-sample KS of each field's sites at every probe time against the reference
/// row (t = 0 for x, t = 1 for y, which has no row 0), one test per parity class
/// of n + t, so every comparison is between sites that share a claimed law.
StationarityReport stationarity_report(const LatticeConfig& config, std::span<const std::size_t> probe_times);

nlohmann::json to_json(const LatticeConfig& config, const StationarityReport& report);

}  // namespace gmy
