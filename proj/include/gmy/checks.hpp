#pragma once

// Residual batteries behind the `check` subcommands and the acceptance run.
// Each row compares one statistic with a threshold.

#include <json.hpp>
#include <string>
#include <vector>

#include "gmy/balance.hpp"
#include "gmy/maps.hpp"
#include "gmy/random.hpp"

namespace gmy {

struct CheckRow {
  std::string test;
  double statistic;
  double threshold;
  bool pass;
};

/// A residual or |z| score: pass when statistic <= threshold.
CheckRow at_most(std::string test, double statistic, double threshold);
/// A p-value: pass when statistic > threshold.
CheckRow above(std::string test, double p_value, double threshold);

struct CheckTable {
  std::vector<CheckRow> rows;

  [[nodiscard]] bool all_pass() const;
  void add(CheckRow row) { rows.push_back(std::move(row)); }
  void append(const CheckTable& other);
};

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

/// RFC 4180 quoting when the field holds a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Columns test,statistic,threshold,pass.
std::string to_csv(const CheckTable& table);
nlohmann::json to_json(const CheckTable& table);

CheckTable from_machinery(const std::vector<MachineryRow>& rows);
std::string machinery_csv(const std::vector<MachineryRow>& rows);

/// Closed forms, quadrature oracle, symmetry, recurrence, Wronskian, monotonicity
/// and the Bessel equation residual on z in [0.1, 50].
CheckTable specfun_battery();

/// Normalization, reciprocity, weak limits, transforms, tilting, and the sampler
/// KS battery (20 laws, n draws each).
CheckTable dist_battery(Seed seed, std::size_t n = 100000);

/// Involution, Jacobian, product and psi identities at n log-uniform points in [1e-3, 1e3]^2.
CheckTable map_battery(const std::vector<MapParams>& params, Seed seed, std::size_t n = 10000);
std::vector<MapParams> default_map_params();

/// Matrix map battery over `pairs` random SPD pairs for each order in `orders`.
CheckTable matrix_battery(const MapParams& params, const std::vector<int>& orders, Seed seed, std::size_t pairs = 100);

/// Density transport on a 20 x 20 grid for five parameter points, F_dK and psi.
CheckTable transport_battery();

/// Monte Carlo extended Laplace transform at ten (law, s, sigma, theta) points, |z| <= 4.
CheckTable ext_laplace_battery(Seed seed, std::size_t n = 1000000);

}  // namespace gmy
