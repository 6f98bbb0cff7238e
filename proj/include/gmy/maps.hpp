#pragma once

// Scalar maps F_dK and psi on (0, inf)^2.

#include <array>

namespace gmy {

/// (alpha, beta) with alpha, beta >= 0, alpha != beta, not both zero.
struct MapParams {
  double alpha;
  double beta;

  MapParams(double alpha, double beta);
  friend bool operator==(const MapParams&, const MapParams&) = default;
};

struct PositivePair {
  double first;
  double second;

  PositivePair(double first, double second);
  friend bool operator==(const PositivePair&, const PositivePair&) = default;
};

/// (x, y) -> (y (b x y + 1) / (a x y + 1), x (a x y + 1) / (b x y + 1)).
PositivePair f_dk(const MapParams& p, const PositivePair& xy);

/// (a, b) -> ((1/b)(beta a + b)/(alpha a + b), (1/a)(beta a + b)/(alpha a + b)).
PositivePair psi(const MapParams& p, const PositivePair& ab);

/// (x, y) -> (x, 1/y); its own inverse.
PositivePair flip_second(const PositivePair& xy);

/// Relative residuals of s/t = a/b, t + alpha s = 1/a + beta/b and
/// b + alpha a = 1/s + beta/t for (s, t) = psi(a, b).
struct PsiResiduals {
  double quotient;
  double alpha;
  double beta;

  [[nodiscard]] double max() const;
};

PsiResiduals psi_identities(const MapParams& p, const PositivePair& ab);

enum class ScalarMap { FdK, Psi };

/// Central-difference Jacobian matrix, row i = d(output i), step 1e-6 max(1, |coordinate|).
std::array<double, 4> jacobian(const MapParams& p, const PositivePair& xy, ScalarMap which = ScalarMap::FdK);

double jacobian_det(const MapParams& p, const PositivePair& xy, ScalarMap which = ScalarMap::FdK);

double jacobian_abs(const MapParams& p, const PositivePair& xy, ScalarMap which = ScalarMap::FdK);

/// Largest relative coordinate error of map(map(xy)) against xy.
double involution_residual(const MapParams& p, const PositivePair& xy, ScalarMap which = ScalarMap::FdK);

}  // namespace gmy
