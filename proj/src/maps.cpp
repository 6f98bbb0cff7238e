#include "gmy/maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmy {

MapParams::MapParams(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
  if (!(std::isfinite(alpha) && std::isfinite(beta)) || alpha < 0 || beta < 0) {
    throw std::domain_error("MapParams: alpha and beta must be finite and >= 0");
  }
  if (alpha == beta) throw std::domain_error("MapParams: alpha must differ from beta");
}

PositivePair::PositivePair(double first_, double second_) : first(first_), second(second_) {
  if (!(first > 0 && second > 0 && std::isfinite(first) && std::isfinite(second))) {
    throw std::domain_error("PositivePair: coordinates must be finite and > 0");
  }
}

PositivePair f_dk(const MapParams& p, const PositivePair& xy) {
  const double x = xy.first;
  const double y = xy.second;
  const double xy_prod = x * y;
  if (p.beta == 0) {
    const double g = p.alpha * xy_prod + 1;
    return {y / g, x * g};
  }
  if (p.alpha == 0) {
    const double g = p.beta * xy_prod + 1;
    return {y * g, x / g};
  }
  const double r = (p.beta * xy_prod + 1) / (p.alpha * xy_prod + 1);
  return {y * r, x / r};
}

PositivePair flip_second(const PositivePair& xy) { return {xy.first, 1 / xy.second}; }

PositivePair psi(const MapParams& p, const PositivePair& ab) {
  const double a = ab.first;
  const double b = ab.second;
  const double r = (p.beta * a + b) / (p.alpha * a + b);
  return {r / b, r / a};
}

double PsiResiduals::max() const { return std::max({quotient, alpha, beta}); }

namespace {

double rel(double lhs, double rhs) { return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)); }

PositivePair apply(const MapParams& p, const PositivePair& xy, ScalarMap which) {
  return which == ScalarMap::FdK ? f_dk(p, xy) : psi(p, xy);
}

}  // namespace

PsiResiduals psi_identities(const MapParams& p, const PositivePair& ab) {
  const double a = ab.first;
  const double b = ab.second;
  const auto [s, t] = psi(p, ab);
  return {rel(s / t, a / b), rel(t + p.alpha * s, 1 / a + p.beta / b), rel(b + p.alpha * a, 1 / s + p.beta / t)};
}

std::array<double, 4> jacobian(const MapParams& p, const PositivePair& xy, ScalarMap which) {
  const double hx = 1e-6 * std::max(1.0, std::abs(xy.first));
  const double hy = 1e-6 * std::max(1.0, std::abs(xy.second));
  const auto xp = apply(p, {xy.first + hx, xy.second}, which);
  const auto xm = apply(p, {xy.first - hx, xy.second}, which);
  const auto yp = apply(p, {xy.first, xy.second + hy}, which);
  const auto ym = apply(p, {xy.first, xy.second - hy}, which);
  return {(xp.first - xm.first) / (2 * hx), (yp.first - ym.first) / (2 * hy), (xp.second - xm.second) / (2 * hx),
          (yp.second - ym.second) / (2 * hy)};
}

double jacobian_det(const MapParams& p, const PositivePair& xy, ScalarMap which) {
  const auto j = jacobian(p, xy, which);
  return j[0] * j[3] - j[1] * j[2];
}

double jacobian_abs(const MapParams& p, const PositivePair& xy, ScalarMap which) {
  return std::abs(jacobian_det(p, xy, which));
}

double involution_residual(const MapParams& p, const PositivePair& xy, ScalarMap which) {
  const auto back = apply(p, apply(p, xy, which), which);
  return std::max(rel(back.first, xy.first), rel(back.second, xy.second));
}

}  // namespace gmy
