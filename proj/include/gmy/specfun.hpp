#pragma once

// Modified Bessel functions I_nu, K_nu of real order on (0, inf), and log-Gamma.
//
// The kernels are templated on the floating type so the same algorithm can be
// run in extended precision (long double) when a check needs headroom below
// double round-off. All routines work in log space internally; the plain
// variants exponentiate at the end and signal overflow instead of returning inf.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gmy {

namespace detail {

// Taylor coefficients of 1/Gamma(1 + mu) around mu = 0.
inline constexpr long double kRecipGamma1p[] = {
    1.0L,
    0.5772156649015328606065121L,
    -0.6558780715202538810770195L,
    -0.04200263503409523552900393L,
    0.1665386113822914895017008L,
    -0.0421977345555443367482083L,
    -0.009621971527876973562114922L,
    0.00721894324666309954239501L,
    -0.001165167591859065112113971L,
    -0.00021524167411495097281573L,
    0.0001280502823881161861531986L,
    -0.00002013485478078823865568939L,
    -0.000001250493482142670657345359L,
    0.00000113302723198169588237413L,
    -0.0000002056338416977607103450154L,
    6.116095104481415817862499e-9L,
    5.002007644469222930055665e-9L,
    -1.181274570487020144588127e-9L,
    1.04342671169110051049154e-10L,
    7.782263439905071254049937e-12L,
    -3.696805618642205708187816e-12L,
    5.100370287454475979015481e-13L,
    -2.05832605356650678322243e-14L,
    -5.348122539423017982370017e-15L,
    1.226778628238260790158894e-15L,
    -1.181259301697458769513765e-16L,
    1.186692254751600332579777e-18L,
    1.412380655318031781555804e-18L,
    -2.298745684435370206592479e-19L,
    1.714406321927337433383963e-20L,
    1.337351730493693114864781e-22L,
};

// Even and odd parts of 1/Gamma(1 + mu) for |mu| <= 1/2:
//   even(mu) = (1/Gamma(1+mu) + 1/Gamma(1-mu)) / 2
//   odd(mu)  = (1/Gamma(1+mu) - 1/Gamma(1-mu)) / (2 mu)
template <std::floating_point T>
void recip_gamma_parts(T mu, T& even, T& odd) {
  constexpr int n = static_cast<int>(std::size(kRecipGamma1p));
  const T mu2 = mu * mu;
  even = 0;
  odd = 0;
  for (int k = (n - 1) & ~1; k >= 0; k -= 2) even = even * mu2 + static_cast<T>(kRecipGamma1p[k]);
  for (int k = ((n - 2) | 1); k >= 1; k -= 2) odd = odd * mu2 + static_cast<T>(kRecipGamma1p[k]);
}

template <std::floating_point T>
void check_bessel_args(T nu, T z, const char* who) {
  if (!std::isfinite(nu) || !std::isfinite(z) || !(z > 0)) {
    throw std::domain_error(std::string(who) + ": requires finite order and z > 0");
  }
}

// sin(pi v) with exact zeros at the integers.
template <std::floating_point T>
T sin_pi(T v) {
  T r = std::fmod(v, T(2));
  if (r == 0 || r == 1 || r == -1) return T(0);
  return std::sin(std::numbers::pi_v<T> * r);
}

}  // namespace detail

/// log K_nu(z) together with the order ratio K_{nu+1}(z) / K_nu(z).
template <std::floating_point T>
struct BesselKLog {
  T log_value;
  T ratio;
};

/// Temme's series (z < 2) or Steed's continued fraction (z >= 2) at the reduced
/// order |mu| <= 1/2, then forward recurrence in the order, carried as ratios.
/// Requires nu >= 0.
template <std::floating_point T>
BesselKLog<T> bessel_k_log_ratio(T nu, T z) {
  constexpr T eps = std::numeric_limits<T>::epsilon();
  constexpr T pi = std::numbers::pi_v<T>;
  constexpr int max_iter = 100000;

  const int nl = static_cast<int>(nu + T(0.5));
  const T mu = nu - nl;
  const T mu2 = mu * mu;

  T log_kmu;
  T ratio;
  if (z < 2) {
    const T half = z / 2;
    const T pimu = pi * mu;
    const T fact = std::abs(pimu) < eps ? T(1) : pimu / std::sin(pimu);
    T d = -std::log(half);
    T e = mu * d;
    const T fact2 = std::abs(e) < eps ? T(1) : std::sinh(e) / e;
    T even, odd;
    detail::recip_gamma_parts(mu, even, odd);
    const T gam1 = -odd;
    const T gam2 = even;
    const T gampl = even + mu * odd;  // 1/Gamma(1+mu)
    const T gammi = even - mu * odd;  // 1/Gamma(1-mu)
    T ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    T sum = ff;
    e = std::exp(e);
    T p = T(0.5) * e / gampl;
    T q = T(0.5) / (e * gammi);
    T c = 1;
    d = half * half;
    T sum1 = p;
    for (int i = 1; i <= max_iter; ++i) {
      const T fi = static_cast<T>(i);
      ff = (fi * ff + p + q) / (fi * fi - mu2);
      c *= d / fi;
      p /= fi - mu;
      q /= fi + mu;
      const T del = c * ff;
      sum += del;
      sum1 += c * (p - fi * ff);
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    log_kmu = std::log(sum);
    ratio = sum1 * (2 / z) / sum;
  } else {
    T b = 2 * (1 + z);
    T d = 1 / b;
    T delh = d;
    T h = d;
    T q1 = 0;
    T q2 = 1;
    const T a1 = T(0.25) - mu2;
    T q = a1;
    T c = a1;
    T a = -a1;
    T s = 1 + q * delh;
    for (int i = 1; i <= max_iter; ++i) {
      a -= 2 * i;
      c = -a * c / (i + T(1));
      const T qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2;
      d = 1 / (b + a * d);
      delh = (b * d - 1) * delh;
      h += delh;
      const T dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < eps) break;
    }
    h = a1 * h;
    log_kmu = T(0.5) * std::log(pi / (2 * z)) - z - std::log(s);
    ratio = (mu + z + T(0.5) - h) / z;
  }

  T log_k = log_kmu;
  for (int i = 1; i <= nl; ++i) {
    log_k += std::log(ratio);
    ratio = 2 * (mu + i) / z + 1 / ratio;
  }
  return {log_k, ratio};
}

/// log K_nu(z); K_{-nu} = K_nu.
template <std::floating_point T>
T bessel_k_log(T nu, T z) {
  detail::check_bessel_args(nu, z, "bessel_k_log");
  return bessel_k_log_ratio(std::abs(nu), z).log_value;
}

template <std::floating_point T>
T bessel_k(T nu, T z) {
  const T lk = bessel_k_log(nu, z);
  if (lk > std::log(std::numeric_limits<T>::max())) {
    throw std::overflow_error("bessel_k: result overflows, use bessel_k_log");
  }
  return std::exp(lk);
}

/// I_{nu+1}(z) / I_nu(z) by the Gauss continued fraction (modified Lentz), nu >= 0.
template <std::floating_point T>
T bessel_i_ratio(T nu, T z) {
  constexpr T eps = std::numeric_limits<T>::epsilon();
  constexpr T tiny = std::numeric_limits<T>::min() / eps;
  T f = 2 * (nu + 1) / z;
  if (f == 0) f = tiny;
  T c = f;
  T d = 0;
  for (int k = 2; k < 1000000; ++k) {
    const T b = 2 * (nu + k) / z;
    d = b + d;
    if (d == 0) d = tiny;
    d = 1 / d;
    c = b + 1 / c;
    if (c == 0) c = tiny;
    const T delta = c * d;
    f *= delta;
    if (std::abs(delta - 1) < eps) break;
  }
  return 1 / f;
}

namespace detail {

// log I_nu(z) for nu >= 0, from the Wronskian I_nu K_{nu+1} + I_{nu+1} K_nu = 1/z.
template <std::floating_point T>
T bessel_i_log_nonneg(T nu, T z) {
  const auto k = bessel_k_log_ratio(nu, z);
  return -std::log(z) - k.log_value - std::log(bessel_i_ratio(nu, z) + k.ratio);
}

}  // namespace detail

/// I_nu(z). Negative non-integer orders use I_{-nu} = I_nu + (2/pi) sin(nu pi) K_nu
/// and may be negative.
template <std::floating_point T>
T bessel_i(T nu, T z) {
  detail::check_bessel_args(nu, z, "bessel_i");
  const T a = std::abs(nu);
  const T li = detail::bessel_i_log_nonneg(a, z);
  const T log_max = std::log(std::numeric_limits<T>::max());
  if (li > log_max) {
    throw std::overflow_error("bessel_i: result overflows, use bessel_i_log");
  }
  const T i_pos = std::exp(li);
  const T s = detail::sin_pi(a);
  if (nu >= 0 || s == 0) return i_pos;
  const T lk = bessel_k_log_ratio(a, z).log_value;
  if (lk > log_max) throw std::overflow_error("bessel_i: reflection term overflows");
  return i_pos + 2 / std::numbers::pi_v<T> * s * std::exp(lk);
}

/// log I_nu(z). Defined for nu >= 0, integer nu, and negative orders where I_nu(z) > 0.
template <std::floating_point T>
T bessel_i_log(T nu, T z) {
  detail::check_bessel_args(nu, z, "bessel_i_log");
  const T a = std::abs(nu);
  const T li = detail::bessel_i_log_nonneg(a, z);
  const T s = detail::sin_pi(a);
  if (nu >= 0 || s == 0) return li;
  // I_{-a} = I_a (1 + (2/pi) s K_a / I_a)
  const T lk = bessel_k_log_ratio(a, z).log_value;
  const T w = 2 / std::numbers::pi_v<T> * s * std::exp(lk - li);
  if (!(1 + w > 0)) throw std::domain_error("bessel_i_log: I_nu(z) is not positive here");
  return li + std::log1p(w);
}

/// K_nu(z) = (1/2) (z/2)^nu * int_0^inf t^(-nu-1) exp(-t - z^2/(4t)) dt, evaluated by the
/// trapezoidal rule after t = e^u, where the integrand decays doubly exponentially
/// in both directions. Independent of the series/continued-fraction path above; used
/// as a cross-check. Returns log K_nu(z).
template <std::floating_point T>
T bessel_k_log_integral(T nu, T z) {
  detail::check_bessel_args(nu, z, "bessel_k_log_integral");
  const T c = z * z / 4;
  // Peak of phi(u) = -nu u - e^u - c e^{-u}: e^u solves t^2 + nu t - c = 0.
  const T root = std::sqrt(nu * nu + 4 * c);
  const T t_star = nu > 0 ? 2 * c / (nu + root) : (root - nu) / 2;
  const T u_star = std::log(t_star);
  auto phi = [&](T u) { return -nu * u - std::exp(u) - c * std::exp(-u); };
  const T phi_max = phi(u_star);
  // the plateau between e^u ~ c and e^u ~ 1 has edges of unit scale in u
  const T width = std::min(T(1), 1 / std::sqrt(t_star + c / t_star));
  const T h = width / 12;
  constexpr T cutoff = 80;
  T sum = 1;
  for (int dir : {-1, 1}) {
    for (long k = 1;; ++k) {
      const T term = std::exp(phi(u_star + dir * k * h) - phi_max);
      sum += term;
      if (term < std::exp(-cutoff) && k > 8) break;
    }
  }
  return nu * std::log(z / 2) + phi_max + std::log(h * sum / 2);
}

/// log Gamma(x) for x > 0 (reentrant).
template <std::floating_point T>
T log_gamma(T x) {
  if (!(x > 0) || !std::isfinite(x)) throw std::domain_error("log_gamma: requires finite x > 0");
#if defined(__GLIBC__)
  int sign = 0;
  if constexpr (std::is_same_v<T, float>) {
    return ::lgammaf_r(x, &sign);
  } else if constexpr (std::is_same_v<T, double>) {
    return ::lgamma_r(x, &sign);
  } else {
    return ::lgammal_r(x, &sign);
  }
#else
  return std::lgamma(x);
#endif
}

}  // namespace gmy
