#pragma once

// Closed-form Kibble-Zurek predictions for the complexity cumulants and the
// Lanczos coefficients.

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "kzk/errors.hpp"
#include "kzk/quadrature.hpp"

namespace kzk {

/// zeta(s) for s > 1: direct sum to N = 1000 plus Euler-Maclaurin tail.
inline double riemann_zeta(double s) {
  if (!(s > 1.0)) throw DomainError("riemann_zeta requires s > 1");
  constexpr int N = 1000;
  double head = 0.0;
  for (int n = N - 1; n >= 1; --n) head += std::pow(static_cast<double>(n), -s);
  const double n = N;
  const double tail = std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s) +
                      s * std::pow(n, -s - 1.0) / 12.0 -
                      s * (s + 1.0) * (s + 2.0) * std::pow(n, -s - 3.0) / 720.0;
  return head + tail;
}

/// C = zeta(3/2) / sqrt(128 pi^2)
inline double kz_constant() {
  return riemann_zeta(1.5) / std::sqrt(128.0 * std::numbers::pi * std::numbers::pi);
}

/// C = -(1/4 pi) int_0^inf ln(1 - exp(-2 pi x^2)) dx, evaluated by quadrature.
inline double kz_constant_by_quadrature() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  // x = u^2 on [0, 1] tames the logarithmic endpoint.
  auto near = [&](double u) {
    const double x = u * u;
    return -std::log(-std::expm1(-two_pi * x * x)) * 2.0 * u;
  };
  auto far = [&](double x) { return -std::log1p(-std::exp(-two_pi * x * x)); };
  const double head = integrate(near, 0.0, 1.0, 1e-14).value;
  const double tail = integrate(far, 1.0, 8.0, 1e-14).value;
  return (head + tail) / (4.0 * std::numbers::pi);
}

/// K_q ~ 2 C L tau^{-1/2}
inline double predicted_cumulant(double L, double tau) {
  if (!(L > 0.0) || !(tau > 0.0)) throw DomainError("predicted_cumulant: L and tau must be positive");
  return 2.0 * kz_constant() * L * std::pow(tau, -0.5);
}

/// b_n ~ prefactor sqrt(L) tau^{-1/4} sqrt(n)
inline double predicted_lanczos_scaling(int n, double L, double tau, double prefactor) {
  if (n < 1) throw DomainError("predicted_lanczos_scaling: n must be >= 1");
  if (!(L > 0.0) || !(tau > 0.0)) throw DomainError("predicted_lanczos_scaling: L and tau must be positive");
  return prefactor * std::sqrt(L) * std::pow(tau, -0.25) * std::sqrt(static_cast<double>(n));
}

/// b_n * tau^{1/4} / sqrt(L)
inline double rescaled_lanczos(double b, double L, double tau) {
  return b * std::pow(tau, 0.25) / std::sqrt(L);
}

namespace detail {

/// Shared factor arg[sqrt(s) cos T + i sqrt(1 - s cos^2 T)] / sqrt(1 - s cos^2 T).
inline double integral_kernel(double s, double cos_theta) {
  const double den = std::sqrt(1.0 - s * cos_theta * cos_theta);
  return std::arg(std::complex<double>(std::sqrt(s) * cos_theta, den)) / den;
}

inline void check_integral_args(double t, double tau) {
  if (!(tau > 0.0)) throw DomainError("integral: tau must be positive");
  if (t > 0.0) throw DomainError("integral: t must be <= 0");
}

}  // namespace detail

/// I(t, tau), integrated in s = 1 - exp(-x^2).
inline double integral_I(double t, double tau, double abs_tol = 1e-8) {
  detail::check_integral_args(t, tau);
  const double x = 1.0 + t / tau;
  const double c = std::cos(tau * x * x);
  auto f = [&](double s) {
    const double xs = std::sqrt(-std::log1p(-s));
    return detail::integral_kernel(s, c) / (2.0 * xs * std::sqrt(s));
  };
  return integrate(f, 0.0, 1.0, abs_tol).value;
}

/// I_2(t, tau), integrated in s = 1 - exp(-x^2).
inline double integral_I2(double t, double tau, double abs_tol = 1e-8) {
  detail::check_integral_args(t, tau);
  const double x = 1.0 + t / tau;
  const double c = std::cos(tau * x * x);
  auto f = [&](double s) {
    const double xs = std::sqrt(-std::log1p(-s));
    const double a = detail::integral_kernel(s, c);
    return a * a * (1.0 - s) / (2.0 * xs * s);
  };
  return integrate(f, 0.0, 1.0, abs_tol).value;
}

struct GeneralizedCriticalParams {
  int d = 1;
  int D = 0;
  double alpha = 0.5;
  double L = 1.0;
  double tau = 1.0;

  void validate() const {
    if (d < 1) throw DomainError("d must be >= 1");
    if (D < 0 || D >= d) throw DomainError("D must satisfy 0 <= D < d");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(L > 0.0) || !(tau > 0.0)) throw DomainError("L and tau must be positive");
  }
};

struct GeneralizedScaling {
  double cumulant = 0.0;
  double exponent = 0.0;
  /// Exponents of L and tau in b_n.
  std::pair<double, double> b_scaling_exponents{0.0, 0.0};
};

/// K ~ 2 C L^{d-D} tau^{-alpha(d-D)}; b_n ~ sqrt(n K).
inline GeneralizedScaling generalized_scaling(const GeneralizedCriticalParams& params, double C_user) {
  params.validate();
  if (!(C_user > 0.0)) throw DomainError("C must be positive");
  const double codim = params.d - params.D;
  GeneralizedScaling out;
  out.exponent = -params.alpha * codim;
  out.cumulant = 2.0 * C_user * std::pow(params.L, codim) * std::pow(params.tau, out.exponent);
  out.b_scaling_exponents = {0.5 * codim, 0.5 * out.exponent};
  return out;
}

}  // namespace kzk
