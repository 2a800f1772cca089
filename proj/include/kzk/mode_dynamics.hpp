#pragma once

// Single momentum mode of the transverse-field Ising chain driven linearly
// through its critical point. Units hbar = J = 1.
//
// The field is ramped down from g0 (paramagnet) to 0 (ferromagnet): at time
// t in [-g0*tau, 0] the field is g = -t/tau, so the quantity cos(k) + t/tau
// appearing in the asymptotic amplitudes equals cos(k) - g and each mode with
// k < pi/2 meets its avoided crossing at g = cos(k).
//
// Two-component vectors live in the fermionic (c_k, c_{-k}^dagger) basis
// unless stated otherwise. Diabatic unitaries are expressed in the
// instantaneous eigenbasis at the final time, ordered (excited, ground).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kzk/errors.hpp"
#include "kzk/mat2.hpp"

namespace kzk {

inline constexpr double kEulerGamma = 0.57721566490153286061;

struct ModeParams {
  double k = 0.0;     ///< momentum, 0 < k < pi
  double tau = 1.0;   ///< quench time
  double g0 = 5.0;    ///< initial field, > 1
  double t = 0.0;     ///< current time, -g0*tau <= t <= 0

  double field() const { return -t / tau; }
  double start_time() const { return -g0 * tau; }

  ModeParams at_time(double time) const {
    ModeParams p = *this;
    p.t = time;
    return p;
  }

  static ModeParams at_field(double k, double tau, double g0, double g) {
    return ModeParams{k, tau, g0, -g * tau};
  }

  /// Throws DomainError when any invariant is violated.
  void validate() const {
    if (!(k > 0.0 && k < std::numbers::pi))
      throw DomainError("mode momentum must lie in (0, pi), got " + std::to_string(k));
    if (!(tau > 0.0)) throw DomainError("quench time must be positive");
    if (!(g0 > 1.0)) throw DomainError("initial field must exceed the critical value 1");
    const double t0 = start_time();
    const double slack = 1e-12 * std::max(1.0, std::abs(t0));
    if (!(t >= t0 - slack && t <= slack))
      throw DomainError("time " + std::to_string(t) + " outside the drive window");
  }
};

/// Traceless Hermitian 2x2 matrix diag(-d, d) with (0,1) entry `o`.
struct Hermitian2 {
  double d = 0.0;
  cplx o{};

  Mat2 matrix() const { return Mat2{{-d, o, std::conj(o), d}}; }
};

/// Asymptotic Landau-Zener amplitudes of one mode.
struct ModeAmplitudes {
  double p = 0.0;      ///< excitation probability
  double omega = 0.0;  ///< phase of v
  double phi = 0.0;    ///< phase of u
  cplx u{};            ///< sqrt(1-p) e^{i phi}
  cplx v{};            ///< sqrt(p) e^{i omega}
};

struct Eigenbasis {
  Vec2 excited{};
  Vec2 ground{};
  double gap = 0.0;  ///< single-particle energy: eigenvalues are +gap and -gap
};

/// H_k = 2[(g - cos k) sigma_z + sin k sigma_x].
inline Hermitian2 hamiltonian_mode(const ModeParams& params) {
  params.validate();
  const double g = params.field();
  return Hermitian2{2.0 * (std::cos(params.k) - g), cplx(2.0 * std::sin(params.k), 0.0)};
}

/// Real eigenvectors continuous along the drive. Real eigenvectors of a real
/// symmetric family carry zero Berry connection, so this is the
/// parallel-transport gauge. At g = 0 the ground state is
/// (-cos(k/2), sin(k/2)).
inline Eigenbasis instantaneous_eigenbasis(const ModeParams& params) {
  params.validate();
  const double z = params.field() - std::cos(params.k);
  const double x = std::sin(params.k);
  const double beta = std::atan2(x, z);  // in (0, pi) since x > 0
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  return Eigenbasis{{c, s}, {-s, c}, 2.0 * std::hypot(z, x)};
}

namespace detail {

inline Mat2 mode_generator(double k, double tau, double t) {
  // -i H(t)
  const double z = 2.0 * (-t / tau - std::cos(k));
  const double x = 2.0 * std::sin(k);
  const cplx mi(0.0, -1.0);
  return Mat2{{mi * z, mi * x, mi * x, -mi * z}};
}

inline double scaled_error(const Mat2& err, const Mat2& y0, const Mat2& y1, double tol) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double sc = tol + tol * std::max(std::abs(y0.m[i]), std::abs(y1.m[i]));
    const double re = err.m[i].real() / sc;
    const double im = err.m[i].imag() / sc;
    acc += re * re + im * im;
  }
  return std::sqrt(acc / 8.0);
}

/// Normalized eigenvector of a traceless Hermitian 2x2 matrix for eigenvalue
/// `lambda`, with whatever phase the formula produces.
inline Vec2 hermitian_eigenvector(const Mat2& h, double lambda) {
  const Vec2 r0{h(0, 1), cplx(lambda) - h(0, 0)};
  const Vec2 r1{cplx(lambda) - h(1, 1), h(1, 0)};
  const Vec2& v = norm(r0) >= norm(r1) ? r0 : r1;
  const double n = norm(v);
  return {v[0] / n, v[1] / n};
}

inline Vec2 align_phase(const Vec2& v, const Vec2& previous) {
  const cplx ov = dot(previous, v);
  const double mag = std::abs(ov);
  if (mag == 0.0) return v;
  const cplx ph = std::conj(ov) / mag;
  return {v[0] * ph, v[1] * ph};
}

}  // namespace detail

/// Local error target per step relative to the requested tolerance. Global
/// error grows roughly linearly with the number of accepted steps; this factor
/// keeps the accumulated error of a full sweep below 10 tol.
inline constexpr double kLocalToleranceFactor = 1e-3;

/// Time-ordered propagator U_k(t_end, t_start) of i d/dt psi = H_k(t) psi,
/// integrated with the Dormand-Prince 5(4) embedded pair. The same tolerance
/// serves as relative and absolute tolerance. No re-unitarization is applied.
inline Unitary2 propagate_mode(const ModeParams& params_start, double t_end, double tol) {
  params_start.validate();
  params_start.at_time(t_end).validate();
  const double t_start = params_start.t;
  if (t_end < t_start) throw PreconditionError("propagate_mode requires t_start <= t_end");
  if (!(tol >= 1e-14 && tol <= 1e-6)) throw PreconditionError("ode tolerance outside [1e-14, 1e-6]");

  Mat2 y = Mat2::identity();
  if (t_end == t_start) return y;

  // Dormand-Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double k = params_start.k;
  const double tau = params_start.tau;
  auto rhs = [&](double t, const Mat2& u) { return detail::mode_generator(k, tau, t) * u; };

  const double local_tol = std::max(tol * kLocalToleranceFactor, 2e-16);
  double t = t_start;
  const double span = t_end - t_start;
  const double h_norm = 2.0 * std::hypot(std::max(params_start.g0, 1.0) + 1.0, 1.0);
  double h = std::min(span, 0.1 * std::pow(local_tol, 0.2) / h_norm);
  Mat2 k1 = rhs(t, y);
  constexpr long kMaxSteps = 200'000'000;

  for (long step = 0; t < t_end; ++step) {
    if (step >= kMaxSteps) throw IntegrationError("propagate_mode exceeded step budget", t);
    if (t + h > t_end) h = t_end - t;
    if (h <= 1e-15 * std::max(1.0, std::abs(t)))
      throw IntegrationError("propagate_mode step size underflow", t);

    const Mat2 k2 = rhs(t + c2 * h, y + cplx(h * a21) * k1);
    const Mat2 k3 = rhs(t + c3 * h, y + cplx(h * a31) * k1 + cplx(h * a32) * k2);
    const Mat2 k4 =
        rhs(t + c4 * h, y + cplx(h * a41) * k1 + cplx(h * a42) * k2 + cplx(h * a43) * k3);
    const Mat2 k5 = rhs(t + c5 * h, y + cplx(h * a51) * k1 + cplx(h * a52) * k2 +
                                        cplx(h * a53) * k3 + cplx(h * a54) * k4);
    const Mat2 k6 = rhs(t + h, y + cplx(h * a61) * k1 + cplx(h * a62) * k2 + cplx(h * a63) * k3 +
                                   cplx(h * a64) * k4 + cplx(h * a65) * k5);
    const Mat2 y_new = y + cplx(h * b1) * k1 + cplx(h * b3) * k3 + cplx(h * b4) * k4 +
                       cplx(h * b5) * k5 + cplx(h * b6) * k6;
    const Mat2 k7 = rhs(t + h, y_new);
    const Mat2 err = cplx(h * e1) * k1 + cplx(h * e3) * k3 + cplx(h * e4) * k4 +
                     cplx(h * e5) * k5 + cplx(h * e6) * k6 + cplx(h * e7) * k7;

    const double e = detail::scaled_error(err, y, y_new, local_tol);
    if (e <= 1.0) {
      t = (h == t_end - t) ? t_end : t + h;
      y = y_new;
      k1 = k7;
    }
    const double factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
    h *= e <= 1.0 ? factor : std::min(factor, 1.0);
  }
  return y;
}

/// Adiabatic transport between two times together with the transported frames.
struct AdiabaticTransport {
  Unitary2 u_ad;       ///< sum_n |n(t_end)><n(t_start)|
  Eigenbasis start;
  Eigenbasis end;
};

/// Discrete parallel transport of the instantaneous eigenvectors on a uniform
/// grid of `n_steps` intervals. Each new eigenvector is rephased so its overlap
/// with the previous one is real and positive.
inline AdiabaticTransport adiabatic_transport(const ModeParams& params_start, double t_end,
                                              int n_steps) {
  if (n_steps < 100) throw PreconditionError("adiabatic transport needs at least 100 steps");
  params_start.at_time(t_end).validate();
  const Eigenbasis first = instantaneous_eigenbasis(params_start);
  Vec2 exc = first.excited;
  Vec2 gnd = first.ground;
  double gap = first.gap;
  const double t_start = params_start.t;
  if (t_end != t_start) {
    for (int i = 1; i <= n_steps; ++i) {
      const double t = i == n_steps ? t_end : t_start + (t_end - t_start) * i / n_steps;
      const Hermitian2 h = hamiltonian_mode(params_start.at_time(t));
      const Mat2 hm = h.matrix();
      gap = std::hypot(h.d, std::abs(h.o));
      exc = detail::align_phase(detail::hermitian_eigenvector(hm, gap), exc);
      gnd = detail::align_phase(detail::hermitian_eigenvector(hm, -gap), gnd);
    }
  }
  const Mat2 v_start = Mat2::from_columns(first.excited, first.ground);
  const Mat2 v_end = Mat2::from_columns(exc, gnd);
  return AdiabaticTransport{v_end * v_start.adjoint(), first, Eigenbasis{exc, gnd, gap}};
}

inline Unitary2 adiabatic_unitary(const ModeParams& params_start, double t_end, int n_steps) {
  return adiabatic_transport(params_start, t_end, n_steps).u_ad;
}

inline double landau_zener_prob(double k, double tau) {
  const double s = std::sin(k);
  return std::exp(-2.0 * std::numbers::pi * tau * s * s);
}

/// Leading-order amplitudes u_k, v_k at time `params.t`.
inline ModeAmplitudes closed_form_amplitudes(const ModeParams& params) {
  params.validate();
  const double x = std::cos(params.k) + params.t / params.tau;
  if (!(x > 0.0))
    throw DomainError("closed-form amplitudes need cos(k) + t/tau > 0 (mode not yet past its crossing)");
  const double tau = params.tau;
  const double s2 = std::sin(params.k) * std::sin(params.k);
  const double p = landau_zener_prob(params.k, tau);
  const double lg = std::log(2.0 * std::sqrt(tau) * x);
  const double phi = tau * x * x + tau * s2 * lg + kEulerGamma * tau * s2;
  const double omega = 0.75 * std::numbers::pi - tau * x * x - tau * s2 * lg;
  return ModeAmplitudes{p, omega, phi, std::polar(std::sqrt(1.0 - p), phi),
                        std::polar(std::sqrt(p), omega)};
}

enum class Method { exact, closed_form };

inline constexpr int kDefaultTransportSteps = 1024;

/// Diabatic unitary U(t) U_ad(t)^dagger in the final eigenbasis (excited,
/// ground), normalized to unit determinant. Column 1 is the evolved state of
/// the instantaneous ground state.
inline Unitary2 diabatic_unitary(const ModeParams& params, Method method, double tol,
                                 int transport_steps = kDefaultTransportSteps) {
  params.validate();
  if (method == Method::closed_form) {
    const ModeAmplitudes amp = closed_form_amplitudes(params);
    const cplx a = -amp.u;
    const cplx b = amp.v;
    return Mat2{{std::conj(a), b, -std::conj(b), a}};
  }
  const ModeParams start = params.at_time(params.start_time());
  const Unitary2 u = propagate_mode(start, params.t, tol);
  const AdiabaticTransport tr = adiabatic_transport(start, params.t, transport_steps);
  const Mat2 frame = Mat2::from_columns(tr.end.excited, tr.end.ground);
  Mat2 w = frame.adjoint() * (u * tr.u_ad.adjoint()) * frame;
  // The exact propagator already has det = 1 up to integration error; this
  // principal root is therefore always the one continuous in tau.
  const cplx root = std::sqrt(w.det());
  return cplx(1.0) / root * w;
}

}  // namespace kzk
