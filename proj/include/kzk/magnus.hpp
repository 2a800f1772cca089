#pragma once

// Diabatic Magnus operator: the Hermitian generator Omega with
// U = exp(-i Omega) for each mode, and its direct sum over the kept momenta.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "kzk/errors.hpp"
#include "kzk/mat2.hpp"
#include "kzk/mode_dynamics.hpp"
#include "kzk/parallel.hpp"

namespace kzk {

/// Traceless Hermitian block [[d, o], [conj(o), -d]] in the (excited, ground) basis.
struct MagnusMode {
  double d = 0.0;
  cplx o{};

  Mat2 matrix() const { return Mat2{{d, o, std::conj(o), -d}}; }
  /// Rotation angle: the eigenvalues are +angle and -angle.
  double angle() const { return std::hypot(d, std::abs(o)); }
};

inline constexpr double kDetTolerance = 1e-10;
inline constexpr double kBranchMargin = 1e-9;

/// exp(-i Omega) = cos(theta) I - i sin(theta)/theta Omega.
inline Unitary2 su2_exp(const MagnusMode& omega) {
  const double theta = omega.angle();
  const double sinc = theta == 0.0 ? 1.0 : std::sin(theta) / theta;
  const cplx c(std::cos(theta), 0.0);
  const cplx s(0.0, -sinc);
  return Mat2{{c + s * omega.d, s * omega.o, s * std::conj(omega.o), c - s * omega.d}};
}

/// Principal logarithm Omega = i log(U) of a special unitary, with rotation
/// angle in [0, pi).
inline MagnusMode su2_log(const Unitary2& u) {
  const cplx det = u.det();
  if (std::abs(det - 1.0) > kDetTolerance)
    throw PreconditionError("su2_log requires det(U) = 1, |det - 1| = " +
                            std::to_string(std::abs(det - 1.0)));
  // U = cos(theta) I - i sin(theta) n.sigma; average the redundant entries.
  const double c = 0.5 * (u(0, 0) + u(1, 1)).real();
  const double sz = 0.5 * (u(1, 1).imag() - u(0, 0).imag());
  const double sx = -0.5 * (u(0, 1).imag() + u(1, 0).imag());
  const double sy = 0.5 * (u(1, 0).real() - u(0, 1).real());
  const double s = std::sqrt(sx * sx + sy * sy + sz * sz);
  const double theta = std::atan2(s, c);
  if (std::numbers::pi - theta < kBranchMargin)
    throw BranchError("su2_log: rotation angle within 1e-9 of pi, axis ill-conditioned");
  const double scale = s == 0.0 ? 1.0 : theta / s;
  return MagnusMode{scale * sz, cplx(scale * sx, -scale * sy)};
}

/// Closed-form leading-order Magnus block built from p_k and the common phase
/// Theta = tau (1 + t/tau)^2.
inline MagnusMode magnus_leading_order(const ModeParams& params) {
  params.validate();
  const double p = landau_zener_prob(params.k, params.tau);
  const double x = 1.0 + params.t / params.tau;
  const double theta = params.tau * x * x;
  const double cs = std::cos(theta);
  const double denom = std::sqrt(1.0 - p * cs * cs);
  const double arg = std::atan2(denom, std::sqrt(p) * cs);
  const double ratio = arg / denom;
  const double d = -ratio * std::sqrt(1.0 - p) * std::sin(theta);
  const cplx o = cplx(0.0, -ratio * std::sqrt(p)) * std::polar(1.0, theta);
  return MagnusMode{d, o};
}

/// Direct sum of per-mode Magnus blocks. Mode j acts on bit j of a
/// configuration index.
struct ManyBodyMagnus {
  std::vector<MagnusMode> modes;
  std::vector<double> momenta;
  std::vector<Unitary2> sources;  ///< per-mode diabatic unitaries, when assembled from them
  int L = 0;
  int L_eff = 0;
  double tau = 0.0;
  double t = 0.0;

  int size() const { return static_cast<int>(modes.size()); }

  /// Scale estimate sum_k (|d_k| + |o_k|).
  double norm_estimate() const {
    double acc = 0.0;
    for (const auto& m : modes) acc += std::abs(m.d) + std::abs(m.o);
    return acc;
  }

  /// Operator from arbitrary blocks; momenta are placeholders 1..M.
  static ManyBodyMagnus from_modes(std::vector<MagnusMode> blocks) {
    ManyBodyMagnus out;
    out.momenta.resize(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j) out.momenta[j] = static_cast<double>(j + 1);
    out.L = out.L_eff = 2 * static_cast<int>(blocks.size());
    out.modes = std::move(blocks);
    return out;
  }
};

/// The `count` smallest positive momenta pi(2j-1)/L of a periodic chain.
inline std::vector<double> chain_momenta(int L, int count) {
  std::vector<double> ks(static_cast<std::size_t>(count));
  for (int j = 1; j <= count; ++j) ks[j - 1] = std::numbers::pi * (2.0 * j - 1.0) / L;
  return ks;
}

struct AssemblyOptions {
  Method method = Method::exact;
  double g0 = 5.0;
  double ode_tol = 1e-10;
  int threads = 1;
};

/// Keeps the M = L_eff/2 smallest positive momenta of the full L-site chain
/// and builds one Magnus block per momentum.
inline ManyBodyMagnus assemble_many_body(int L, int L_eff, double tau, double t,
                                         const AssemblyOptions& opts = {}) {
  if (L <= 0 || L % 2 != 0) throw DomainError("L must be a positive even integer");
  if (L_eff < 2 || L_eff % 2 != 0 || L_eff > L)
    throw DomainError("L_eff must be even with 2 <= L_eff <= L");
  const int M = L_eff / 2;
  ManyBodyMagnus out;
  out.L = L;
  out.L_eff = L_eff;
  out.tau = tau;
  out.t = t;
  out.momenta = chain_momenta(L, M);
  out.modes.resize(static_cast<std::size_t>(M));
  out.sources.resize(static_cast<std::size_t>(M));
  for (double k : out.momenta) ModeParams{k, tau, opts.g0, t}.validate();

  parallel_for(static_cast<std::size_t>(M), opts.threads, [&](std::size_t j) {
    const ModeParams mp{out.momenta[j], tau, opts.g0, t};
    if (opts.method == Method::exact) {
      out.sources[j] = diabatic_unitary(mp, Method::exact, opts.ode_tol);
      out.modes[j] = su2_log(out.sources[j]);
    } else {
      out.modes[j] = magnus_leading_order(mp);
      out.sources[j] = su2_exp(out.modes[j]);
    }
  });
  return out;
}

}  // namespace kzk
