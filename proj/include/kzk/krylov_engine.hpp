#pragma once

// Matrix-free many-body linear algebra over the 2^M configurations of M
// independent modes. Bit j of an index is the occupation of mode j
// (1 = excited pair, 0 = ground); index 0 is the all-ground configuration.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kzk/errors.hpp"
#include "kzk/magnus.hpp"
#include "kzk/mat2.hpp"
#include "kzk/mode_dynamics.hpp"
#include "kzk/parallel.hpp"

namespace kzk {

inline constexpr int kMaxModes = 28;

class StateVector {
 public:
  explicit StateVector(int modes) : modes_(modes) {
    if (modes < 1 || modes > kMaxModes)
      throw PreconditionError("state vector supports 1..28 modes, got " + std::to_string(modes));
    amps_.assign(std::size_t{1} << modes, cplx{});
  }

  int modes() const { return modes_; }
  std::size_t size() const { return amps_.size(); }
  std::size_t bytes() const { return amps_.size() * sizeof(cplx); }

  cplx& operator[](std::size_t i) { return amps_[i]; }
  const cplx& operator[](std::size_t i) const { return amps_[i]; }

  std::span<cplx> amplitudes() { return amps_; }
  std::span<const cplx> amplitudes() const { return amps_; }

 private:
  int modes_;
  std::vector<cplx> amps_;
};

/// <x|y> with fixed-order pairwise summation.
inline cplx inner(const StateVector& x, const StateVector& y) {
  if (x.size() != y.size()) throw PreconditionError("inner product dimension mismatch");
  return pairwise_sum<cplx>(0, x.size(), [&](std::size_t i) { return std::conj(x[i]) * y[i]; });
}

inline double norm(const StateVector& x) {
  return std::sqrt(pairwise_sum<double>(0, x.size(), [&](std::size_t i) { return std::norm(x[i]); }));
}

/// y += alpha x
inline void axpy(cplx alpha, const StateVector& x, StateVector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(StateVector& x, cplx s) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s;
}

inline StateVector ground_state(int M) {
  StateVector psi(M);
  psi[0] = 1.0;
  return psi;
}

/// out = sum_k Omega_k in, Omega_k acting on bit k. Each output entry is
/// accumulated over modes in a fixed order, so the result does not depend on
/// `threads`.
inline void apply_operator(const ManyBodyMagnus& omega, const StateVector& in, StateVector& out,
                           int threads = 1) {
  const int M = omega.size();
  if (in.modes() != M || out.modes() != M)
    throw PreconditionError("apply_operator: state has " + std::to_string(in.modes()) +
                            " modes, operator has " + std::to_string(M));
  std::vector<double> d(M);
  std::vector<cplx> up(M), down(M);
  double d_total = 0.0;
  for (int j = 0; j < M; ++j) {
    d[j] = omega.modes[j].d;
    up[j] = omega.modes[j].o;               // ground -> excited
    down[j] = std::conj(omega.modes[j].o);  // excited -> ground
    d_total += d[j];
  }
  constexpr std::size_t kChunk = 4096;
  const std::size_t n = in.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t hi = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < hi; ++i) {
      double diag = -d_total;
      cplx acc{};
      for (int j = 0; j < M; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        if (i & bit) {
          diag += 2.0 * d[j];
          acc += up[j] * in[i ^ bit];
        } else {
          acc += down[j] * in[i ^ bit];
        }
      }
      out[i] = diag * in[i] + acc;
    }
  });
}

inline StateVector apply_operator(const ManyBodyMagnus& omega, const StateVector& in,
                                  int threads = 1) {
  StateVector out(in.modes());
  apply_operator(omega, in, out, threads);
  return out;
}

/// Product state with per-mode (excited, ground) amplitudes.
inline StateVector product_state(std::span<const Vec2> mode_amps) {
  const int M = static_cast<int>(mode_amps.size());
  StateVector psi(M);
  psi[0] = 1.0;
  for (int j = 0; j < M; ++j) {
    const std::size_t half = std::size_t{1} << j;
    for (std::size_t i = 0; i < half; ++i) {
      psi[i + half] = psi[i] * mode_amps[j][0];
      psi[i] = psi[i] * mode_amps[j][1];
    }
  }
  return psi;
}

/// prod_k (v_k, -u_k): leading-order evolved state at the final time.
inline StateVector time_evolved_state(std::span<const ModeAmplitudes> amps) {
  std::vector<Vec2> per_mode;
  per_mode.reserve(amps.size());
  for (const auto& a : amps) per_mode.push_back({a.v, -a.u});
  return product_state(per_mode);
}

/// exp(-i Omega) applied to the all-ground state; exact for a direct sum.
inline StateVector time_evolved_state_exact(const ManyBodyMagnus& omega) {
  std::vector<Vec2> per_mode;
  per_mode.reserve(omega.modes.size());
  for (const auto& m : omega.modes) {
    const Unitary2 e = su2_exp(m);
    per_mode.push_back({e(0, 1), e(1, 1)});
  }
  return product_state(per_mode);
}

/// Ordered Krylov basis held in memory up to a byte budget; later vectors are
/// written to `spill_dir` as K{n}.vec (little-endian float64 re/im pairs) with
/// a K{n}.json sidecar. Spill files are removed when the basis is destroyed.
class KrylovBasis {
 public:
  KrylovBasis() = default;
  KrylovBasis(int modes, std::size_t memory_budget_bytes, std::filesystem::path spill_dir)
      : modes_(modes), budget_(memory_budget_bytes), spill_dir_(std::move(spill_dir)) {}

  KrylovBasis(const KrylovBasis&) = delete;
  KrylovBasis& operator=(const KrylovBasis&) = delete;
  KrylovBasis(KrylovBasis&& other) noexcept { *this = std::move(other); }
  KrylovBasis& operator=(KrylovBasis&& other) noexcept {
    if (this != &other) {
      remove_spill_files();
      modes_ = other.modes_;
      budget_ = other.budget_;
      spill_dir_ = std::move(other.spill_dir_);
      memory_ = std::move(other.memory_);
      spilled_ = std::move(other.spilled_);
      other.spilled_.clear();
      other.memory_.clear();
    }
    return *this;
  }
  ~KrylovBasis() { remove_spill_files(); }

  std::size_t size() const { return memory_.size() + spilled_.size(); }
  std::size_t in_memory() const { return memory_.size(); }
  std::size_t spilled() const { return spilled_.size(); }
  const std::vector<std::filesystem::path>& spill_files() const { return spilled_; }

  void push_back(StateVector v) {
    if (v.modes() != modes_) throw PreconditionError("basis vector has wrong dimension");
    const std::size_t need = (memory_.size() + 1) * v.bytes();
    if (spilled_.empty() && need <= budget_) {
      memory_.push_back(std::move(v));
      return;
    }
    write_spill(v, size());
  }

  /// Reference to vector n; spilled vectors are loaded into `scratch`.
  const StateVector& view(std::size_t n, StateVector& scratch) const {
    if (n < memory_.size()) return memory_[n];
    read_spill(spilled_.at(n - memory_.size()), scratch);
    return scratch;
  }

  StateVector at(std::size_t n) const {
    StateVector scratch(modes_);
    const StateVector& v = view(n, scratch);
    return &v == &scratch ? std::move(scratch) : v;
  }

 private:
  void write_spill(const StateVector& v, std::size_t n) {
    std::filesystem::create_directories(spill_dir_);
    const auto path = spill_dir_ / ("K" + std::to_string(n) + ".vec");
    {
      std::ofstream os(path, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot open spill file " + path.string());
      std::vector<double> buf(2 * v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        buf[2 * i] = to_le(v[i].real());
        buf[2 * i + 1] = to_le(v[i].imag());
      }
      os.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(double)));
      if (!os) throw std::runtime_error("failed writing spill file " + path.string());
    }
    nlohmann::json meta{{"M", modes_}, {"n", n}, {"norm", norm(v)}};
    std::ofstream(spill_dir_ / ("K" + std::to_string(n) + ".json")) << meta.dump() << "\n";
    spilled_.push_back(path);
  }

  void read_spill(const std::filesystem::path& path, StateVector& out) const {
    std::ifstream is(path, std::ios::binary);
    std::vector<double> buf(2 * out.size());
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!is) throw std::runtime_error("failed reading spill file " + path.string());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(to_le(buf[2 * i]), to_le(buf[2 * i + 1]));
  }

  static double to_le(double x) {
    if constexpr (std::endian::native == std::endian::little) {
      return x;
    } else {
      auto bits = std::bit_cast<std::uint64_t>(x);
      bits = __builtin_bswap64(bits);
      return std::bit_cast<double>(bits);
    }
  }

  void remove_spill_files() noexcept {
    std::error_code ec;
    for (const auto& p : spilled_) {
      std::filesystem::remove(p, ec);
      auto meta = p;
      std::filesystem::remove(meta.replace_extension(".json"), ec);
    }
    spilled_.clear();
  }

  int modes_ = 1;
  std::size_t budget_ = std::numeric_limits<std::size_t>::max();
  std::filesystem::path spill_dir_;
  std::vector<StateVector> memory_;
  std::vector<std::filesystem::path> spilled_;
};

struct LanczosOptions {
  int n_max = 0;
  /// Negative selects the default 1e-12 * sum_k(|d_k| + |o_k|).
  double breakdown_tol = -1.0;
  bool reorth = true;
  int threads = 1;
  std::size_t memory_budget_bytes = std::numeric_limits<std::size_t>::max();
  std::filesystem::path spill_dir = std::filesystem::temp_directory_path() / "kzk_spill";
};

struct LanczosOutput {
  std::vector<double> a;  ///< a_0 .. a_{N-1}
  std::vector<double> b;  ///< b_1 .. b_N; the last one is absent after breakdown
  KrylovBasis basis;      ///< K_0 .. K_{N-1}
  std::optional<int> terminated_at;
};

inline double default_breakdown_tol(const ManyBodyMagnus& omega) {
  return 1e-12 * omega.norm_estimate();
}

/// Three-term Lanczos recursion seeded with K0. With `reorth` every new
/// vector is projected against all stored basis vectors twice.
inline LanczosOutput lanczos(const ManyBodyMagnus& omega, const StateVector& k0,
                             const LanczosOptions& opts) {
  const int M = omega.size();
  if (k0.modes() != M) throw PreconditionError("lanczos: seed dimension mismatch");
  if (opts.n_max < 1 || static_cast<std::size_t>(opts.n_max) > k0.size())
    throw PreconditionError("lanczos: n_max must be in [1, 2^M]");
  if (std::abs(norm(k0) - 1.0) > 1e-10) throw PreconditionError("lanczos: seed not normalized");
  const double tol = opts.breakdown_tol < 0.0 ? default_breakdown_tol(omega) : opts.breakdown_tol;

  LanczosOutput out;
  out.basis = KrylovBasis(M, opts.memory_budget_bytes, opts.spill_dir);
  StateVector current = k0;
  StateVector previous(M);
  StateVector w(M);
  StateVector scratch(M);
  out.basis.push_back(k0);

  for (int n = 0; n < opts.n_max; ++n) {
    apply_operator(omega, current, w, opts.threads);
    const double an = inner(current, w).real();
    out.a.push_back(an);
    axpy(-an, current, w);
    if (n > 0) axpy(-out.b.back(), previous, w);
    if (opts.reorth) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < out.basis.size(); ++q) {
          const StateVector& kq = out.basis.view(q, scratch);
          axpy(-inner(kq, w), kq, w);
        }
      }
    }
    const double beta = norm(w);
    if (beta <= tol) {
      out.terminated_at = n + 1;
      break;
    }
    out.b.push_back(beta);
    if (n + 1 == opts.n_max) break;
    scale(w, 1.0 / beta);
    std::swap(previous, current);
    current = w;
    out.basis.push_back(w);
  }
  return out;
}

struct KrylovWavefunction {
  std::vector<cplx> phi;
  double leakage = 0.0;  ///< 1 - sum |phi_n|^2, clamped at 0
};

/// phi_n = <K_n|psi>.
inline KrylovWavefunction krylov_wavefunction(const KrylovBasis& basis, const StateVector& psi) {
  KrylovWavefunction out;
  out.phi.reserve(basis.size());
  StateVector scratch(psi.modes());
  double total = 0.0;
  for (std::size_t n = 0; n < basis.size(); ++n) {
    out.phi.push_back(inner(basis.view(n, scratch), psi));
    total += std::norm(out.phi.back());
  }
  out.leakage = std::max(0.0, 1.0 - total);
  return out;
}

}  // namespace kzk
