#pragma once

// Cross-module self-check suite. Every check is isolated: an exception inside
// one check becomes a failed entry and the suite continues.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kzk/complexity_stats.hpp"
#include "kzk/krylov_engine.hpp"
#include "kzk/magnus.hpp"
#include "kzk/mode_dynamics.hpp"
#include "kzk/scaling_analytics.hpp"

namespace kzk {

/// Haar-distributed SU(2) element from a normalized Gaussian quaternion.
template <class Rng>
Unitary2 random_su2(Rng& rng) {
  std::normal_distribution<double> gauss;
  double q[4];
  double n = 0.0;
  for (double& x : q) {
    x = gauss(rng);
    n += x * x;
  }
  n = std::sqrt(n);
  const cplx a(q[0] / n, q[1] / n), b(q[2] / n, q[3] / n);
  return Mat2{{a, b, -std::conj(b), std::conj(a)}};
}

template <class Rng>
MagnusMode random_magnus_mode(Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return MagnusMode{u(rng), cplx(u(rng), u(rng))};
}

/// Dense row-major matrix of sum_k I (x) .. (x) Omega_k (x) .. (x) I.
inline std::vector<cplx> dense_operator(const ManyBodyMagnus& omega) {
  const std::size_t dim = std::size_t{1} << omega.size();
  std::vector<cplx> h(dim * dim);
  for (std::size_t col = 0; col < dim; ++col) {
    for (int j = 0; j < omega.size(); ++j) {
      const std::size_t bit = std::size_t{1} << j;
      const Mat2 block = omega.modes[j].matrix();
      // Component 0 of a block is the excited (bit set) amplitude.
      const int c = (col & bit) ? 0 : 1;
      for (int r = 0; r < 2; ++r) {
        const std::size_t row = r == 0 ? (col | bit) : (col & ~bit);
        h[row * dim + col] += block(r, c);
      }
    }
  }
  return h;
}

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidateOptions {
  bool inject_bad_unitary = false;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json list = nlohmann::json::array();
    int passed = 0;
    for (const auto& c : checks) {
      list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      passed += c.passed ? 1 : 0;
    }
    return {{"checks", list},
            {"passed", passed},
            {"failed", static_cast<int>(checks.size()) - passed},
            {"ok", all_passed()}};
  }
};

namespace detail {

/// Runs `body`, which returns (passed, detail); exceptions become failures.
inline CheckResult run_check(const std::string& name,
                             const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, msg] = body();
    return {name, ok, msg};
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace detail

inline ValidationReport run_validate(const ValidateOptions& opts = {}) {
  using detail::run_check;
  using detail::sci;
  ValidationReport rep;
  auto add = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    rep.checks.push_back(run_check(name, body));
  };

  add("su2_exp_log_roundtrip", [] {
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Unitary2 u = random_su2(rng);
      worst = std::max(worst, max_abs_diff(su2_exp(su2_log(u)), u));
    }
    return std::pair{worst <= 1e-10, "max error " + sci(worst)};
  });

  add("su2_log_identity", [] {
    const MagnusMode m = su2_log(Mat2::identity());
    const double mag = m.angle();
    return std::pair{mag == 0.0, "|Omega| " + sci(mag)};
  });

  add("propagator_unitarity", [] {
    const ModeParams start = ModeParams{0.2, 10.0, 5.0, 0.0}.at_time(-50.0);
    const Unitary2 u = propagate_mode(start, 0.0, 1e-12);
    const double defect = unitarity_defect(u);
    return std::pair{defect <= 1e-10, "max |U^dag U - I| " + sci(defect)};
  });

  add("propagator_composition", [] {
    const double tol = 1e-10;
    const ModeParams start = ModeParams{0.3, 5.0, 5.0, 0.0}.at_time(-25.0);
    const Unitary2 full = propagate_mode(start, 0.0, tol);
    const Unitary2 first = propagate_mode(start, -10.0, tol);
    const Unitary2 second = propagate_mode(start.at_time(-10.0), 0.0, tol);
    const double err = max_abs_diff(second * first, full);
    return std::pair{err <= 10.0 * tol, "composition error " + sci(err)};
  });

  add("landau_zener_probability", [] {
    const ModeParams p = ModeParams::at_field(0.2, 10.0, 5.0, 0.0);
    const Unitary2 w = diabatic_unitary(p, Method::exact, 1e-10);
    const double exact = std::norm(w(0, 1));
    const double lz = landau_zener_prob(0.2, 10.0);
    const double rel = std::abs(exact - lz) / lz;
    return std::pair{rel <= 0.05, "relative deviation " + sci(rel)};
  });

  add("adiabatic_gauge_convergence", [] {
    const ModeParams p = ModeParams::at_field(0.2, 10.0, 5.0, 0.0);
    const Unitary2 a = diabatic_unitary(p, Method::exact, 1e-12, 1024);
    const Unitary2 b = diabatic_unitary(p, Method::exact, 1e-12, 2048);
    const double diff = max_abs_diff(a, b);
    return std::pair{diff < 1e-8, "step-doubling change " + sci(diff)};
  });

  add("assembled_modes_roundtrip", [] {
    const ManyBodyMagnus om = assemble_many_body(400, 8, 16.0, 0.0);
    double worst = 0.0;
    for (int j = 0; j < om.size(); ++j) {
      worst = std::max(worst, max_abs_diff(su2_exp(om.modes[j]), om.sources[j]));
      worst = std::max(worst, std::abs(om.sources[j].det() - 1.0));
    }
    return std::pair{worst <= 1e-10, "max roundtrip/det error " + sci(worst)};
  });

  add("dense_apply_equivalence", [] {
    std::mt19937_64 rng(7);
    std::vector<MagnusMode> blocks;
    for (int j = 0; j < 4; ++j) blocks.push_back(random_magnus_mode(rng));
    const ManyBodyMagnus om = ManyBodyMagnus::from_modes(blocks);
    const auto h = dense_operator(om);
    StateVector psi(4);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = cplx(g(rng), g(rng));
    const StateVector out = apply_operator(om, psi);
    double worst = 0.0;
    for (std::size_t r = 0; r < psi.size(); ++r) {
      cplx acc{};
      for (std::size_t c = 0; c < psi.size(); ++c) acc += h[r * psi.size() + c] * psi[c];
      worst = std::max(worst, std::abs(acc - out[r]));
    }
    return std::pair{worst <= 1e-12, "max deviation " + sci(worst)};
  });

  add("dense_lanczos_equivalence", [] {
    std::mt19937_64 rng(11);
    std::vector<MagnusMode> blocks;
    for (int j = 0; j < 3; ++j) blocks.push_back(random_magnus_mode(rng));
    const ManyBodyMagnus om = ManyBodyMagnus::from_modes(blocks);
    const auto h = dense_operator(om);
    const std::size_t dim = 8;
    LanczosOptions lo;
    lo.n_max = 8;
    const LanczosOutput out = lanczos(om, ground_state(3), lo);
    // Q^dag H Q must be tridiagonal with the recorded coefficients.
    const std::size_t N = out.basis.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const StateVector qi = out.basis.at(i);
      for (std::size_t j = 0; j < N; ++j) {
        const StateVector qj = out.basis.at(j);
        cplx t{}, ov{};
        for (std::size_t r = 0; r < dim; ++r) {
          cplx hq{};
          for (std::size_t c = 0; c < dim; ++c) hq += h[r * dim + c] * qj[c];
          t += std::conj(qi[r]) * hq;
          ov += std::conj(qi[r]) * qj[r];
        }
        double expect = 0.0;
        if (i == j) expect = out.a[i];
        else if (j == i + 1) expect = out.b[i];
        else if (i == j + 1) expect = out.b[j];
        worst = std::max(worst, std::abs(t - expect));
        worst = std::max(worst, std::abs(ov - (i == j ? 1.0 : 0.0)));
      }
    }
    return std::pair{worst <= 1e-9, "max deviation " + sci(worst)};
  });

  add("truncation_coverage", [] {
    const auto kept = chain_momenta(400, 20);
    double num = 0.0, den = 0.0;
    for (double k : kept) num += landau_zener_prob(k, 10.0);
    for (double k : chain_momenta(400, 200))
      if (k < 0.5 * std::numbers::pi) den += landau_zener_prob(k, 10.0);
    const double ratio = num / den;
    return std::pair{ratio >= 0.99, "kept fraction " + sci(ratio)};
  });

  add("kz_constant_quadrature", [] {
    const double diff = std::abs(kz_constant() - kz_constant_by_quadrature());
    return std::pair{diff <= 1e-6, "series vs quadrature " + sci(diff)};
  });

  add("poisson_cumulants", [] {
    const double lambda = 7.0;
    KrylovDistribution d;
    const int n_max = static_cast<int>(std::ceil(lambda + 8.0 * std::sqrt(lambda)));
    for (int n = 0; n <= n_max; ++n) d.p.push_back(poisson_pmf(n, lambda));
    d.leakage = std::max(0.0, 1.0 - d.total());
    const CumulantSet k = cumulants(d);
    const double worst =
        std::max({std::abs(k.K1 - lambda), std::abs(k.K2 - lambda), std::abs(k.K3 - lambda)}) / lambda;
    return std::pair{worst <= 1e-6, "max relative cumulant deviation " + sci(worst)};
  });

  if (opts.inject_bad_unitary) {
    add("injected_non_special_unitary", [] {
      const Unitary2 bad = cplx(std::polar(1.0, 0.3)) * Mat2::identity();
      const MagnusMode m = su2_log(bad);
      return std::pair{true, "unexpectedly accepted, angle " + sci(m.angle())};
    });
  }
  return rep;
}

}  // namespace kzk
