// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kzk/experiment/runner.hpp"
#include "kzk/experiment/validate.hpp"
#include "oracles.hpp"

using namespace kzk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "kzk_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<double> kSweepTaus{8, 11, 16, 23, 32, 45, 64};

ExperimentConfig sweep_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.L = 400;
  cfg.L_eff = 40;
  cfg.tau_list = kSweepTaus;
  cfg.out_dir = out;
  return cfg;
}

const SweepReport& main_sweep(const fs::path& root) {
  static const SweepReport rep = run_sweep(sweep_config(root / "sweep"));
  return rep;
}

const SweepEntry& entry_at(const SweepReport& rep, double tau) {
  for (const auto& e : rep.entries)
    if (e.tau == tau) return e;
  throw std::runtime_error("tau not in sweep");
}

Outcome kz_exponent(const fs::path& root) {
  const auto& fit = main_sweep(root).fits.at("K1");
  if (!fit) return {false, "K1 fit unavailable"};
  const bool ok = std::abs(fit->exponent + 0.5) <= 0.05 && fit->r_squared >= 0.99;
  return {ok, "exponent " + fmt("%.4f", fit->exponent) + ", r^2 " + fmt("%.4f", fit->r_squared)};
}

Outcome cumulant_equality(const fs::path& root) {
  bool ok = true;
  std::string detail;
  for (const auto& e : main_sweep(root).entries) {
    if (!e.ok) return {false, "tau " + fmt("%g", e.tau) + " failed: " + e.error};
    const double r2 = e.result.K.K2 / e.result.K.K1, r3 = e.result.K.K3 / e.result.K.K1;
    ok = ok && std::abs(r2 - 1.0) <= 0.15 && std::abs(r3 - 1.0) <= 0.35;
    detail += fmt("tau %g: ", e.tau) + fmt("K2/K1 %.3f ", r2) + fmt("K3/K1 %.3f; ", r3);
  }
  return {ok, detail};
}

Outcome prefactor(const fs::path& root) {
  bool ok = true;
  double lo = 1e300, hi = -1e300;
  for (const auto& e : main_sweep(root).entries) {
    if (!e.ok) return {false, "tau " + fmt("%g", e.tau) + " failed"};
    const double r = e.result.K.K1 / e.lambda_pred;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ok = ok && r >= 0.7 && r <= 1.3;
  }
  return {ok, "K1/prediction in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "]"};
}

/// RMS relative difference of two rescaled b_n curves over 1 <= n <= n_hi.
double rms_relative(const std::vector<double>& x, const std::vector<double>& y, int n_hi) {
  double acc = 0.0;
  int count = 0;
  for (int n = 1; n <= n_hi && n <= static_cast<int>(std::min(x.size(), y.size())); ++n) {
    const double a = x[n - 1], b = y[n - 1];
    const double rel = (a - b) / (0.5 * (a + b));
    acc += rel * rel;
    ++count;
  }
  return count ? std::sqrt(acc / count) : INFINITY;
}

Outcome lanczos_collapse(const fs::path& root) {
  struct Curve {
    int L_eff;
    double tau;
    std::vector<double> rescaled;
  };
  std::vector<Curve> curves;
  for (int L_eff : {36, 40})
    for (double tau : {16.0, 32.0, 64.0}) {
      std::vector<double> b;
      if (L_eff == 40) {
        b = entry_at(main_sweep(root), tau).result.b;
      } else {
        ExperimentConfig cfg = sweep_config(root / "collapse");
        cfg.L_eff = L_eff;
        b = run_pipeline(cfg, tau, 0.0, cfg.resolved_threads()).b;
      }
      Curve c{L_eff, tau, {}};
      for (double bn : b) c.rescaled.push_back(rescaled_lanczos(bn, 400.0, tau));
      curves.push_back(c);
    }
  double worst = 0.0;
  std::string worst_pair;
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j) {
      const int n_hi = static_cast<int>(std::floor(
          std::min(predicted_cumulant(400.0, curves[i].tau), predicted_cumulant(400.0, curves[j].tau))));
      const double r = rms_relative(curves[i].rescaled, curves[j].rescaled, n_hi);
      if (r > worst) {
        worst = r;
        worst_pair = "(" + std::to_string(curves[i].L_eff) + fmt(", %g)", curves[i].tau) + " vs (" +
                     std::to_string(curves[j].L_eff) + fmt(", %g)", curves[j].tau);
      }
    }
  return {worst <= 0.07, "worst pairwise RMS " + fmt("%.4f", worst) + " " + worst_pair};
}

Outcome distribution_limits(const fs::path& root) {
  bool ok = true;
  std::string detail;
  for (double tau : {20.0, 34.0}) {
    const SweepEntry e = sweep_entry(sweep_config(root / "limits"), tau, sweep_config(root).resolved_threads());
    if (!e.ok) return {false, "tau " + fmt("%g", tau) + " failed: " + e.error};
    ok = ok && e.gauss_tv <= 0.05 && e.poisson_tv <= 0.05;
    detail += fmt("tau %g: ", tau) + fmt("gaussian TV %.4f, ", e.gauss_tv) + fmt("poisson TV %.4f; ", e.poisson_tv);
  }
  return {ok, detail};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> modes(1, 4);
  std::uniform_real_distribution<double> scales(0.2, 3.0);
  double worst = 0.0;
  int mismatched_sizes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int M = modes(rng);
    const double s = scales(rng);
    std::vector<MagnusMode> blocks;
    for (int j = 0; j < M; ++j) blocks.push_back(random_magnus_mode(rng, s));
    const ManyBodyMagnus om = ManyBodyMagnus::from_modes(blocks);
    const int dim = 1 << M;
    LanczosOptions lo;
    lo.n_max = dim;
    const LanczosOutput out = lanczos(om, ground_state(M), lo);
    const oracle::Matrix h = oracle::kronecker_sum(om);
    const oracle::Vector k0 = oracle::to_eigen(ground_state(M));
    const oracle::DenseLanczos ref = oracle::lanczos(h, k0, dim, default_breakdown_tol(om));
    if (out.a.size() != ref.a.size() || out.b.size() != ref.b.size()) {
      ++mismatched_sizes;
      continue;
    }
    for (std::size_t n = 0; n < out.a.size(); ++n) worst = std::max(worst, std::abs(out.a[n] - ref.a[n]));
    for (std::size_t n = 0; n < out.b.size(); ++n) worst = std::max(worst, std::abs(out.b[n] - ref.b[n]));
    const oracle::Vector psi = oracle::expm_apply(h, k0);
    const KrylovWavefunction wf = krylov_wavefunction(out.basis, time_evolved_state_exact(om));
    for (std::size_t n = 0; n < wf.phi.size(); ++n)
      worst = std::max(worst, std::abs(wf.phi[n] - ref.basis[n].dot(psi)));
  }
  return {worst <= 1e-9 && mismatched_sizes == 0,
          "max deviation " + fmt("%.3e", worst) + ", length mismatches " + std::to_string(mismatched_sizes)};
}

Outcome magnus_correctness() {
  std::mt19937_64 rng(777);
  double haar = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Unitary2 u = random_su2(rng);
    haar = std::max(haar, max_abs_diff(su2_exp(su2_log(u)), u));
  }
  double tfim = 0.0;
  for (double tau : kSweepTaus) {
    const ManyBodyMagnus om = assemble_many_body(400, 40, tau, 0.0);
    for (int j = 0; j < om.size(); ++j) tfim = std::max(tfim, max_abs_diff(su2_exp(om.modes[j]), om.sources[j]));
  }
  return {haar <= 1e-10 && tfim <= 1e-10, "Haar max " + fmt("%.3e", haar) + ", TFIM modes max " + fmt("%.3e", tfim)};
}

Outcome landau_zener() {
  double worst = 0.0;
  std::string where;
  for (double tau : {5.0, 10.0, 20.0})
    for (int i = 1; i <= 30; ++i) {
      const double k = 0.01 * i;
      const Unitary2 w = diabatic_unitary(ModeParams::at_field(k, tau, 5.0, 0.0), Method::exact, 1e-10);
      const double lz = landau_zener_prob(k, tau);
      const double rel = std::abs(std::norm(w(0, 1)) - lz) / lz;
      if (rel > worst) {
        worst = rel;
        where = fmt("k %.2f", k) + fmt(" tau %g", tau);
      }
    }
  return {worst <= 0.05, "max relative deviation " + fmt("%.4f", worst) + " at " + where};
}

Outcome constant_c() {
  const double c = kz_constant(), q = kz_constant_by_quadrature();
  const bool ok = std::abs(c - 0.073524) <= 1e-5 && std::abs(c - q) <= 1e-6;
  return {ok, "C " + fmt("%.9f", c) + ", quadrature " + fmt("%.9f", q) + ", |C - 0.073524| " +
                  fmt("%.2e", std::abs(c - 0.073524))};
}

Outcome integral_ratios() {
  bool ok = true;
  int errors = 0;
  double r_lo = 1e300, r_hi = -1e300, s_lo = 1e300, s_hi = -1e300;
  std::string first_error;
  for (double tau : {5.0, 10.0, 20.0, 40.0, 80.0})
    for (int i = 0; i < 10; ++i) {
      const double t = -0.09 * i * tau;
      try {
        const double I = integral_I(t, tau), I2 = integral_I2(t, tau);
        const double r = I / std::sqrt(I2);
        const double s = I * I / std::sqrt(I2) / std::sqrt(8.0 * std::pow(std::numbers::pi, 3));
        r_lo = std::min(r_lo, r), r_hi = std::max(r_hi, r);
        s_lo = std::min(s_lo, s), s_hi = std::max(s_hi, s);
        ok = ok && r >= 0.112 && r <= 0.139 && s >= 0.08 && s <= 0.123;
      } catch (const std::exception& e) {
        ok = false;
        if (errors++ == 0) first_error = e.what();
      }
    }
  if (errors) return {false, std::to_string(errors) + "/50 grid points failed, first: " + first_error};
  return {ok, "I/sqrt(I2) in [" + fmt("%.4f", r_lo) + ", " + fmt("%.4f", r_hi) + "], normalized in [" +
                  fmt("%.4f", s_lo) + ", " + fmt("%.4f", s_hi) + "]"};
}

Outcome time_evolution(const fs::path& root) {
  ExperimentConfig cfg;
  cfg.L = 200;
  cfg.L_eff = 40;
  cfg.tau_list = {20.0};
  cfg.t_grid = {5.0, 2.0, 1.2, 0.8, 0.0};
  cfg.out_dir = root / "evolve";
  const EvolutionReport rep = run_time_evolution(cfg);
  if (!rep.ok) return {false, "evolution run failed"};
  std::map<double, double> k1;
  for (const auto& r : rep.rows) k1[r.g] = r.K.K1;
  const double ratio = k1[2.0] / k1[0.0];
  const double rise = (k1[0.8] - k1[1.2]) / k1[0.0];
  return {ratio < 0.05 && rise > 0.5,
          "K1(2)/K1(0) " + fmt("%.4f", ratio) + ", rise between g=1.2 and g=0.8 " + fmt("%.3f", rise) + " of final"};
}

std::vector<std::vector<double>> numeric_csv(const fs::path& p) {
  std::vector<std::vector<double>> rows;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

Outcome determinism(const fs::path& root) {
  auto cfg_for = [&](const std::string& name, int threads) {
    ExperimentConfig cfg;
    cfg.L = 400;
    cfg.L_eff = 28;
    cfg.tau_list = {10.0, 16.0, 23.0, 32.0};
    cfg.threads = threads;
    cfg.out_dir = root / name;
    return cfg;
  };
  run_sweep(cfg_for("det_a", 1));
  run_sweep(cfg_for("det_b", 1));
  run_sweep(cfg_for("det_c", 4));
  double worst = 0.0;
  bool shape_ok = true;
  for (const char* f : {"lanczos.csv", "distribution.csv", "cumulants.csv"}) {
    const auto a = numeric_csv(root / "det_a" / f);
    for (const char* other : {"det_b", "det_c"}) {
      const auto b = numeric_csv(root / other / f);
      if (a.size() != b.size() || a.empty()) {
        shape_ok = false;
        continue;
      }
      for (std::size_t r = 0; r < a.size(); ++r) {
        if (a[r].size() != b[r].size()) shape_ok = false;
        for (std::size_t c = 0; c < std::min(a[r].size(), b[r].size()); ++c)
          worst = std::max(worst, std::abs(a[r][c] - b[r][c]));
      }
    }
  }
  return {shape_ok && worst <= 1e-12, "max field difference " + fmt("%.3e", worst) + (shape_ok ? "" : ", shape mismatch")};
}

Outcome spill_smoke(const fs::path& root) {
  const ManyBodyMagnus om = assemble_many_body(400, 46, 34.0, 0.0);
  LanczosOptions lo;
  lo.n_max = 6;
  lo.memory_budget_bytes = 2 * sizeof(cplx) * (std::size_t{1} << om.size());
  lo.spill_dir = root / "spill46";
  const LanczosOutput out = lanczos(om, ground_state(om.size()), lo);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.basis.size(); ++i) {
    const StateVector ki = out.basis.at(i);
    for (std::size_t j = i; j < out.basis.size(); ++j)
      worst = std::max(worst, std::abs(inner(ki, out.basis.at(j)) - (i == j ? 1.0 : 0.0)));
  }
  bool files = true;
  for (std::size_t n = out.basis.in_memory(); n < out.basis.size(); ++n)
    files = files && fs::exists(lo.spill_dir / ("K" + std::to_string(n) + ".vec")) &&
            fs::exists(lo.spill_dir / ("K" + std::to_string(n) + ".json"));
  const bool ok = out.basis.spilled() == 4 && files && worst <= 1e-8;
  return {ok, "M " + std::to_string(om.size()) + ", spilled " + std::to_string(out.basis.spilled()) +
                  ", orthonormality " + fmt("%.2e", worst)};
}

}  // namespace

int main() {
  const fs::path root = work_dir();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"KZ exponent of the mean", [&] { return kz_exponent(root); }},
      {"Cumulant equality", [&] { return cumulant_equality(root); }},
      {"Prefactor", [&] { return prefactor(root); }},
      {"Lanczos collapse", [&] { return lanczos_collapse(root); }},
      {"Distribution limits", [&] { return distribution_limits(root); }},
      {"Oracle equivalence", [] { return oracle_equivalence(); }},
      {"Magnus correctness", [] { return magnus_correctness(); }},
      {"Landau-Zener validation", [] { return landau_zener(); }},
      {"Constant C", [] { return constant_c(); }},
      {"Integral-ratio bounds", [] { return integral_ratios(); }},
      {"Time evolution shape", [&] { return time_evolution(root); }},
      {"Determinism and thread invariance", [&] { return determinism(root); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  Outcome spill;
  try {
    spill = spill_smoke(root);
  } catch (const std::exception& e) {
    spill = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  - disk-spill smoke at L_eff = 46: %s\n", spill.pass ? "PASS" : "FAIL", spill.detail.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  fs::remove_all(root);
  return failed == 0 && spill.pass ? 0 : 1;
}
