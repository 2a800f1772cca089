#pragma once

// Sweep and time-evolution drivers. Each entry assembles the Magnus operator,
// runs Lanczos from the all-ground state, projects exp(-i Omega)|GS> onto the
// Krylov basis and reduces the occupation to cumulants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kzk/complexity_stats.hpp"
#include "kzk/experiment/config.hpp"
#include "kzk/krylov_engine.hpp"
#include "kzk/magnus.hpp"
#include "kzk/scaling_analytics.hpp"

namespace kzk {

inline constexpr const char* kVersion = "1.0.0";

/// Round-trip decimal form of a double.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// ceil(lambda + 8 sqrt(lambda)) with lambda = 2 C L tau^{-1/2}, capped at 2^M.
inline int default_n_max(int L, double tau, int M) {
  const double lambda = predicted_cumulant(L, tau);
  const double n = std::ceil(lambda + 8.0 * std::sqrt(lambda));
  const double cap = std::ldexp(1.0, M);
  return static_cast<int>(std::max(1.0, std::min(n, cap)));
}

/// Landau-Zener probabilities of the modes that cross the critical point,
/// k = pi(2j-1)/L < pi/2.
inline std::vector<double> crossing_mode_probabilities(int L, double tau) {
  std::vector<double> out;
  for (double k : chain_momenta(L, L / 2))
    if (k < 0.5 * std::numbers::pi) out.push_back(landau_zener_prob(k, tau));
  return out;
}

/// -sum_k ln(1 - p_k) over the kept modes.
inline double poisson_rate(const ManyBodyMagnus& omega) {
  double acc = 0.0;
  for (double k : omega.momenta) acc -= std::log1p(-landau_zener_prob(k, omega.tau));
  return acc;
}

struct PipelineResult {
  double tau = 0.0;
  double t = 0.0;
  int n_max = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::optional<int> terminated_at;
  KrylovDistribution dist;
  CumulantSet K;
  double rate = 0.0;          ///< Poisson rate over kept modes
  double roundtrip_max = 0.0; ///< max |exp(-i Omega_k) - U_k|
  std::size_t spilled = 0;
};

inline PipelineResult run_pipeline(const ExperimentConfig& cfg, double tau, double t, int threads) {
  AssemblyOptions aopts;
  aopts.method = cfg.method;
  aopts.g0 = cfg.g0;
  aopts.ode_tol = cfg.ode_tol;
  aopts.threads = threads;
  const ManyBodyMagnus omega = assemble_many_body(cfg.L, cfg.L_eff, tau, t, aopts);
  const int M = omega.size();

  PipelineResult r;
  r.tau = tau;
  r.t = t;
  for (int j = 0; j < M; ++j)
    r.roundtrip_max = std::max(r.roundtrip_max, max_abs_diff(su2_exp(omega.modes[j]), omega.sources[j]));
  r.rate = poisson_rate(omega);

  LanczosOptions lopts;
  r.n_max = cfg.n_max_override ? std::min<long long>(*cfg.n_max_override, 1LL << M)
                               : default_n_max(cfg.L, tau, M);
  lopts.n_max = r.n_max;
  if (cfg.breakdown_tol) lopts.breakdown_tol = *cfg.breakdown_tol;
  lopts.reorth = cfg.reorth;
  lopts.threads = threads;
  lopts.memory_budget_bytes = cfg.memory_budget_mb << 20;
  lopts.spill_dir = cfg.resolved_spill_dir();
  LanczosOutput lz = lanczos(omega, ground_state(M), lopts);
  r.spilled = lz.basis.spilled();

  const StateVector psi = time_evolved_state_exact(omega);
  const KrylovWavefunction wf = krylov_wavefunction(lz.basis, psi);
  r.a = std::move(lz.a);
  r.b = std::move(lz.b);
  r.terminated_at = lz.terminated_at;
  r.dist = distribution(wf.phi);
  r.K = cumulants(r.dist);
  return r;
}

struct SweepEntry {
  double tau = 0.0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
  PipelineResult result;
  CumulantSet kappa;
  double lambda_pred = 0.0;
  double gauss_tv = 0.0;
  double poisson_tv = 0.0;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::map<std::string, std::optional<ScalingFit>> fits;
  nlohmann::json manifest;
  bool ok = true;
};

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["L"] = cfg.L;
  j["L_eff"] = cfg.L_eff;
  j["tau_list"] = cfg.tau_list;
  j["g0"] = cfg.g0;
  j["method"] = cfg.method == Method::exact ? "exact" : "closed_form";
  j["n_max_override"] = cfg.n_max_override ? nlohmann::json(*cfg.n_max_override) : nlohmann::json(nullptr);
  j["breakdown_tol"] = cfg.breakdown_tol ? nlohmann::json(*cfg.breakdown_tol) : nlohmann::json("auto");
  j["reorth"] = cfg.reorth;
  j["ode_tol"] = cfg.ode_tol;
  j["t_grid"] = cfg.t_grid;
  j["out_dir"] = cfg.out_dir.string();
  j["threads"] = cfg.threads;
  j["memory_budget_mb"] = cfg.memory_budget_mb;
  j["spill_dir"] = cfg.resolved_spill_dir().string();
  j["fit_window"] = {cfg.fit_tau_min, cfg.fit_tau_max};
  return j;
}

inline nlohmann::json fit_json(const std::optional<ScalingFit>& fit) {
  if (!fit) return {{"error", "fewer than 4 usable points in the fit window"}};
  return {{"exponent", fit->exponent},
          {"prefactor", fit->prefactor},
          {"r_squared", fit->r_squared},
          {"window", {fit->window.first, fit->window.second}}};
}

inline SweepEntry sweep_entry(const ExperimentConfig& cfg, double tau, int threads) {
  SweepEntry e;
  e.tau = tau;
  const auto start = std::chrono::steady_clock::now();
  try {
    e.result = run_pipeline(cfg, tau, 0.0, threads);
    const auto probs = crossing_mode_probabilities(cfg.L, tau);
    e.kappa = defect_statistics(probs);
    e.lambda_pred = predicted_cumulant(cfg.L, tau);
    e.gauss_tv = gaussian_distance(e.result.dist, e.result.K.K1, e.result.K.K2);
    e.poisson_tv = poisson_distance(e.result.dist, e.result.rate);
    e.ok = true;
  } catch (const std::exception& ex) {
    e.error = ex.what();
  }
  e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

/// Runs every tau of the config, writes lanczos.csv, distribution.csv,
/// cumulants.csv, fits.json and manifest.json into out_dir.
inline SweepReport run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int threads = cfg.resolved_threads();
  SweepReport rep;
  for (double tau : cfg.tau_list) rep.entries.push_back(sweep_entry(cfg, tau, threads));

  std::ostringstream lanczos_csv, dist_csv, cum_csv;
  lanczos_csv << "tau,L,L_eff,n,a_n,b_n,b_n_rescaled\n";
  dist_csv << "tau,n,P_n\n";
  cum_csv << "tau,K1,K2,K3,kappa1,kappa2,kappa3,lambda_pred,gauss_tv,poisson_tv\n";
  std::size_t lanczos_rows = 0, dist_rows = 0, cum_rows = 0;
  for (const auto& e : rep.entries) {
    if (!e.ok) continue;
    const auto& r = e.result;
    const std::string tau = format_real(e.tau);
    for (std::size_t n = 0; n < r.a.size(); ++n) {
      const double bn = n == 0 ? 0.0 : r.b[n - 1];
      lanczos_csv << tau << ',' << cfg.L << ',' << cfg.L_eff << ',' << n << ',' << format_real(r.a[n]) << ','
                  << format_real(bn) << ',' << format_real(rescaled_lanczos(bn, cfg.L, e.tau)) << '\n';
      ++lanczos_rows;
    }
    for (std::size_t n = 0; n < r.dist.p.size(); ++n) {
      dist_csv << tau << ',' << n << ',' << format_real(r.dist.p[n]) << '\n';
      ++dist_rows;
    }
    cum_csv << tau << ',' << format_real(r.K.K1) << ',' << format_real(r.K.K2) << ',' << format_real(r.K.K3)
            << ',' << format_real(e.kappa.K1) << ',' << format_real(e.kappa.K2) << ','
            << format_real(e.kappa.K3) << ',' << format_real(e.lambda_pred) << ','
            << format_real(e.gauss_tv) << ',' << format_real(e.poisson_tv) << '\n';
    ++cum_rows;
  }

  const std::map<std::string, double CumulantSet::*> cumulant_members = {
      {"K1", &CumulantSet::K1}, {"K2", &CumulantSet::K2}, {"K3", &CumulantSet::K3}};
  nlohmann::json fits;
  for (const auto& [name, member] : cumulant_members) {
    for (bool defect : {false, true}) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& e : rep.entries) {
        if (!e.ok || e.tau < cfg.fit_tau_min || e.tau > cfg.fit_tau_max) continue;
        const double y = defect ? e.kappa.*member : e.result.K.*member;
        if (y > 0.0) pts.emplace_back(e.tau, y);
      }
      std::optional<ScalingFit> fit;
      if (pts.size() >= 4) fit = power_law_fit(pts);
      const std::string key = defect ? "kappa" + name.substr(1) : name;
      rep.fits[key] = fit;
      fits[key] = fit_json(fit);
    }
  }

  const auto dir = cfg.out_dir;
  write_file_atomic(dir / "lanczos.csv", lanczos_csv.str());
  write_file_atomic(dir / "distribution.csv", dist_csv.str());
  write_file_atomic(dir / "cumulants.csv", cum_csv.str());
  write_file_atomic(dir / "fits.json", fits.dump(2) + "\n");

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : rep.entries) {
    nlohmann::json j{{"tau", e.tau}, {"ok", e.ok}, {"wall_seconds", e.wall_seconds}};
    if (e.ok) {
      const auto& r = e.result;
      j["n_max"] = r.n_max;
      j["retained"] = r.a.size();
      j["terminated_at"] = r.terminated_at ? nlohmann::json(*r.terminated_at) : nlohmann::json(nullptr);
      j["leakage"] = r.dist.leakage;
      j["spilled_vectors"] = r.spilled;
      j["checks"] = {{"leakage_below_gate", r.dist.leakage <= kMaxLeakage},
                     {"magnus_roundtrip_max", r.roundtrip_max},
                     {"magnus_roundtrip_ok", r.roundtrip_max <= 1e-10}};
    } else {
      j["error"] = e.error;
      rep.ok = false;
    }
    entries.push_back(j);
  }
  rep.manifest = {{"software", {{"name", "kzk"}, {"version", kVersion}}},
                  {"command", "sweep"},
                  {"config", config_json(cfg)},
                  {"files",
                   {{"lanczos", (dir / "lanczos.csv").string()},
                    {"distribution", (dir / "distribution.csv").string()},
                    {"cumulants", (dir / "cumulants.csv").string()},
                    {"fits", (dir / "fits.json").string()}}},
                  {"rows", {{"lanczos", lanczos_rows}, {"distribution", dist_rows}, {"cumulants", cum_rows}}},
                  {"entries", entries},
                  {"ok", rep.ok}};
  write_file_atomic(dir / "manifest.json", rep.manifest.dump(2) + "\n");
  return rep;
}

struct EvolutionRow {
  double tau = 0.0;
  double g = 0.0;
  bool ok = false;
  std::string error;
  CumulantSet K;
};

struct EvolutionReport {
  std::vector<EvolutionRow> rows;
  nlohmann::json manifest;
  bool ok = true;
};

/// For each tau and each field value g of t_grid, runs the pipeline at
/// t = -g tau and writes timeseries.csv.
inline EvolutionReport run_time_evolution(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.t_grid.empty()) throw ConfigError("evolve requires t_grid");
  const int threads = cfg.resolved_threads();
  EvolutionReport rep;
  nlohmann::json entries = nlohmann::json::array();
  for (double tau : cfg.tau_list) {
    for (double g : cfg.t_grid) {
      EvolutionRow row;
      row.tau = tau;
      row.g = g;
      const auto start = std::chrono::steady_clock::now();
      try {
        row.K = run_pipeline(cfg, tau, -g * tau, threads).K;
        row.ok = true;
      } catch (const std::exception& ex) {
        row.error = ex.what();
        rep.ok = false;
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      nlohmann::json j{{"tau", tau}, {"g", g}, {"ok", row.ok}, {"wall_seconds", wall}};
      if (!row.ok) j["error"] = row.error;
      entries.push_back(j);
      rep.rows.push_back(row);
    }
  }
  std::ostringstream csv;
  csv << "tau,g,K1,K2,K3\n";
  std::size_t rows = 0;
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    csv << format_real(r.tau) << ',' << format_real(r.g) << ',' << format_real(r.K.K1) << ','
        << format_real(r.K.K2) << ',' << format_real(r.K.K3) << '\n';
    ++rows;
  }
  const auto path = cfg.out_dir / "timeseries.csv";
  write_file_atomic(path, csv.str());
  rep.manifest = {{"software", {{"name", "kzk"}, {"version", kVersion}}},
                  {"command", "evolve"},
                  {"config", config_json(cfg)},
                  {"files", {{"timeseries", path.string()}}},
                  {"rows", {{"timeseries", rows}}},
                  {"entries", entries},
                  {"ok", rep.ok}};
  write_file_atomic(cfg.out_dir / "manifest.json", rep.manifest.dump(2) + "\n");
  return rep;
}

}  // namespace kzk
