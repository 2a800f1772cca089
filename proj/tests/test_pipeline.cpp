// Full-pipeline checks on the TFIM at L = 400. The tau sweep is computed once
// per process and shared between tests.

#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "kzk/experiment/runner.hpp"

using namespace kzk;
namespace fs = std::filesystem;

namespace {

ExperimentConfig base_config(int L_eff) {
  ExperimentConfig cfg;
  cfg.L = 400;
  cfg.L_eff = L_eff;
  cfg.tau_list = {8, 11, 16, 23, 32, 45, 64};
  cfg.out_dir = fs::temp_directory_path() / "kzk_pipeline_tests";
  return cfg;
}

const std::vector<SweepEntry>& sweep() {
  static const std::vector<SweepEntry> entries = [] {
    const ExperimentConfig cfg = base_config(40);
    std::vector<SweepEntry> out;
    for (double tau : cfg.tau_list) out.push_back(sweep_entry(cfg, tau, cfg.resolved_threads()));
    return out;
  }();
  return entries;
}

const SweepEntry& at(double tau) {
  for (const auto& e : sweep())
    if (e.tau == tau) return e;
  throw std::runtime_error("tau not in sweep");
}

std::vector<std::pair<double, double>> series(double CumulantSet::*member, bool defect) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : sweep()) pts.emplace_back(e.tau, defect ? e.kappa.*member : e.result.K.*member);
  return pts;
}

/// Least-squares prefactor of b_n against sqrt(L) tau^{-1/4} sqrt(n), n <= n_hi.
double lanczos_prefactor(const std::vector<double>& b, double L, double tau, int n_hi) {
  double num = 0.0, den = 0.0;
  for (int n = 1; n <= n_hi && n <= static_cast<int>(b.size()); ++n) {
    const double s = predicted_lanczos_scaling(n, L, tau, 1.0);
    num += b[n - 1] * s;
    den += s * s;
  }
  return num / den;
}

double rms_relative(const std::vector<double>& x, const std::vector<double>& y, int n_hi) {
  double acc = 0.0;
  int count = 0;
  for (int n = 1; n <= n_hi && n <= static_cast<int>(std::min(x.size(), y.size())); ++n) {
    const double rel = (x[n - 1] - y[n - 1]) / (0.5 * (x[n - 1] + y[n - 1]));
    acc += rel * rel;
    ++count;
  }
  return std::sqrt(acc / count);
}

}  // namespace

TEST(Pipeline, SweepEntriesSucceed) {
  for (const auto& e : sweep()) {
    EXPECT_TRUE(e.ok) << e.tau << ": " << e.error;
    EXPECT_LE(e.result.roundtrip_max, 1e-10) << e.tau;
    EXPECT_LE(e.result.dist.leakage, kMaxLeakage) << e.tau;
  }
}

TEST(Pipeline, PoissonDistributionAtTau20) {
  const SweepEntry e = sweep_entry(base_config(40), 20.0, 1);
  ASSERT_TRUE(e.ok) << e.error;
  EXPECT_LE(poisson_distance(e.result.dist, e.result.rate), 0.05);
}

TEST(Pipeline, GaussianDistributionAtTau34WithSpilledBasis) {
  ExperimentConfig cfg = base_config(46);
  cfg.memory_budget_mb = 1024;
  const SweepEntry e = sweep_entry(cfg, 34.0, cfg.resolved_threads());
  ASSERT_TRUE(e.ok) << e.error;
  EXPECT_GT(e.result.spilled, 0u);
  EXPECT_LE(gaussian_distance(e.result.dist, e.result.K.K1, e.result.K.K2), 0.05);
}

TEST(Pipeline, MeanFollowsInverseRootTau) {
  const ScalingFit fit = power_law_fit(series(&CumulantSet::K1, false));
  EXPECT_NEAR(fit.exponent, -0.50, 0.05);
}

TEST(Pipeline, CumulantsAgreeAtLeadingOrder) {
  for (const auto& e : sweep()) {
    if (e.tau < 10.0 || e.tau > 60.0) continue;
    EXPECT_LE(std::abs(e.result.K.K2 / e.result.K.K1 - 1.0), 0.15) << "tau " << e.tau;
    EXPECT_LE(std::abs(e.result.K.K3 / e.result.K.K1 - 1.0), 0.35) << "tau " << e.tau;
  }
}

TEST(Pipeline, DefectAndComplexityExponentsMatch) {
  const ScalingFit k1 = power_law_fit(series(&CumulantSet::K1, false));
  const ScalingFit kappa1 = power_law_fit(series(&CumulantSet::K1, true));
  EXPECT_NEAR(k1.exponent, kappa1.exponent, 0.05);
}

TEST(Pipeline, MeanMatchesPredictedCumulant) {
  for (const auto& e : sweep()) {
    if (e.tau < 10.0 || e.tau > 60.0) continue;
    const double r = e.result.K.K1 / predicted_cumulant(400.0, e.tau);
    EXPECT_GE(r, 0.7) << "tau " << e.tau;
    EXPECT_LE(r, 1.3) << "tau " << e.tau;
  }
}

TEST(Pipeline, LanczosPrefactorStableAcrossTau) {
  std::vector<double> pref;
  for (double tau : {16.0, 32.0, 64.0}) {
    const int n_hi = static_cast<int>(std::floor(predicted_cumulant(400.0, tau)));
    pref.push_back(lanczos_prefactor(at(tau).result.b, 400.0, tau, n_hi));
  }
  const double mean = (pref[0] + pref[1] + pref[2]) / 3.0;
  for (double p : pref) EXPECT_NEAR(p / mean, 1.0, 0.10) << p;
}

TEST(Pipeline, RescaledLanczosCollapsesAcrossLAndTau) {
  std::vector<std::vector<double>> curves;
  std::vector<double> lambdas;
  auto add = [&](double L, double tau, const std::vector<double>& b) {
    std::vector<double> r;
    for (double bn : b) r.push_back(rescaled_lanczos(bn, L, tau));
    curves.push_back(r);
    lambdas.push_back(predicted_cumulant(L, tau));
  };
  for (double tau : {16.0, 32.0, 64.0}) add(400.0, tau, at(tau).result.b);
  ExperimentConfig half = base_config(40);
  half.L = 200;
  add(200.0, 16.0, run_pipeline(half, 16.0, 0.0, half.resolved_threads()).b);
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j) {
      const int n_hi = static_cast<int>(std::floor(std::min(lambdas[i], lambdas[j])));
      EXPECT_LE(rms_relative(curves[i], curves[j], n_hi), 0.07) << i << " vs " << j;
    }
}
