#pragma once

// Occupation statistics of a state in the Krylov basis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kzk/errors.hpp"
#include "kzk/parallel.hpp"

namespace kzk {

struct KrylovDistribution {
  std::vector<double> p;
  double leakage = 0.0;

  double total() const {
    return pairwise_sum<double>(0, p.size(), [&](std::size_t n) { return p[n]; });
  }
};

struct CumulantSet {
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
};

struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> window{0.0, 0.0};
};

inline constexpr double kMaxLeakage = 0.01;

inline KrylovDistribution distribution(std::span<const std::complex<double>> phi) {
  KrylovDistribution out;
  out.p.reserve(phi.size());
  for (const auto& a : phi) out.p.push_back(std::norm(a));
  const double total = out.total();
  if (total > 1.0 + 1e-8)
    throw PreconditionError("distribution: total weight " + std::to_string(total) + " exceeds 1");
  out.leakage = std::max(0.0, 1.0 - total);
  return out;
}

/// log sum_n p_n e^{i theta n}, on the branch continuous in theta from
/// cgf(0) = log(total). The phase is unwrapped along a grid fine enough that
/// no single term turns by more than 0.1 rad per step.
inline std::complex<double> cgf(const KrylovDistribution& dist, double theta) {
  if (std::abs(theta) > std::numbers::pi) throw DomainError("cgf: |theta| must be <= pi");
  if (dist.total() <= 0.0) throw PreconditionError("cgf: distribution has zero total weight");
  auto z_at = [&](double th) {
    return pairwise_sum<std::complex<double>>(0, dist.p.size(), [&](std::size_t n) {
      return dist.p[n] * std::polar(1.0, th * static_cast<double>(n));
    });
  };
  const double span = std::abs(theta) * static_cast<double>(dist.p.size());
  const int steps = std::max(1, static_cast<int>(std::ceil(span / 0.1)));
  std::complex<double> prev = z_at(0.0);
  double phase = std::arg(prev);
  for (int s = 1; s <= steps; ++s) {
    const std::complex<double> z = z_at(theta * s / steps);
    phase += std::arg(z / prev);
    prev = z;
  }
  return {std::log(std::abs(prev)), phase};
}

/// Mean, variance and third central moment of the retained weight, by two
/// passes over the support.
inline CumulantSet cumulants(const KrylovDistribution& dist) {
  if (dist.leakage > kMaxLeakage)
    throw PreconditionError("cumulants: leakage " + std::to_string(dist.leakage) +
                            " exceeds 0.01; distribution truncated");
  const double total = dist.total();
  if (total <= 0.0) throw PreconditionError("cumulants: distribution has zero total weight");
  const std::size_t N = dist.p.size();
  const double mean =
      pairwise_sum<double>(0, N, [&](std::size_t n) { return static_cast<double>(n) * dist.p[n]; }) /
      total;
  const double m2 = pairwise_sum<double>(0, N, [&](std::size_t n) {
                      const double x = static_cast<double>(n) - mean;
                      return x * x * dist.p[n];
                    }) / total;
  const double m3 = pairwise_sum<double>(0, N, [&](std::size_t n) {
                      const double x = static_cast<double>(n) - mean;
                      return x * x * x * dist.p[n];
                    }) / total;
  return {mean, m2, m3};
}

/// Cumulants of a sum of independent Bernoulli(p_k) variables.
inline CumulantSet defect_statistics(std::span<const double> probs) {
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("defect_statistics: probability outside [0, 1]");
  const std::size_t N = probs.size();
  CumulantSet out;
  out.K1 = pairwise_sum<double>(0, N, [&](std::size_t i) { return probs[i]; });
  out.K2 = pairwise_sum<double>(0, N, [&](std::size_t i) { return probs[i] * (1.0 - probs[i]); });
  out.K3 = pairwise_sum<double>(0, N, [&](std::size_t i) {
    const double p = probs[i];
    return p * (1.0 - p) * (1.0 - 2.0 * p);
  });
  return out;
}

namespace detail {

inline double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc(-(x - mean) / (sigma * std::numbers::sqrt2));
}

/// TV distance between p on {0..N-1} and a reference pmf. Reference mass
/// beyond the support is compared against the leaked weight of p.
template <class Pmf>
double tv_distance(const KrylovDistribution& dist, Pmf&& pmf) {
  const std::size_t N = dist.p.size();
  const double diff =
      pairwise_sum<double>(0, N, [&](std::size_t n) { return std::abs(dist.p[n] - pmf(n)); });
  const double covered = pairwise_sum<double>(0, N, [&](std::size_t n) { return pmf(n); });
  const double outside = std::max(0.0, 1.0 - covered);
  return 0.5 * (diff + std::abs(outside - dist.leakage));
}

}  // namespace detail

/// Total-variation distance to the integer-binned Gaussian(K1, K2); bin n
/// holds the Gaussian mass on [n - 1/2, n + 1/2].
inline double gaussian_distance(const KrylovDistribution& dist, double K1, double K2) {
  if (!(K2 > 0.0)) throw DomainError("gaussian_distance: K2 must be positive");
  const double sigma = std::sqrt(K2);
  return detail::tv_distance(dist, [&](std::size_t n) {
    const double x = static_cast<double>(n);
    return detail::normal_cdf(x + 0.5, K1, sigma) - detail::normal_cdf(x - 0.5, K1, sigma);
  });
}

inline double poisson_pmf(std::size_t n, double lambda) {
  const double x = static_cast<double>(n);
  return std::exp(x * std::log(lambda) - lambda - std::lgamma(x + 1.0));
}

inline double poisson_distance(const KrylovDistribution& dist, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("poisson_distance: lambda must be positive");
  return detail::tv_distance(dist, [&](std::size_t n) { return poisson_pmf(n, lambda); });
}

/// Least squares on (ln tau, ln y).
inline ScalingFit power_law_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 4) throw PreconditionError("power_law_fit: need at least 4 points");
  std::vector<double> xs, ys;
  double lo = points.front().first, hi = points.front().first;
  for (const auto& [tau, y] : points) {
    if (!(tau > 0.0) || !(y > 0.0)) throw DomainError("power_law_fit: data must be positive");
    xs.push_back(std::log(tau));
    ys.push_back(std::log(y));
    lo = std::min(lo, tau);
    hi = std::max(hi, tau);
  }
  const std::size_t N = xs.size();
  const double n = static_cast<double>(N);
  const double mx = pairwise_sum<double>(0, N, [&](std::size_t i) { return xs[i]; }) / n;
  const double my = pairwise_sum<double>(0, N, [&](std::size_t i) { return ys[i]; }) / n;
  const double sxx = pairwise_sum<double>(0, N, [&](std::size_t i) { return (xs[i] - mx) * (xs[i] - mx); });
  const double sxy = pairwise_sum<double>(0, N, [&](std::size_t i) { return (xs[i] - mx) * (ys[i] - my); });
  const double syy = pairwise_sum<double>(0, N, [&](std::size_t i) { return (ys[i] - my) * (ys[i] - my); });
  if (sxx == 0.0) throw DomainError("power_law_fit: all tau values coincide");
  ScalingFit fit;
  fit.exponent = sxy / sxx;
  fit.prefactor = std::exp(my - fit.exponent * mx);
  const double ss_res = pairwise_sum<double>(0, N, [&](std::size_t i) {
    const double r = ys[i] - (my + fit.exponent * (xs[i] - mx));
    return r * r;
  });
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  fit.window = {lo, hi};
  return fit;
}

}  // namespace kzk
