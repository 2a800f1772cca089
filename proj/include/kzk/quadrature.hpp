#pragma once

// Globally adaptive Gauss-Kronrod (7, 15) quadrature on finite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "kzk/errors.hpp"

namespace kzk {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodNodes[j];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace detail

/// Bisects the interval with the largest error estimate until the total
/// estimate is below abs_tol; throws QuadratureError past max_intervals.
template <class F>
QuadratureResult integrate(F f, double a, double b, double abs_tol, int max_intervals = 2000) {
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gauss_kronrod(f, a, b));
  double value = heap.top().value;
  double error = heap.top().error;
  int count = 1;
  while (error > abs_tol) {
    if (count >= max_intervals)
      throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]: error estimate " + std::to_string(error) +
                            " after " + std::to_string(count) + " intervals");
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::gauss_kronrod(f, worst.a, mid);
    const auto right = detail::gauss_kronrod(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
    if (!std::isfinite(value)) throw QuadratureError("quadrature produced a non-finite value");
  }
  // Re-add from the pieces so the running updates do not leave cancellation residue.
  double total = 0.0, total_err = 0.0;
  std::vector<detail::Segment> pieces;
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  for (const auto& s : pieces) {
    total += s.value;
    total_err += s.error;
  }
  return {total, total_err, count};
}

}  // namespace kzk
