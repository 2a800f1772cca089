#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace kzk {

using cplx = std::complex<double>;
using Vec2 = std::array<cplx, 2>;

/// Dense 2x2 complex matrix, row-major.
struct Mat2 {
  std::array<cplx, 4> m{};

  static constexpr Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }

  /// Matrix whose columns are `c0` and `c1`.
  static constexpr Mat2 from_columns(const Vec2& c0, const Vec2& c1) {
    return Mat2{{c0[0], c1[0], c0[1], c1[1]}};
  }

  constexpr cplx& operator()(int r, int c) { return m[2 * r + c]; }
  constexpr const cplx& operator()(int r, int c) const { return m[2 * r + c]; }

  Mat2 adjoint() const {
    return Mat2{{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
  }
  cplx det() const { return m[0] * m[3] - m[1] * m[2]; }
  cplx trace() const { return m[0] + m[3]; }

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return Mat2{{x.m[0] * y.m[0] + x.m[1] * y.m[2], x.m[0] * y.m[1] + x.m[1] * y.m[3],
                 x.m[2] * y.m[0] + x.m[3] * y.m[2], x.m[2] * y.m[1] + x.m[3] * y.m[3]}};
  }
  friend Vec2 operator*(const Mat2& x, const Vec2& v) {
    return {x.m[0] * v[0] + x.m[1] * v[1], x.m[2] * v[0] + x.m[3] * v[1]};
  }
  friend Mat2 operator+(Mat2 x, const Mat2& y) {
    for (int i = 0; i < 4; ++i) x.m[i] += y.m[i];
    return x;
  }
  friend Mat2 operator-(Mat2 x, const Mat2& y) {
    for (int i = 0; i < 4; ++i) x.m[i] -= y.m[i];
    return x;
  }
  friend Mat2 operator*(cplx s, Mat2 x) {
    for (auto& e : x.m) e *= s;
    return x;
  }
};

/// Unitary 2x2 propagator. Unitarity is a checked property, not a type guarantee.
using Unitary2 = Mat2;

inline double max_abs(const Mat2& x) {
  double r = 0.0;
  for (const auto& e : x.m) r = std::max(r, std::abs(e));
  return r;
}

inline double max_abs_diff(const Mat2& x, const Mat2& y) { return max_abs(x - y); }

/// max |(U^dagger U - I)_ij|
inline double unitarity_defect(const Mat2& u) {
  return max_abs(u.adjoint() * u - Mat2::identity());
}

inline cplx dot(const Vec2& a, const Vec2& b) {
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}

inline double norm(const Vec2& a) { return std::sqrt(std::norm(a[0]) + std::norm(a[1])); }

}  // namespace kzk
