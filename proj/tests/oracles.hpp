// Test-side oracles, independent of the library's quadrature and inversion
// machinery: fixed-step RK4, adaptive Simpson, brute-force support maxima,
// and a seeded random convex polygon generator.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "engel/convex.hpp"

namespace oracles {

// Classic RK4 for dx/dt = f(t, x).
template <std::size_t N>
std::array<double, N> rk4(const std::function<std::array<double, N>(double, const std::array<double, N>&)>& f,
                          std::array<double, N> x, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const auto k1 = f(t, x);
    std::array<double, N> x2;
    for (std::size_t j = 0; j < N; ++j) x2[j] = x[j] + 0.5 * h * k1[j];
    const auto k2 = f(t + 0.5 * h, x2);
    for (std::size_t j = 0; j < N; ++j) x2[j] = x[j] + 0.5 * h * k2[j];
    const auto k3 = f(t + 0.5 * h, x2);
    for (std::size_t j = 0; j < N; ++j) x2[j] = x[j] + h * k3[j];
    const auto k4 = f(t + h, x2);
    for (std::size_t j = 0; j < N; ++j)
      x[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    t += h;
  }
  return x;
}

// Adaptive Simpson quadrature (a rule family distinct from the library's
// Gauss panels).
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-10) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Integral with |x-e|^{-1/2} endpoint singularities via the s^2 substitution,
// done with Simpson instead of the library's Gauss rule.
inline double simpson_sqrt_end(const std::function<double(double)>& f, double a,
                               double b, bool sing_a, bool sing_b,
                               double tol = 1e-10) {
  if (sing_a && sing_b) {
    const double m = 0.5 * (a + b);
    return simpson_sqrt_end(f, a, m, true, false, tol) +
           simpson_sqrt_end(f, m, b, false, true, tol);
  }
  if (sing_a)
    return adaptive_simpson([&](double s) { return 2 * s * f(a + s * s); }, 1e-12,
                            std::sqrt(b - a), tol);
  if (sing_b)
    return adaptive_simpson([&](double s) { return 2 * s * f(b - s * s); }, 1e-12,
                            std::sqrt(b - a), tol);
  return adaptive_simpson(f, a, b, tol);
}

// Brute-force support function over a dense boundary sample of U.
inline double support_bruteforce(const engel::ControlRegion& U, engel::Vec2 h,
                                 int grid = 20000) {
  double best = -1e300;
  for (int i = 0; i < grid; ++i) {
    const double th = 2 * engel::num::pi * i / grid;
    const engel::Vec2 p = U.boundary_point(th);
    best = std::max(best, engel::dot(p, h));
  }
  return best;
}

// Convex hull, Andrew's monotone chain, counterclockwise.
inline std::vector<engel::Vec2> convex_hull(std::vector<engel::Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](engel::Vec2 a, engel::Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  const std::size_t n = pts.size();
  std::vector<engel::Vec2> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && engel::cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 1e-9)
      --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && engel::cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 1e-9)
      --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Random strictly convex polygon (3..12 vertices) with the origin well
// inside; asymmetric in general.
inline std::vector<engel::Vec2> random_polygon(std::mt19937& rng) {
  std::uniform_int_distribution<int> nd(3, 12);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const int n = nd(rng);
    std::vector<engel::Vec2> pts(n);
    for (int i = 0; i < n; ++i) {
      const double a = 2 * engel::num::pi * ud(rng);
      const double r = 0.6 + 1.4 * ud(rng);
      pts[i] = {r * std::cos(a), r * std::sin(a)};
    }
    auto hull = convex_hull(pts);
    if (hull.size() < 3) continue;
    try {
      engel::ControlRegion::polygon(hull);
    } catch (const engel::Error&) {
      continue;
    }
    return hull;
  }
  return {{1, 0}, {0, 1}, {-1, -1}};
}

}  // namespace oracles
