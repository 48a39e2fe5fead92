#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace engel::num {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double th) {
  double w = std::fmod(th, two_pi);
  if (w < 0) w += two_pi;
  if (w >= two_pi) w = 0;
  return w;
}

/// Signed angular distance, reduced to (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::remainder(a - b, two_pi);
  return d;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

struct GaussRule {
  std::vector<double> node, weight;  // on [-1, 1]
};

inline GaussRule make_gauss(int n) {
  GaussRule g;
  g.node.resize(n);
  g.weight.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n with the Tricomi initial guess.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * k + 1) * x * p1 - k * p2) / (k + 1);
      }
      double dp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    p0 = 1.0;
    p1 = 0.0;
    for (int k = 0; k < n; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2 * k + 1) * x * p1 - k * p2) / (k + 1);
    }
    double dp = n * (x * p0 - p1) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.node[i] = -x;
    g.weight[i] = w;
    g.node[n - 1 - i] = x;
    g.weight[n - 1 - i] = w;
  }
  return g;
}

inline const GaussRule& gauss32() {
  static const GaussRule g = make_gauss(32);
  return g;
}

inline const GaussRule& gauss64() {
  static const GaussRule g = make_gauss(64);
  return g;
}

template <class F>
double gauss(const F& f, double a, double b, const GaussRule& rule) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (std::size_t i = 0; i < rule.node.size(); ++i)
    s += rule.weight[i] * f(mid + half * rule.node[i]);
  return s * half;
}

/// Composite 64-node Gauss with panel halving until the relative change of
/// the whole integral drops below tol (or stops decreasing: rounding floor).
template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol = 1e-10) {
  if (a == b) return 0.0;
  const GaussRule& rule = gauss64();
  double prev = gauss(f, a, b, rule);
  double prev_change = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 10; ++k) {
    const int panels = 1 << k;
    const double h = (b - a) / panels;
    double s = 0;
    for (int p = 0; p < panels; ++p) s += gauss(f, a + p * h, a + (p + 1) * h, rule);
    const double change = std::abs(s - prev);
    if (change <= tol * (1.0 + std::abs(s))) return s;
    if (k >= 2 && change >= 0.5 * prev_change && change <= 1e-8 * (1.0 + std::abs(s)))
      return s;
    prev = s;
    prev_change = change;
  }
  return prev;
}

/// Integral of f over [a, b] where f has an integrable |x - e|^{-1/2}-type
/// singularity at one or both endpoints.  The substitution x = e +- s^2
/// turns each singular end into a bounded smooth integrand.
template <class F>
double integrate_sqrt_endpoints(const F& f, double a, double b, bool sing_a,
                                bool sing_b, double tol = 1e-10) {
  if (a == b) return 0.0;
  if (sing_a && sing_b) {
    const double m = 0.5 * (a + b);
    return integrate_sqrt_endpoints(f, a, m, true, false, tol) +
           integrate_sqrt_endpoints(f, m, b, false, true, tol);
  }
  // The substitution variable is floored so that e +- s^2 never rounds onto
  // the singular endpoint itself; the skipped mass is O(floor^2).
  const double floor_s = 4e-8 * (1.0 + std::sqrt(std::abs(a) + std::abs(b)));
  if (sing_a) {
    const double smax = std::sqrt(b - a);
    auto g = [&, floor_s](double s) {
      const double se = std::max(s, floor_s);
      return 2.0 * s * f(a + se * se);
    };
    return integrate_adaptive(g, 0.0, smax, tol);
  }
  if (sing_b) {
    const double smax = std::sqrt(b - a);
    auto g = [&, floor_s](double s) {
      const double se = std::max(s, floor_s);
      return 2.0 * s * f(b - se * se);
    };
    return integrate_adaptive(g, 0.0, smax, tol);
  }
  return integrate_adaptive(f, a, b, tol);
}

// ---------------------------------------------------------------------------
// Monotone cubic Hermite interpolation
// ---------------------------------------------------------------------------

/// Cubic Hermite interpolant of strictly increasing data with slopes clamped
/// to the Fritsch-Carlson monotone region.
struct MonotoneCubic {
  std::vector<double> x, y, m;

  void build(std::vector<double> xs, std::vector<double> ys,
             std::vector<double> slopes) {
    x = std::move(xs);
    y = std::move(ys);
    m = std::move(slopes);
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
      double lim = std::numeric_limits<double>::infinity();
      if (i > 0) lim = std::min(lim, 3.0 * (y[i] - y[i - 1]) / (x[i] - x[i - 1]));
      if (i + 1 < n) lim = std::min(lim, 3.0 * (y[i + 1] - y[i]) / (x[i + 1] - x[i]));
      if (!std::isfinite(m[i]) || m[i] > lim) m[i] = lim;
      if (m[i] < 0) m[i] = 0;
    }
  }

  std::size_t cell(double t) const {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t k = static_cast<std::size_t>(it - x.begin());
    if (k == 0) return 0;
    if (k >= x.size()) return x.size() - 2;
    return k - 1;
  }

  double eval(double t) const {
    if (t <= x.front()) return y.front() + m.front() * (t - x.front());
    if (t >= x.back()) return y.back() + m.back() * (t - x.back());
    const std::size_t k = cell(t);
    const double h = x[k + 1] - x[k];
    const double u = (t - x[k]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return y[k] * (2 * u3 - 3 * u2 + 1) + h * m[k] * (u3 - 2 * u2 + u) +
           y[k + 1] * (-2 * u3 + 3 * u2) + h * m[k + 1] * (u3 - u2);
  }

  double deriv(double t) const {
    if (t <= x.front()) return m.front();
    if (t >= x.back()) return m.back();
    const std::size_t k = cell(t);
    const double h = x[k + 1] - x[k];
    const double u = (t - x[k]) / h;
    return (y[k] * (6 * u * u - 6 * u) + h * m[k] * (3 * u * u - 4 * u + 1) +
            y[k + 1] * (-6 * u * u + 6 * u) + h * m[k + 1] * (3 * u * u - 2 * u)) /
           h;
  }

  /// Solve eval(t) = yv on the tabulated span (data strictly increasing).
  double solve(double yv) const {
    if (yv <= y.front()) return x.front();
    if (yv >= y.back()) return x.back();
    auto it = std::upper_bound(y.begin(), y.end(), yv);
    std::size_t k = static_cast<std::size_t>(it - y.begin()) - 1;
    if (k >= x.size() - 1) k = x.size() - 2;
    double lo = x[k], hi = x[k + 1];
    double t = 0.5 * (lo + hi);
    for (int it2 = 0; it2 < 80; ++it2) {
      const double f = eval(t) - yv;
      if (f > 0)
        hi = t;
      else
        lo = t;
      const double d = deriv(t);
      double step = (d > 0) ? f / d : 0.0;
      double tn = t - step;
      if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
      if (std::abs(f) <= 1e-13 * (1.0 + std::abs(yv)) || hi - lo < 1e-16 * (1.0 + std::abs(t)))
        return tn;
      t = tn;
    }
    return t;
  }
};

// ---------------------------------------------------------------------------
// Scalar root bracketing / fitting helpers
// ---------------------------------------------------------------------------

/// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(const F& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  if (flo == 0) return lo;
  if (f(hi) == 0) return hi;
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) return mid;
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((flo < 0) == (fm < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Least-squares slope of log|g| against log(offset).
inline double log_log_slope(const std::vector<double>& offs,
                            const std::vector<double>& vals) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < offs.size(); ++i) {
    if (!(vals[i] > 0) || !std::isfinite(vals[i])) continue;
    const double lx = std::log(offs[i]), ly = std::log(vals[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace engel::num
