#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "engel/errors.hpp"
#include "engel/numerics.hpp"

namespace engel {

struct Vec2 {
  double x = 0, y = 0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 unit_dir(double th) { return {std::cos(th), std::sin(th)}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

namespace detail {

/// Periodic interpolant of a sampled support function.
struct SupportInterp {
  num::MonotoneCubic spline;  // over one extended period; slopes are central
  double theta0 = 0;          // first sample angle

  double value(double th) const {
    double u = std::fmod(th - theta0, num::two_pi);
    if (u < 0) u += num::two_pi;
    return spline.eval(theta0 + u);
  }
  double deriv(double th) const {
    double u = std::fmod(th - theta0, num::two_pi);
    if (u < 0) u += num::two_pi;
    return spline.deriv(theta0 + u);
  }
};

inline SupportInterp build_support_interp(const std::vector<double>& thetas,
                                          const std::vector<double>& values) {
  if (thetas.size() != values.size() || thetas.size() < 8)
    throw ParseError("support_samples needs >= 8 matching thetas/values");
  const std::size_t n = thetas.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(thetas[i + 1] > thetas[i]))
      throw ParseError("support_samples thetas must be strictly increasing");
  if (!(thetas.back() - thetas.front() < num::two_pi))
    throw ParseError("support_samples thetas must span less than one period");
  for (double v : values)
    if (!(v > 0)) throw OriginNotInterior();

  // Extend by one period on each side so the interpolant is periodic.
  std::vector<double> xs, ys;
  xs.reserve(3 * n);
  ys.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(thetas[i] - num::two_pi);
    ys.push_back(values[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(thetas[i]);
    ys.push_back(values[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(thetas[i] + num::two_pi);
    ys.push_back(values[i]);
  }
  std::vector<double> ms(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t a = (i == 0) ? 0 : i - 1;
    const std::size_t b = (i + 1 == xs.size()) ? i : i + 1;
    ms[i] = (ys[b] - ys[a]) / (xs[b] - xs[a]);
  }
  SupportInterp si;
  si.theta0 = thetas.front();
  // Plain Hermite: the support function is not monotone, so bypass the
  // Fritsch-Carlson clamp and fill the struct directly.
  si.spline.x = std::move(xs);
  si.spline.y = std::move(ys);
  si.spline.m = std::move(ms);
  return si;
}

}  // namespace detail

class PolarCurve;

/// Planar convex control region U with the origin strictly in its interior.
/// Symmetry is not required (quasimetric case).
class ControlRegion {
 public:
  enum class Shape { Polygon, Disc, Square, SupportSamples };

  /// Convex polygon given counterclockwise (clockwise input is reversed).
  static ControlRegion polygon(std::vector<Vec2> vertices) {
    ControlRegion r;
    r.shape_ = Shape::Polygon;
    r.verts_ = std::move(vertices);
    r.init_polygon();
    return r;
  }

  static ControlRegion disc(double radius) {
    if (!(radius > 0)) throw ParseError("disc radius must be positive");
    ControlRegion r;
    r.shape_ = Shape::Disc;
    r.radius_ = radius;
    return r;
  }

  /// The square circumscribing the unit circle, rotated by alpha in [0, pi/2).
  static ControlRegion square(double alpha) {
    if (!(alpha >= 0 && alpha < num::pi / 2))
      throw ParseError("square alpha must lie in [0, pi/2)");
    ControlRegion r;
    r.shape_ = Shape::Square;
    r.alpha_ = alpha;
    const double s = std::sqrt(2.0);
    for (int k = 0; k < 4; ++k)
      r.verts_.push_back(s * unit_dir(alpha + num::pi / 4 + k * num::pi / 2));
    r.init_polygon();
    return r;
  }

  /// Smooth body from support-function samples on an increasing angle grid.
  /// Convexity of the interpolant is validated on a test grid, not enforced.
  static ControlRegion support_samples(std::vector<double> thetas,
                                       std::vector<double> values) {
    ControlRegion r;
    r.shape_ = Shape::SupportSamples;
    r.interp_ = std::make_shared<detail::SupportInterp>(
        detail::build_support_interp(thetas, values));
    const int grid = 4096;
    const double h = num::two_pi / grid;
    for (int i = 0; i < grid; ++i) {
      const double th = i * h;
      const double s0 = r.interp_->value(th - h);
      const double s1 = r.interp_->value(th);
      const double s2 = r.interp_->value(th + h);
      const double curv = (s0 - 2 * s1 + s2) / (h * h) + s1;  // s'' + s >= 0
      if (curv < -1e-6 * (1.0 + std::abs(s1)))
        throw ConvexityViolation("interpolated support function is not sublinear");
    }
    return r;
  }

  Shape shape() const { return shape_; }
  double disc_radius() const { return radius_; }
  double square_alpha() const { return alpha_; }
  const std::vector<Vec2>& vertices() const { return verts_; }

  /// Minkowski functional of U: positively homogeneous, gauge(u) <= 1 iff u in U.
  double gauge(Vec2 u) const {
    switch (shape_) {
      case Shape::Disc:
        return norm(u) / radius_;
      case Shape::Square: {
        const double c = std::cos(alpha_), s = std::sin(alpha_);
        return std::max(std::abs(u.x * c + u.y * s), std::abs(-u.x * s + u.y * c));
      }
      case Shape::Polygon: {
        double m = 0;
        for (const Vec2& w : dual_verts_) m = std::max(m, dot(w, u));
        return m;
      }
      case Shape::SupportSamples:
        return max_over_polar(u);
    }
    return 0;
  }

  /// Support function F_U(h) = max над u in U of h.u.
  double support(Vec2 h) const {
    switch (shape_) {
      case Shape::Disc:
        return radius_ * norm(h);
      case Shape::Polygon:
      case Shape::Square: {
        double m = -std::numeric_limits<double>::infinity();
        for (const Vec2& v : verts_) m = std::max(m, dot(v, h));
        return m;
      }
      case Shape::SupportSamples: {
        const double n = norm(h);
        if (n == 0) return 0;
        return n * interp_->value(std::atan2(h.y, h.x));
      }
    }
    return 0;
  }

  /// Point of the boundary of U in direction psi.
  Vec2 boundary_point(double psi) const {
    const Vec2 e = unit_dir(psi);
    return (1.0 / gauge(e)) * e;
  }

  /// A vertex (or argmax boundary point) attaining support(h).
  Vec2 support_argmax(Vec2 h) const {
    switch (shape_) {
      case Shape::Disc:
        return (radius_ / norm(h)) * h;
      case Shape::Polygon:
      case Shape::Square: {
        std::size_t best = 0;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < verts_.size(); ++i)
          if (dot(verts_[i], h) > m) {
            m = dot(verts_[i], h);
            best = i;
          }
        return verts_[best];
      }
      case Shape::SupportSamples: {
        // Boundary point of the face with outer normal h: for a smooth
        // support function s, the contact point is s(a)*e(a) + s'(a)*e'(a).
        const double a = std::atan2(h.y, h.x);
        const double s = interp_->value(a), ds = interp_->deriv(a);
        return {s * std::cos(a) - ds * std::sin(a),
                s * std::sin(a) + ds * std::cos(a)};
      }
    }
    return {};
  }

  PolarCurve polar() const;

  const detail::SupportInterp& interp() const { return *interp_; }

 private:
  void init_polygon() {
    if (verts_.size() < 3) throw ParseError("polygon needs at least 3 vertices");
    // Orient counterclockwise.
    double area2 = 0;
    for (std::size_t i = 0; i < verts_.size(); ++i)
      area2 += cross(verts_[i], verts_[(i + 1) % verts_.size()]);
    if (area2 < 0) std::reverse(verts_.begin(), verts_.end());

    double scale = 0;
    for (const Vec2& v : verts_) scale = std::max(scale, norm(v));
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = verts_[i], b = verts_[(i + 1) % n], c = verts_[(i + 2) % n];
      if (cross(b - a, c - b) <= 1e-12 * scale * scale)
        throw ConvexityViolation("polygon is not strictly convex");
      if (cross(a, b) <= 1e-12 * scale * scale) throw OriginNotInterior();
    }
    // Dual vertices: w with w.v_i = w.v_{i+1} = 1 for each edge of U.
    dual_verts_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = verts_[i], b = verts_[(i + 1) % n];
      const double d = cross(a, b);
      dual_verts_[i] = {(b.y - a.y) / d, (a.x - b.x) / d};
    }
  }

  double max_over_polar(Vec2 u) const {
    // gauge_U(u) = max over theta of (u . e(theta)) / s(theta); coarse scan
    // plus golden-section refinement of the best bracket.
    const int grid = 1024;
    double best = -std::numeric_limits<double>::infinity();
    int bi = 0;
    for (int i = 0; i < grid; ++i) {
      const double th = num::two_pi * i / grid;
      const double f = dot(u, unit_dir(th)) / interp_->value(th);
      if (f > best) {
        best = f;
        bi = i;
      }
    }
    double lo = num::two_pi * (bi - 1) / grid, hi = num::two_pi * (bi + 1) / grid;
    auto f = [&](double th) { return dot(u, unit_dir(th)) / interp_->value(th); };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 90; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = f(d);
      }
    }
    return std::max(fc, fd);
  }

  Shape shape_ = Shape::Disc;
  double radius_ = 1;
  double alpha_ = 0;
  std::vector<Vec2> verts_;
  std::vector<Vec2> dual_verts_;
  std::shared_ptr<const detail::SupportInterp> interp_;
};

/// Boundary of the polar body U* as a polar-coordinate curve r(theta) with
/// one-sided derivatives, exact corner bookkeeping, and the machinery the
/// pendulum analysis needs (extreme faces of the second coordinate and
/// cancellation-free evaluation of h2 - level).
class PolarCurve {
 public:
  struct Eval {
    double r;
    double dminus, dplus;  // one-sided derivatives of r
    bool corner;
  };

  /// Arc of the boundary where h2 is extremal (a vertex gives lo == hi).
  struct Face {
    double lo = 0, hi = 0;  // angles, lo in [0, 2pi), hi - lo in [0, pi)
    double level = 0;       // the extremal value of h2
    bool degenerate() const { return hi - lo < 1e-12; }
  };

  Eval eval(double theta) const {
    const double th = num::wrap_angle(theta);
    switch (kind_) {
      case Kind::Disc:
        return {r0_, 0.0, 0.0, false};
      case Kind::Smooth: {
        const double s = region_.interp().value(th);
        const double ds = region_.interp().deriv(th);
        const double r = 1.0 / s;
        const double dr = -ds / (s * s);
        return {r, dr, dr, false};
      }
      case Kind::Polygon: {
        const std::size_t n = wedge_lo_.size();
        const std::size_t w = wedge_index(th);
        const Vec2 v = wedge_src_[w];
        const double r = radius_on(v, th);
        // Exact hit of a wedge boundary: report both one-sided derivatives.
        const double tol = 1e-12;
        double d_lo = th - wedge_lo_[w];
        if (d_lo < 0) d_lo += num::two_pi;
        double d_hi = wedge_lo_[(w + 1) % n] - th;
        if (d_hi <= 0) d_hi += num::two_pi;
        if (d_lo <= tol) {
          const std::size_t wp = (w == 0) ? n - 1 : w - 1;
          const double dm = deriv_on(wedge_src_[wp], th), dp = deriv_on(v, th);
          return {r, dm, dp, std::abs(dp - dm) > 1e-8 * (1.0 + std::abs(r))};
        }
        if (d_hi <= tol) {
          const std::size_t wn = (w + 1) % n;
          const double dm = deriv_on(v, th), dp = deriv_on(wedge_src_[wn], th);
          return {r, dm, dp, std::abs(dp - dm) > 1e-8 * (1.0 + std::abs(r))};
        }
        const double d = deriv_on(v, th);
        return {r, d, d, false};
      }
    }
    return {};
  }

  double radius(double theta) const {
    const double th = num::wrap_angle(theta);
    switch (kind_) {
      case Kind::Disc:
        return r0_;
      case Kind::Smooth:
        return 1.0 / region_.interp().value(th);
      case Kind::Polygon:
        return radius_on(wedge_src_[wedge_index(th)], th);
    }
    return 0;
  }

  Vec2 point(double theta) const { return radius(theta) * unit_dir(theta); }
  double h1(double theta) const { return radius(theta) * std::cos(num::wrap_angle(theta)); }
  double h2(double theta) const { return radius(theta) * std::sin(num::wrap_angle(theta)); }

  /// h2(theta) - level, evaluated without cancellation near its zeros.
  double h2_minus_level(double theta, double level) const {
    const double th = num::wrap_angle(theta);
    switch (kind_) {
      case Kind::Smooth:
        return h2(th) - level;
      case Kind::Disc: {
        const double s = level / r0_;
        if (std::abs(s) > 1.0) return r0_ * std::sin(th) - level;
        // sin(th) - sin(tn) with tn the nearest zero of the difference.
        const double a = std::asin(std::clamp(s, -1.0, 1.0));
        const double cand[2] = {a, num::pi - a};
        double dbest = std::numeric_limits<double>::infinity(), tn = a;
        for (double c : cand) {
          const double d = num::angle_diff(th, c);
          if (std::abs(d) < std::abs(dbest)) {
            dbest = d;
            tn = c;
          }
        }
        return 2.0 * r0_ * std::cos(tn + 0.5 * dbest) * std::sin(0.5 * dbest);
      }
      case Kind::Polygon: {
        const Vec2 v = wedge_src_[wedge_index(th)];
        // On the wedge, h2 - L = (A sin - B cos)/(v.e) = R sin(th - psi)/(v.e).
        // The angle difference is reduced to the nearest zero of the sine so
        // no pi-sized cancellation enters near the vanishing set.
        const double A = 1.0 - level * v.y, B = level * v.x;
        const double R = std::hypot(A, B), psi = std::atan2(B, A);
        double d = num::angle_diff(th, psi);
        double sign = 1.0;
        if (d > num::pi / 2) {
          d -= num::pi;
          sign = -1.0;
        } else if (d < -num::pi / 2) {
          d += num::pi;
          sign = -1.0;
        }
        return sign * R * std::sin(d) / dot(v, unit_dir(th));
      }
    }
    return 0;
  }

  /// Corner angles (one-sided derivatives differ), in [0, 2pi).
  const std::vector<double>& corners() const { return corners_; }

  /// Area S0 of U*.
  double area() const { return area_; }

  bool is_polygon() const { return kind_ == Kind::Polygon; }
  const std::vector<Vec2>& polygon_vertices() const { return verts_; }
  const ControlRegion& region() const { return region_; }

  Face h2_face(bool maximal) const { return maximal ? face_max_ : face_min_; }

  /// h2(theta) - h2(anchor), evaluated without cancellation near the anchor;
  /// lets the pendulum subradical vanish exactly at its own located zeros.
  double h2_diff_anchored(double theta, double anchor) const {
    const double dz = num::angle_diff(theta, anchor);
    const double th = num::wrap_angle(theta);
    const double zw = num::wrap_angle(anchor);
    switch (kind_) {
      case Kind::Smooth:
        return h2(th) - h2(zw);
      case Kind::Disc:
        return 2.0 * r0_ * std::cos(zw + 0.5 * dz) * std::sin(0.5 * dz);
      case Kind::Polygon: {
        const std::size_t wi = wedge_index(th);
        const std::size_t n = wedge_lo_.size();
        // Valid only when the anchor lies on the closure of theta's wedge.
        const double lo = wedge_lo_[wi];
        const double width = num::wrap_angle(wedge_lo_[(wi + 1) % n] - lo);
        const double off = num::wrap_angle(zw - lo);
        if (off > width + 1e-9 && off < num::two_pi - 1e-9) return h2(th) - h2(zw);
        const Vec2 v = wedge_src_[wi];
        return v.x * std::sin(dz) / (dot(v, unit_dir(th)) * dot(v, unit_dir(zw)));
      }
    }
    return 0;
  }

  /// Polish an approximate zero of h2 - level onto the closed-form zero of
  /// the local representation (polygon wedges and discs); smooth curves are
  /// left to the bisected location.  Snaps only within a 1e-6 neighborhood.
  double snap_level_zero(double theta, double level) const {
    const double w = num::wrap_angle(theta);
    double d = 0;
    switch (kind_) {
      case Kind::Smooth:
        return theta;
      case Kind::Disc: {
        const double s = level / r0_;
        if (std::abs(s) > 1) return theta;
        const double a = std::asin(std::clamp(s, -1.0, 1.0));
        double bd = std::numeric_limits<double>::infinity();
        for (double c : {a, num::pi - a}) {
          const double dc = num::angle_diff(w, c);
          if (std::abs(dc) < std::abs(bd)) bd = dc;
        }
        d = bd;
        break;
      }
      case Kind::Polygon: {
        const Vec2 v = wedge_src_[wedge_index(w)];
        const double A = 1.0 - level * v.y, B = level * v.x;
        const double psi = std::atan2(B, A);
        d = num::angle_diff(w, psi);
        if (d > num::pi / 2) d -= num::pi;
        if (d < -num::pi / 2) d += num::pi;
        break;
      }
    }
    if (std::abs(d) > 1e-6) return theta;
    return theta - d;
  }

  /// The two crossings of {h2 = level} adjacent to theta0 (unwrapped angles
  /// strictly below/above theta0).  Requires min h2 < level < max h2.
  std::pair<double, double> level_crossings_around(double level, double theta0) const {
    const double zi = snap_level_zero(crossing_on_increasing_arc(level), level);
    const double zd = snap_level_zero(crossing_on_decreasing_arc(level), level);
    auto below = [&](double z) {
      double d = std::fmod(theta0 - z, num::two_pi);
      if (d < 0) d += num::two_pi;
      if (d < 1e-9) d += num::two_pi;  // exclude theta0 itself
      return theta0 - d;
    };
    auto above = [&](double z) {
      double d = std::fmod(z - theta0, num::two_pi);
      if (d < 0) d += num::two_pi;
      if (d < 1e-9) d += num::two_pi;
      return theta0 + d;
    };
    const double lo = std::max(below(zi), below(zd));
    const double hi = std::min(above(zi), above(zd));
    return {lo, hi};
  }

 private:
  friend class ControlRegion;
  enum class Kind { Polygon, Disc, Smooth };

  double radius_on(Vec2 v, double th) const { return 1.0 / dot(v, unit_dir(th)); }
  double deriv_on(Vec2 v, double th) const {
    const double den = dot(v, unit_dir(th));
    return (v.x * std::sin(th) - v.y * std::cos(th)) / (den * den);
  }

  std::size_t wedge_index(double th) const {
    // wedge_lo_ is sorted in [0, 2pi); wedge k covers [lo_k, lo_{k+1}).
    auto it = std::upper_bound(wedge_lo_.begin(), wedge_lo_.end(), th);
    if (it == wedge_lo_.begin()) return wedge_lo_.size() - 1;  // wraps
    return static_cast<std::size_t>(it - wedge_lo_.begin()) - 1;
  }

  void finish_polygon() {
    const std::size_t n = verts_.size();
    std::vector<double> angle(n);
    for (std::size_t i = 0; i < n; ++i) angle[i] = num::wrap_angle(std::atan2(verts_[i].y, verts_[i].x));
    // Rotate so vertex angles are increasing starting from the smallest.
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (angle[i] < angle[start]) start = i;
    std::rotate(verts_.begin(), verts_.begin() + start, verts_.end());
    std::rotate(srcs_.begin(), srcs_.begin() + start, srcs_.end());
    std::rotate(angle.begin(), angle.begin() + start, angle.end());

    // Wedge k runs from vertex k to vertex k+1; its source is the U-vertex
    // dual to the edge between them, stored alongside vertex k+1 by the
    // construction in ControlRegion::polar (srcs_[k] governs [k, k+1)).
    wedge_lo_ = angle;
    wedge_src_ = srcs_;

    corners_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Eval e = eval(angle[i]);
      if (e.corner) corners_.push_back(angle[i]);
    }
    double a2 = 0;
    for (std::size_t i = 0; i < n; ++i) a2 += cross(verts_[i], verts_[(i + 1) % n]);
    area_ = 0.5 * a2;

    // Extreme faces of h2 over the vertex set.
    auto face_of = [&](bool maximal) {
      double best = maximal ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
      for (const Vec2& w : verts_) best = maximal ? std::max(best, w.y) : std::min(best, w.y);
      std::vector<std::size_t> hit;
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(verts_[i].y - best) <= 1e-12 * (1.0 + std::abs(best))) hit.push_back(i);
      Face f;
      f.level = best;
      if (hit.size() == 1) {
        f.lo = f.hi = angle[hit[0]];
      } else {
        // Horizontal edge: the two endpoints are consecutive vertices.
        const double a0 = angle[hit[0]], a1 = angle[hit[1]];
        double d = std::fmod(a1 - a0, num::two_pi);
        if (d < 0) d += num::two_pi;
        if (d < num::pi) {
          f.lo = a0;
          f.hi = a0 + d;
        } else {
          f.lo = a1;
          f.hi = a1 + (num::two_pi - d);
        }
      }
      return f;
    };
    face_max_ = face_of(true);
    face_min_ = face_of(false);
  }

  void finish_disc() {
    area_ = num::pi * r0_ * r0_;
    face_max_ = {num::pi / 2, num::pi / 2, r0_};
    face_min_ = {3 * num::pi / 2, 3 * num::pi / 2, -r0_};
  }

  void finish_smooth() {
    area_ = 0.5 * num::integrate_adaptive(
                      [&](double th) {
                        const double r = radius(th);
                        return r * r;
                      },
                      0.0, num::two_pi, 1e-12);
    face_max_ = smooth_face(true);
    face_min_ = smooth_face(false);
  }

  Face smooth_face(bool maximal) const {
    const int grid = 2048;
    double best = maximal ? -1e300 : 1e300;
    int bi = 0;
    for (int i = 0; i < grid; ++i) {
      const double th = num::two_pi * i / grid;
      const double f = h2(th);
      if (maximal ? f > best : f < best) {
        best = f;
        bi = i;
      }
    }
    double lo = num::two_pi * (bi - 1) / grid, hi = num::two_pi * (bi + 1) / grid;
    auto f = [&](double th) { return maximal ? h2(th) : -h2(th); };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 110; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = f(d);
      }
    }
    const double th = num::wrap_angle(0.5 * (lo + hi));
    return {th, th, h2(th)};
  }

  // One crossing of h2 = level on each strictly monotone arc between faces.
  double crossing_on_increasing_arc(double level) const {
    double a = face_min_.hi, b = face_max_.lo;
    while (b <= a) b += num::two_pi;
    auto f = [&](double th) { return h2_minus_level(th, level); };
    return num::bisect(f, a, b) ;
  }
  double crossing_on_decreasing_arc(double level) const {
    double a = face_max_.hi, b = face_min_.lo;
    while (b <= a) b += num::two_pi;
    auto f = [&](double th) { return -h2_minus_level(th, level); };
    return num::bisect(f, a, b);
  }

  Kind kind_ = Kind::Disc;
  ControlRegion region_ = ControlRegion::disc(1.0);
  double r0_ = 1;                  // disc radius of U*
  std::vector<Vec2> verts_;        // polygon vertices of U*, ccw by angle
  std::vector<Vec2> srcs_;         // U-vertex governing wedge [k, k+1)
  std::vector<double> wedge_lo_;   // wedge start angles (the vertex angles)
  std::vector<Vec2> wedge_src_;
  std::vector<double> corners_;
  double area_ = 0;
  Face face_max_, face_min_;
};

inline PolarCurve ControlRegion::polar() const {
  PolarCurve p;
  p.region_ = *this;
  switch (shape_) {
    case Shape::Disc:
      p.kind_ = PolarCurve::Kind::Disc;
      p.r0_ = 1.0 / radius_;
      p.finish_disc();
      break;
    case Shape::SupportSamples:
      p.kind_ = PolarCurve::Kind::Smooth;
      p.finish_smooth();
      break;
    case Shape::Polygon:
    case Shape::Square: {
      p.kind_ = PolarCurve::Kind::Polygon;
      const std::size_t n = verts_.size();
      // Dual vertex i comes from the U-edge (v_i, v_{i+1}); the wedge that
      // starts at dual vertex i is governed by U-vertex v_{i+1}.
      for (std::size_t i = 0; i < n; ++i) {
        p.verts_.push_back(dual_verts_[i]);
        p.srcs_.push_back(verts_[(i + 1) % n]);
      }
      p.finish_polygon();
      break;
    }
  }
  return p;
}

/// Polar equation of the square region's dual, reduced to the fundamental
/// branch theta in [alpha, alpha + pi/2].  Returns (r, r'); at the corner
/// angles the right derivative is reported.
inline std::pair<double, double> square_polar_radius(double alpha, double theta) {
  if (!(alpha >= 0 && alpha < num::pi / 2))
    throw ParseError("square alpha must lie in [0, pi/2)");
  double u = std::fmod(theta - alpha, num::pi / 2);
  if (u < 0) u += num::pi / 2;
  const double a = u - num::pi / 4;  // in [-pi/4, pi/4)
  const double c = std::cos(a);
  const double r = std::sqrt(2.0) / (2.0 * c);
  const double dr = std::sqrt(2.0) * std::sin(a) / (2.0 * c * c);
  return {r, dr};
}

}  // namespace engel
