#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "engel/convex.hpp"

namespace engel {

/// Initial adjoint data psi(0) = (phi1, phi2, phi3, phi4).
struct Covector {
  double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
};

/// Hamiltonian lifts h_i = psi(X_i) along a trajectory.  M is the maximized
/// Hamiltonian (0 for abnormal, normalized to 1 otherwise).
struct HamiltonianLifts {
  double h1 = 0, h2 = 0, h3 = 0, h4 = 0;
  double M = 1;
};

/// Coordinate components of the adjoint covector psi(t).
struct AdjointState {
  double psi1 = 0, psi2 = 0, psi3 = 0, psi4 = 0;
};

/// Conserved quantity E together with the separatrix thresholds
/// E0 = max over U* of (-phi4 h2) and Em1 = min of the same.
struct CasimirData {
  double E = 0, E0 = 0, Em1 = 0;
};

/// Lifts from the closed-form adjoint solution; v does not enter.
inline HamiltonianLifts lifts_from_state(const Covector& f, double x, double y,
                                         double z) {
  HamiltonianLifts h;
  const double a = f.p3 + 0.5 * f.p4 * x;
  h.h1 = f.p1 - a * y - f.p4 * z;
  h.h2 = f.p2 + a * x;
  h.h3 = f.p3 + f.p4 * x;
  h.h4 = f.p4;
  h.M = (f.p1 == 0 && f.p2 == 0) ? 0.0 : 1.0;
  return h;
}

inline AdjointState adjoint_from_state(const Covector& f, double x, double y,
                                       double z) {
  AdjointState p;
  p.psi4 = f.p4;
  p.psi3 = f.p3 + 0.5 * f.p4 * x;
  p.psi2 = f.p2 + 0.5 * f.p3 * x + f.p4 * x * x / 6.0;
  p.psi1 = f.p1 - 0.5 * f.p3 * y - f.p4 * (x * y + 3.0 * z) / 6.0;
  return p;
}

inline CasimirData casimirs(const Covector& f, const PolarCurve& P) {
  CasimirData c;
  c.E = 0.5 * f.p3 * f.p3 - f.p2 * f.p4;
  if (f.p4 == 0) {
    c.E0 = c.Em1 = 0;
    return c;
  }
  const double hmax = P.h2_face(true).level;
  const double hmin = P.h2_face(false).level;
  c.E0 = std::max(-f.p4 * hmax, -f.p4 * hmin);
  c.Em1 = std::min(-f.p4 * hmax, -f.p4 * hmin);
  return c;
}

/// Right-hand side of the pendulum equation:
/// thetadot^2 = (phi3^2 + 2 phi4 (r(theta) sin theta - phi2)) / r^4(theta).
/// Negative values mark dynamically forbidden angles.
inline double pendulum_rhs_sq(const PolarCurve& P, const Covector& f,
                              double theta) {
  const double r = P.radius(theta);
  const double h2 = r * std::sin(num::wrap_angle(theta));
  const double g = f.p3 * f.p3 + 2.0 * f.p4 * (h2 - f.p2);
  return g / (r * r * r * r);
}

/// Resolution of the control at corners of U* (flat edges of U), where the
/// admissible set is a segment of the boundary of U.
struct SelectorPolicy {
  enum class Mode { Midpoint, MinAngle, MaxAngle, Schedule };
  Mode mode = Mode::Midpoint;
  /// For Mode::Schedule: piecewise-constant edge parameter lambda(t) given as
  /// (t_until, lambda) pairs; lambda = 0 is the control reached from below
  /// (left derivative), lambda = 1 the one from above.  The last lambda
  /// persists for t beyond the final breakpoint.
  std::vector<std::pair<double, double>> schedule;

  double lambda_at(double t) const {
    if (schedule.empty()) return 0.5;
    for (const auto& [until, lam] : schedule)
      if (t < until) return lam;
    return schedule.back().second;
  }

  Vec2 pick(Vec2 u_minus, Vec2 u_plus, double t) const {
    switch (mode) {
      case Mode::Midpoint:
        return 0.5 * (u_minus + u_plus);
      case Mode::MinAngle:
      case Mode::MaxAngle: {
        const double am = std::atan2(u_minus.y, u_minus.x);
        double ap = std::atan2(u_plus.y, u_plus.x);
        // The admissible edge subtends less than pi about the origin.
        while (ap - am > num::pi) ap -= num::two_pi;
        while (am - ap > num::pi) ap += num::two_pi;
        const bool plus_min = ap < am;
        if (mode == Mode::MinAngle) return plus_min ? u_plus : u_minus;
        return plus_min ? u_minus : u_plus;
      }
      case Mode::Schedule: {
        const double lam = lambda_at(t);
        return (1.0 - lam) * u_minus + lam * u_plus;
      }
    }
    return 0.5 * (u_minus + u_plus);
  }
};

/// Extremal control reconstructed from the polar angle of the lift vector.
/// Off corners this is u = (r' sin + r cos, r sin - r' cos)/r^2; at corners
/// the two one-sided derivatives span the admissible edge and the selector
/// picks a point of it.
inline Vec2 control_from_theta(const PolarCurve& P, double theta,
                               const SelectorPolicy& sel = {}, double t = 0) {
  const auto e = P.eval(theta);
  const double th = num::wrap_angle(theta);
  const double c = std::cos(th), s = std::sin(th);
  const double r2 = e.r * e.r;
  const Vec2 um = {(e.dminus * s + e.r * c) / r2, (e.r * s - e.dminus * c) / r2};
  if (!e.corner) return um;
  const Vec2 up = {(e.dplus * s + e.r * c) / r2, (e.r * s - e.dplus * c) / r2};
  return sel.pick(um, up, t);
}

}  // namespace engel
