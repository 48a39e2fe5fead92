#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "engel/errors.hpp"
#include "engel/hamiltonian.hpp"

namespace engel {

enum class ExtremalTag {
  Abnormal,
  ConstantTheta,
  Isoperimetrix,
  PendMonotone,            // case 1
  PendStraightLine,        // case 2
  PendOscillate,           // case 3
  PendSeparatrixPhi3,      // case 4
  PendSeparatrixPhi3Zero,  // case 5
};

inline const char* tag_name(ExtremalTag t) {
  switch (t) {
    case ExtremalTag::Abnormal: return "Abnormal";
    case ExtremalTag::ConstantTheta: return "ConstantTheta";
    case ExtremalTag::Isoperimetrix: return "Isoperimetrix";
    case ExtremalTag::PendMonotone: return "PendMonotone";
    case ExtremalTag::PendStraightLine: return "PendStraightLine";
    case ExtremalTag::PendOscillate: return "PendOscillate";
    case ExtremalTag::PendSeparatrixPhi3: return "PendSeparatrixPhi3";
    case ExtremalTag::PendSeparatrixPhi3Zero: return "PendSeparatrixPhi3Zero";
  }
  return "?";
}

enum class Uniqueness { Unique, Family };

struct ExtremalClass {
  ExtremalTag tag = ExtremalTag::ConstantTheta;
  std::string subtag;  // "3.1", "3.2", "4.1".."4.3.2", "5.1".."5.9", else ""
  double theta0 = 0;   // meaningless for Abnormal
  std::optional<double> theta1, theta2;
  std::optional<bool> finite1, finite2;  // endpoint time integrals converge
  CasimirData casimir;
  Uniqueness uniqueness = Uniqueness::Unique;
  std::optional<double> period;  // isoperimetrix period L = 2 S0 / |phi3|
  std::vector<std::string> warnings;
  Covector phi;  // covector after optional normalization

  bool pendulum() const {
    return tag == ExtremalTag::PendMonotone || tag == ExtremalTag::PendStraightLine ||
           tag == ExtremalTag::PendOscillate || tag == ExtremalTag::PendSeparatrixPhi3 ||
           tag == ExtremalTag::PendSeparatrixPhi3Zero;
  }
};

struct ClassifyOptions {
  bool normalize = false;
};

enum class Side { Below, Above };
enum class Convergence { Finite, Infinite };

struct ConvergenceResult {
  Convergence kind;
  double exponent;  // fitted vanishing order p of the subradical
  bool ambiguous;   // p landed in the (1.3, 1.7) band
};

struct TurningPoints {
  double theta1 = 0, theta2 = 0;
  bool finite1 = true, finite2 = true;
};

namespace detail {

/// Level of h2 on which the pendulum right-hand side vanishes.
inline double h2_turning_level(const Covector& f) {
  return f.p2 - f.p3 * f.p3 / (2.0 * f.p4);
}

/// Subradical phi3^2 + 2 phi4 (h2 - phi2), evaluated through the
/// cancellation-free level difference so it vanishes exactly at its zeros.
inline double subradical(const PolarCurve& P, const Covector& f, double theta) {
  if (f.p4 == 0) return f.p3 * f.p3;
  return 2.0 * f.p4 * P.h2_minus_level(theta, h2_turning_level(f));
}

}  // namespace detail

/// Classify whether the time integral t(theta) stays bounded as theta
/// approaches the turning point theta_i from the given side, by a log-log fit
/// of the subradical's vanishing exponent at geometric offsets 1e-3..1e-6.
inline ConvergenceResult integral_convergence(const Covector& f, const PolarCurve& P,
                                              double theta_i, Side side) {
  std::vector<double> offs, vals;
  for (int j = 0; j <= 12; ++j) {
    const double d = 1e-3 * std::pow(10.0, -0.25 * j);
    const double th = theta_i + (side == Side::Above ? d : -d);
    offs.push_back(d);
    vals.push_back(std::abs(detail::subradical(P, f, th)));
  }
  const double p = num::log_log_slope(offs, vals);
  if (!std::isfinite(p)) return {Convergence::Infinite, p, true};
  const bool ambiguous = p > 1.3 && p < 1.7;
  return {p >= 1.5 ? Convergence::Infinite : Convergence::Finite, p, ambiguous};
}

inline ExtremalClass classify(const Covector& phi, const ControlRegion& U,
                              const PolarCurve& P, const ClassifyOptions& opts = {}) {
  if (phi.p1 == 0 && phi.p2 == 0 && phi.p3 == 0 && phi.p4 == 0) throw ZeroCovector();

  ExtremalClass cls;
  if (phi.p1 == 0 && phi.p2 == 0) {
    if (phi.p3 != 0) throw AbnormalWithNonzeroH();
    cls.tag = ExtremalTag::Abnormal;
    cls.phi = phi;
    cls.casimir = casimirs(phi, P);
    return cls;
  }

  Covector f = phi;
  const double s = U.support({f.p1, f.p2});
  if (opts.normalize) {
    f = {f.p1 / s, f.p2 / s, f.p3 / s, f.p4 / s};
  } else if (std::abs(s - 1.0) > 1e-9) {
    throw CovectorNotOnPolar(s);
  }
  cls.phi = f;
  cls.theta0 = num::wrap_angle(std::atan2(f.p2, f.p1));
  cls.casimir = casimirs(f, P);

  if (f.p3 == 0 && f.p4 == 0) {
    cls.tag = ExtremalTag::ConstantTheta;
    return cls;
  }
  if (f.p4 == 0) {
    cls.tag = ExtremalTag::Isoperimetrix;
    cls.period = 2.0 * P.area() / std::abs(f.p3);
    return cls;
  }

  const double E = cls.casimir.E, E0 = cls.casimir.E0, Em1 = cls.casimir.Em1;
  const double tol0 = 1e-9 * (1.0 + std::abs(E0));
  const double tolm = 1e-9 * (1.0 + std::abs(Em1));
  const double theta0 = cls.theta0;

  auto attach_convergence = [&](double th, Side side) {
    const ConvergenceResult c = integral_convergence(f, P, th, side);
    if (c.ambiguous)
      cls.warnings.push_back("ambiguous vanishing exponent p=" + std::to_string(c.exponent) +
                             " at theta=" + std::to_string(th));
    return c.kind == Convergence::Finite;
  };

  if (std::abs(E - E0) <= tol0) {
    // Separatrix level: the subradical is non-negative and vanishes exactly
    // on the face of U* where -phi4 h2 attains its maximum.
    const PolarCurve::Face face = P.h2_face(f.p4 < 0);
    if (f.p3 != 0) {
      cls.tag = ExtremalTag::PendSeparatrixPhi3;
      const double th1 = face.hi + num::two_pi * std::floor((theta0 - face.hi) / num::two_pi);
      const double th2 = face.lo + num::two_pi * std::ceil((theta0 - face.lo) / num::two_pi);
      cls.theta1 = th1;
      cls.theta2 = th2;
      cls.finite1 = attach_convergence(th1, Side::Above);
      cls.finite2 = attach_convergence(th2, Side::Below);
      if (!*cls.finite1 && !*cls.finite2) {
        cls.subtag = "4.1";
        cls.uniqueness = Uniqueness::Unique;
      } else if (*cls.finite1 != *cls.finite2) {
        cls.subtag = "4.2";
        cls.uniqueness = Uniqueness::Family;
      } else {
        cls.subtag = face.degenerate() ? "4.3.1" : "4.3.2";
        cls.uniqueness = Uniqueness::Family;
      }
      return cls;
    }
    cls.tag = ExtremalTag::PendSeparatrixPhi3Zero;
    // Flat segment [theta1, theta2] containing theta0 on which h2 = phi2.
    const double mid = 0.5 * (face.lo + face.hi);
    const double k = std::round((theta0 - mid) / num::two_pi);
    const double flo = face.lo + num::two_pi * k, fhi = face.hi + num::two_pi * k;
    cls.theta1 = flo;
    cls.theta2 = fhi;
    const double pos_tol = 1e-4;
    const bool at_lo = std::abs(theta0 - flo) <= pos_tol;
    const bool at_hi = std::abs(theta0 - fhi) <= pos_tol;
    if (!at_lo && !at_hi) {
      cls.subtag = "5.2";
      cls.uniqueness = Uniqueness::Unique;
      return cls;
    }
    const bool down = attach_convergence(flo, Side::Below);
    const bool up = attach_convergence(fhi, Side::Above);
    cls.finite1 = down;
    cls.finite2 = up;
    if (face.degenerate()) {
      if (!down && !up) cls.subtag = "5.1";
      else if (up && !down) cls.subtag = "5.5";
      else if (down && !up) cls.subtag = "5.6";
      else cls.subtag = "5.9";
    } else if (at_lo) {
      cls.subtag = down ? "5.8" : "5.3";
    } else {
      cls.subtag = up ? "5.7" : "5.4";
    }
    cls.uniqueness = (cls.subtag == "5.1" || cls.subtag == "5.2" || cls.subtag == "5.3" ||
                      cls.subtag == "5.4")
                         ? Uniqueness::Unique
                         : Uniqueness::Family;
    return cls;
  }

  if (E > E0) {
    cls.tag = ExtremalTag::PendMonotone;
    cls.subtag = "1";
    return cls;
  }

  if (f.p3 == 0 && std::abs(E - Em1) <= tolm) {
    cls.tag = ExtremalTag::PendStraightLine;
    cls.subtag = "2";
    return cls;
  }

  // Oscillation band Em1 < E < E0.
  cls.tag = ExtremalTag::PendOscillate;
  const double level = detail::h2_turning_level(f);
  if (f.p3 != 0) {
    cls.subtag = "3.1";
    const auto [lo, hi] = P.level_crossings_around(level, theta0);
    if (f.p3 > 0) {
      cls.theta1 = lo;
      cls.theta2 = hi;
    } else {
      cls.theta1 = hi;
      cls.theta2 = lo;
    }
    const double t1 = *cls.theta1, t2 = *cls.theta2;
    cls.finite1 = attach_convergence(t1, t1 < t2 ? Side::Above : Side::Below);
    cls.finite2 = attach_convergence(t2, t1 < t2 ? Side::Below : Side::Above);
  } else {
    cls.subtag = "3.2";
    const auto [lo, hi] = P.level_crossings_around(level, theta0);
    // Companion angle on the side where the subradical is positive.
    const double probe_up = detail::subradical(P, f, 0.5 * (theta0 + hi));
    const double th2 = probe_up > 0 ? hi : lo;
    cls.theta1 = P.snap_level_zero(theta0, level);
    cls.theta2 = th2;
    cls.finite1 = attach_convergence(theta0, th2 > theta0 ? Side::Above : Side::Below);
    cls.finite2 = attach_convergence(th2, th2 > theta0 ? Side::Below : Side::Above);
  }
  return cls;
}

inline ExtremalClass classify(const Covector& phi, const ControlRegion& U,
                              const ClassifyOptions& opts = {}) {
  return classify(phi, U, U.polar(), opts);
}

/// Turning points of theta for the oscillating and separatrix classes, with
/// the per-case endpoint convention of the main theorem.
inline TurningPoints turning_points(const Covector& phi, const PolarCurve& P,
                                    double theta0) {
  const ExtremalClass cls = classify(phi, P.region(), P);
  (void)theta0;
  if (!cls.theta1 || !cls.theta2) throw NoTurningPoint();
  return {*cls.theta1, *cls.theta2, cls.finite1.value_or(true),
          cls.finite2.value_or(true)};
}

}  // namespace engel
