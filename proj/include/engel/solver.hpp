#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "engel/classify.hpp"
#include "engel/group.hpp"

namespace engel {

namespace detail {

/// Shared data of the theta dynamics: the subradical g and its square root.
/// g is evaluated through the cancellation-free level difference of h2, so it
/// vanishes exactly at the located turning set.
struct PendGeom {
  std::shared_ptr<const PolarCurve> P;
  Covector phi;
  bool phi4zero = false;
  double level = 0;   // h2 level of the turning set (phi4 != 0)
  double gscale = 1;  // magnitude scale for endpoint detection
  std::vector<double> anchors;  // located zeros; g is anchored there

  static PendGeom make(std::shared_ptr<const PolarCurve> Pp, const Covector& f) {
    PendGeom G;
    G.P = std::move(Pp);
    G.phi = f;
    G.phi4zero = (f.p4 == 0);
    if (!G.phi4zero) G.level = h2_turning_level(f);
    const double span =
        std::abs(G.P->h2_face(true).level - G.P->h2_face(false).level);
    G.gscale = f.p3 * f.p3 + 2.0 * std::abs(f.p4) * (span + 1.0) + 1e-30;
    return G;
  }

  double g(double th) const {
    if (phi4zero) return phi.p3 * phi.p3;
    for (double Z : anchors)
      if (std::abs(num::angle_diff(th, Z)) < 0.05)
        return 2.0 * phi.p4 * P->h2_diff_anchored(th, Z);
    return 2.0 * phi.p4 * P->h2_minus_level(th, level);
  }
  double sqrtg(double th) const {
    const double gg = g(th);
    return gg > 0 ? std::sqrt(gg) : 0.0;
  }
  // Liberal threshold: the endpoint substitution is harmless when g does
  // not actually vanish, and steep near-zeros benefit from it too.
  bool vanishes_at(double th) const { return g(th) <= 1e-6 * gscale; }
};

enum class Num { Time, U1, U2 };

inline double branch_numerator(const PolarCurve& P, Num which, double th) {
  if (which == Num::Time) {
    const double r = P.radius(th);
    return r * r;
  }
  const auto e = P.eval(th);
  const double w = num::wrap_angle(th);
  const double c = std::cos(w), s = std::sin(w);
  const double dr = 0.5 * (e.dminus + e.dplus);
  return which == Num::U2 ? (e.r * s - dr * c) : (dr * s + e.r * c);
}

/// Oriented integral of numer(theta)/sqrt(g) over [a, b], split at corner
/// instances, with the s^2 substitution where g vanishes at an endpoint.
inline double branch_integral_fn(const PendGeom& G,
                                 const std::function<double(double)>& numer,
                                 double a, double b) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> cuts{a};
  for (double c0 : G.P->corners()) {
    double c = c0 + num::two_pi * std::ceil((a - c0) / num::two_pi);
    for (; c < b; c += num::two_pi)
      if (c > a + 1e-12 && c < b - 1e-12) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  auto f = [&](double th) { return numer(th) / G.sqrtg(th); };
  double total = 0;
  const bool va = G.vanishes_at(a), vb = G.vanishes_at(b);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += num::integrate_sqrt_endpoints(f, cuts[i], cuts[i + 1], (i == 0) && va,
                                           (i + 2 == cuts.size()) && vb, 1e-10);
  return sign * total;
}

inline double branch_integral(const PendGeom& G, Num which, double a, double b) {
  auto numer = [&](double th) { return branch_numerator(*G.P, which, th); };
  return branch_integral_fn(G, numer, a, b);
}

/// One monotone lobe of the theta dynamics: g > 0 on (lo, hi).  Holds a
/// monotone cubic tabulation of tau(theta) = int r^2/sqrt(g) d theta; the
/// cubic inverse is refined by Newton steps against the true quadrature.
struct Branch {
  PendGeom G;
  double lo = 0, hi = 0;
  bool lo_sing = false, hi_sing = false;    // g vanishes at the endpoint
  bool lo_finite = true, hi_finite = true;  // the time integral converges there
  num::MonotoneCubic tab;

  double tau_lo() const { return tab.y.front(); }
  double tau_hi() const { return tab.y.back(); }
  double full_time() const { return tau_hi() - tau_lo(); }

  double tau_of_theta(double th) const {
    if (th <= tab.x.front()) return tab.y.front();
    if (th >= tab.x.back()) return tab.y.back();
    const std::size_t k = tab.cell(th);
    if (th - tab.x[k] <= tab.x[k + 1] - th)
      return tab.y[k] + branch_integral(G, Num::Time, tab.x[k], th);
    return tab.y[k + 1] - branch_integral(G, Num::Time, th, tab.x[k + 1]);
  }

  double theta_of_tau(double tau) const {
    if (tau <= tab.y.front()) return tab.x.front();
    if (tau >= tab.y.back()) return tab.x.back();
    const std::size_t n = tab.x.size();
    // Inside the cells adjacent to a finite turning point the cubic model is
    // poor and the Newton factor sqrt(g) degenerates; invert there in the
    // substituted coordinate s = sqrt(distance), where tau(s) is smooth with
    // a derivative bounded away from zero.
    if (hi_sing && hi_finite && tau > tab.y[n - 2])
      return invert_near_end(tau, hi, tab.x[n - 2], -1);
    if (lo_sing && lo_finite && tau < tab.y[1])
      return invert_near_end(tau, lo, tab.x[1], +1);
    double th = tab.solve(tau);
    for (int it = 0; it < 2; ++it) {
      const double resid = tau_of_theta(th) - tau;
      const double r = G.P->radius(th);
      double thn = th - resid * G.sqrtg(th) / (r * r);
      th = std::clamp(thn, lo, hi);
    }
    return th;
  }

  // Solve tau(end + side*s^2) = tau by safeguarded Newton in s; side = +1
  // inverts off the lower endpoint, -1 off the upper one.
  double invert_near_end(double tau, double end, double inner, int side) const {
    const double smax = std::sqrt(std::abs(inner - end));
    double slo = 0.0, shi = smax;
    double s = 0.5 * smax;
    for (int it = 0; it < 60; ++it) {
      const double th = end + side * s * s;
      const double resid = tau_of_theta(th) - tau;
      const double rising = side > 0 ? 1.0 : -1.0;  // d tau / d s sign
      if (resid * rising > 0)
        shi = s;
      else
        slo = s;
      const double r = G.P->radius(th);
      const double dtau_ds = rising * 2.0 * std::max(s, 1e-12) * r * r /
                             std::max(G.sqrtg(th), 1e-300);
      double sn = s - resid / dtau_ds;
      if (!(sn > slo && sn < shi)) sn = 0.5 * (slo + shi);
      if (std::abs(sn - s) <= 1e-14 * (1.0 + smax)) return end + side * sn * sn;
      s = sn;
    }
    return end + side * s * s;
  }
};

inline Branch build_branch(const PendGeom& G, double lo, double hi, bool lo_sing,
                           bool lo_finite, bool hi_sing, bool hi_finite) {
  Branch B;
  B.G = G;
  B.G.anchors.clear();
  if (lo_sing) B.G.anchors.push_back(lo);
  if (hi_sing) B.G.anchors.push_back(hi);
  B.lo = lo;
  B.hi = hi;
  B.lo_sing = lo_sing;
  B.hi_sing = hi_sing;
  B.lo_finite = !lo_sing || lo_finite;
  B.hi_finite = !hi_sing || hi_finite;

  const double width = hi - lo;
  std::vector<double> nodes;
  const int base =
      std::max<int>(32, static_cast<int>(std::ceil(width / (num::two_pi / 256))));
  for (int i = 0; i <= base; ++i) nodes.push_back(lo + width * i / base);
  for (double c0 : G.P->corners()) {
    double c = c0 + num::two_pi * std::ceil((lo - c0) / num::two_pi);
    for (; c < hi; c += num::two_pi)
      if (c > lo && c < hi) nodes.push_back(c);
  }
  const double W = std::min(width / 3.0, 0.5);
  if (lo_sing) {
    if (B.lo_finite)
      for (int j = 1; j < 44; ++j) {
        const double s = std::sqrt(W) * j / 44.0;
        nodes.push_back(lo + s * s);
      }
    else
      for (int j = 0; j <= 46; ++j) nodes.push_back(lo + W * std::pow(2.0, -j));
  }
  if (hi_sing) {
    if (B.hi_finite)
      for (int j = 1; j < 44; ++j) {
        const double s = std::sqrt(W) * j / 44.0;
        nodes.push_back(hi - s * s);
      }
    else
      for (int j = 0; j <= 46; ++j) nodes.push_back(hi - W * std::pow(2.0, -j));
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<double> th;
  for (double t : nodes) {
    t = std::clamp(t, lo, hi);
    // A divergent endpoint is excluded from the table: tau is unbounded there.
    if (!B.lo_finite && t <= lo + 1e-15 * (1 + std::abs(lo))) continue;
    if (!B.hi_finite && t >= hi - 1e-15 * (1 + std::abs(hi))) continue;
    if (th.empty() || t - th.back() > 1e-13 * (1.0 + std::abs(t))) th.push_back(t);
  }

  std::vector<double> tau(th.size(), 0.0);
  for (std::size_t i = 0; i + 1 < th.size(); ++i)
    tau[i + 1] = tau[i] + branch_integral(B.G, Num::Time, th[i], th[i + 1]);

  std::vector<double> slope(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double g = B.G.g(th[i]);
    const double r = B.G.P->radius(th[i]);
    slope[i] =
        (g > 0) ? r * r / std::sqrt(g) : std::numeric_limits<double>::infinity();
  }
  B.tab.build(std::move(th), std::move(tau), std::move(slope));
  return B;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Theta profile
// ---------------------------------------------------------------------------

/// One move of a non-unique separatrix trajectory.  Entries are consumed at
/// the endpoint events of the traced time direction, in order; the first
/// entry applies to the initial exit when theta0 itself sits on the turning
/// set.  reflect = false continues into the adjacent period, which is
/// admissible only across a degenerate face with a finite-time far side.
struct ScheduleEntry {
  int endpoint = 1;  // 1 = theta1-side, 2 = theta2-side
  double dwell = 0;
  bool reflect = false;
  int shift_k = 0;  // +-1 to continue (must match travel direction), else 0
};
using FamilySchedule = std::vector<ScheduleEntry>;

struct ThetaProfile {
  struct Segment {
    double t0 = 0, t1 = 0;
    bool constant = false;
    double theta_c = 0;  // constant segments
    int branch = 0;      // monotone segments
    int dir = 1;         // forward-time direction of theta
    double shift = 0;    // 2*pi*k instance shift
    double t_ref = 0, tau_ref = 0;
  };

  std::vector<Segment> segments;  // contiguous, ordered by time
  std::vector<detail::Branch> branches;
  std::optional<double> period;
  std::vector<std::pair<double, double>> sigma_samples;  // diagnostic (t, sigma)

  const Segment& segment_at(double t) const {
    std::size_t lo = 0, hi = segments.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (t > segments[mid].t1)
        lo = mid + 1;
      else
        hi = mid;
    }
    return segments[lo];
  }

  double theta(double t) const {
    const Segment& s = segment_at(t);
    if (s.constant) return s.theta_c;
    const detail::Branch& B = branches[s.branch];
    return B.theta_of_tau(s.tau_ref + s.dir * (t - s.t_ref)) + s.shift;
  }

  int theta_dot_sign(double t) const {
    const Segment& s = segment_at(t);
    return s.constant ? 0 : s.dir;
  }
};

namespace detail {

/// Doubled sector area sigma(theta) = int_0^theta r^2, periodic extension.
inline double sigma_of_theta(const PolarCurve& P, double theta) {
  const double k = std::floor(theta / num::two_pi);
  const double rem = theta - num::two_pi * k;
  auto f = [&](double th) {
    const double r = P.radius(th);
    return r * r;
  };
  return 2.0 * P.area() * k + num::integrate_adaptive(f, 0.0, rem, 1e-11);
}

struct ProfileBuilder {
  const ExtremalClass& cls;
  std::shared_ptr<const PolarCurve> P;
  double horizon = 0;
  const FamilySchedule& schedule;

  ThetaProfile prof;
  std::size_t sched_idx = 0;
  int lo_event_id = 1, hi_event_id = 2;

  void require_no_schedule() const {
    if (!schedule.empty())
      throw ScheduleInvalid("schedule supplied for a unique class");
  }

  void constant_profile(double theta_c) {
    push_const(-horizon - 1, horizon + 1, theta_c);
  }

  void single_segment(detail::Branch&& B, double tau0, int dir) {
    prof.branches.push_back(std::move(B));
    prof.segments.push_back(
        {-horizon - 1, horizon + 1, false, 0, 0, dir, 0.0, 0.0, tau0});
  }

  void push_mono(double t0, double t1, int fwd_dir, double shift, double t_ref,
                 double tau_ref) {
    if (t1 <= t0) return;
    prof.segments.push_back({t0, t1, false, 0, 0, fwd_dir, shift, t_ref, tau_ref});
  }
  void push_const(double t0, double t1, double theta_c) {
    if (t1 <= t0) return;
    prof.segments.push_back({t0, t1, true, theta_c, 0, 1, 0, 0, 0});
  }

  // Record a monotone run of march time [ta, tb] as a forward-time segment.
  void record_mono(int tsign, double ta, double tb, int dth, double shift,
                   double tref, double tauref) {
    if (tsign > 0)
      push_mono(ta, std::min(tb, horizon + 1), dth, shift, tref, tauref);
    else
      push_mono(std::max(-tb, -horizon - 1), -ta, -dth, shift, -tref, tauref);
  }
  void record_const(int tsign, double ta, double tb, double theta_c) {
    if (tsign > 0)
      push_const(ta, std::min(tb, horizon + 1), theta_c);
    else
      push_const(std::max(-tb, -horizon - 1), -ta, theta_c);
  }

  /// March the theta dynamics over instances of one canonical branch.
  /// tsign = +1 marches forward in time from t = 0, -1 backward; only the
  /// traced side consumes the schedule.  When start_at_endpoint is set the
  /// walk begins with an exit event from the turning set (case-5 start); the
  /// initial exit legality is passed explicitly because on a non-degenerate
  /// face only the end theta0 sits on can be exited.
  void march(double tau0, double shift0, int theta_dir0, bool start_at_endpoint,
             bool init_up_legal, bool init_dn_legal, int tsign, bool use_schedule,
             bool face_degenerate) {
    const detail::Branch& br = prof.branches[0];
    double t = 0;
    double tau = tau0;
    double shift = shift0;
    int d = theta_dir0;

    if (start_at_endpoint) {
      double dwell = 0;
      int exit_dir = d;
      bool entry_given = false;
      if (use_schedule && sched_idx < schedule.size()) {
        const ScheduleEntry& e = schedule[sched_idx++];
        if (e.dwell < 0) throw ScheduleInvalid("negative dwell");
        if (e.endpoint != 1 && e.endpoint != 2)
          throw ScheduleInvalid("endpoint id must be 1 or 2");
        exit_dir = (e.endpoint == hi_event_id) ? -1 : +1;
        // endpoint ids: the canonical gap's lower end carries lo_event_id and
        // exits upward; its upper end carries hi_event_id and exits downward.
        dwell = e.dwell;
        entry_given = true;
      }
      if (exit_dir > 0 && !init_up_legal) {
        if (entry_given) throw ScheduleInvalid("exit through an inadmissible endpoint");
        exit_dir = -1;
      }
      if (exit_dir < 0 && !init_dn_legal) {
        if (entry_given) throw ScheduleInvalid("exit through an inadmissible endpoint");
        exit_dir = +1;
      }
      const double theta_start =
          (exit_dir > 0) ? br.lo + shift : br.hi + (shift - num::two_pi);
      if (dwell > 0) {
        record_const(tsign, t, t + dwell, theta_start);
        t += dwell;
      }
      if (exit_dir > 0) {
        tau = br.tau_lo();
        d = +1;
      } else {
        tau = br.tau_hi();
        d = -1;
        shift -= num::two_pi;
      }
    }

    int guard = 0;
    while (t <= horizon && ++guard < 100000) {
      const bool heading_hi = d > 0;
      const bool end_sing = heading_hi ? br.hi_sing : br.lo_sing;
      const bool end_fin = heading_hi ? br.hi_finite : br.lo_finite;
      if (!end_sing || !end_fin) {
        // Either a wide branch (no turning point ahead) or an asymptotic
        // approach to a divergent endpoint: one segment to the horizon.
        record_mono(tsign, t, horizon + 1, d, shift, t, tau);
        return;
      }
      const double dt = heading_hi ? (br.tau_hi() - tau) : (tau - br.tau_lo());
      const double t_arr = t + dt;
      record_mono(tsign, t, t_arr, d, shift, t, tau);
      if (t_arr > horizon) return;

      const int event_id = heading_hi ? hi_event_id : lo_event_id;
      const bool cont_legal =
          face_degenerate && (heading_hi ? br.lo_finite : br.hi_finite);
      double dwell = 0;
      bool reflect;
      if (use_schedule && sched_idx < schedule.size()) {
        const ScheduleEntry& e = schedule[sched_idx++];
        if (e.dwell < 0) throw ScheduleInvalid("negative dwell");
        if (e.endpoint != event_id)
          throw ScheduleInvalid("schedule entry endpoint does not match the arrival");
        dwell = e.dwell;
        if (e.reflect) {
          if (e.shift_k != 0)
            throw ScheduleInvalid("reflect entries must have shift_k = 0");
          reflect = true;
        } else {
          if (!cont_legal)
            throw ScheduleInvalid("continuation is not admissible at this endpoint");
          if (e.shift_k != 0 && e.shift_k != d)
            throw ScheduleInvalid("shift_k must be 0 or match the travel direction");
          reflect = false;
        }
      } else {
        reflect = !cont_legal;
      }
      const double theta_arr = (heading_hi ? br.hi : br.lo) + shift;
      if (dwell > 0) record_const(tsign, t_arr, t_arr + dwell, theta_arr);
      t = t_arr + dwell;
      if (reflect) {
        d = -d;
        tau = heading_hi ? br.tau_hi() : br.tau_lo();
      } else if (heading_hi) {
        shift += num::two_pi;
        tau = br.tau_lo();
      } else {
        shift -= num::two_pi;
        tau = br.tau_hi();
      }
    }
  }

  void finalize() {
    std::sort(prof.segments.begin(), prof.segments.end(),
              [](const ThetaProfile::Segment& a, const ThetaProfile::Segment& b) {
                return a.t0 < b.t0;
              });
    int count = 0;
    for (const auto& s : prof.segments) {
      if (++count > 64) break;
      const double th =
          s.constant ? s.theta_c
                     : prof.branches[s.branch].theta_of_tau(s.tau_ref) + s.shift;
      prof.sigma_samples.emplace_back(s.t0, sigma_of_theta(*P, th));
    }
  }
};

}  // namespace detail

/// Construct theta(t) over [-|T|, |T|] for a classified covector.  The
/// schedule applies to endpoint events on the sign(T) side and must be empty
/// for classes with a unique theta(t).
inline ThetaProfile theta_profile(const ExtremalClass& cls, const Covector& phi,
                                  const PolarCurve& P, double T,
                                  const FamilySchedule& schedule = {}) {
  (void)phi;
  if (cls.tag == ExtremalTag::Abnormal) throw OutsideBranch(0.0);
  if (T == 0) throw ParseError("horizon T must be nonzero");
  auto Pp = std::make_shared<const PolarCurve>(P);
  detail::ProfileBuilder b{cls, Pp, std::abs(T) + 1e-9, schedule};
  const Covector f = cls.phi;
  const bool forward_traced = T > 0;

  switch (cls.tag) {
    case ExtremalTag::ConstantTheta:
    case ExtremalTag::PendStraightLine: {
      b.require_no_schedule();
      b.constant_profile(cls.theta0);
      break;
    }
    case ExtremalTag::Isoperimetrix:
    case ExtremalTag::PendMonotone: {
      b.require_no_schedule();
      detail::PendGeom G = detail::PendGeom::make(Pp, f);
      const double turn = std::abs(detail::branch_integral(
          G, detail::Num::Time, cls.theta0, cls.theta0 + num::two_pi));
      int K = static_cast<int>(std::ceil((b.horizon + 1.0) / turn)) + 1;
      K = std::min(K, 64);
      detail::Branch B =
          detail::build_branch(G, cls.theta0 - num::two_pi * K,
                               cls.theta0 + num::two_pi * K, false, true, false, true);
      const double tau0 = B.tau_of_theta(cls.theta0);
      b.single_segment(std::move(B), tau0, f.p3 > 0 ? +1 : -1);
      if (cls.tag == ExtremalTag::Isoperimetrix && cls.period) b.prof.period = cls.period;
      break;
    }
    case ExtremalTag::PendOscillate: {
      b.require_no_schedule();
      detail::PendGeom G = detail::PendGeom::make(Pp, f);
      const double t1 = *cls.theta1, t2 = *cls.theta2;
      const double lo = std::min(t1, t2), hi = std::max(t1, t2);
      b.prof.branches.push_back(
          detail::build_branch(G, lo, hi, true, true, true, true));
      const detail::Branch& BR = b.prof.branches[0];
      const bool endpoint_start = (f.p3 == 0);  // 3.2 starts at rest on theta1
      double th0u = cls.theta0;
      if (endpoint_start)
        th0u = (std::abs(num::angle_diff(cls.theta0, lo)) < 1e-9) ? lo : hi;
      const double tau0 = BR.tau_of_theta(th0u);
      const int dir0 = (f.p3 != 0) ? (f.p3 > 0 ? +1 : -1) : (t2 > t1 ? +1 : -1);
      b.march(tau0, 0.0, dir0, false, false, false, +1, false, false);
      b.march(tau0, 0.0, endpoint_start ? dir0 : -dir0, false, false, false, -1,
              false, false);
      b.prof.period = 2.0 * BR.full_time();
      break;
    }
    case ExtremalTag::PendSeparatrixPhi3: {
      if (cls.uniqueness == Uniqueness::Unique) b.require_no_schedule();
      detail::PendGeom G = detail::PendGeom::make(Pp, f);
      const PolarCurve::Face face = P.h2_face(f.p4 < 0);
      const double glo = face.hi, ghi = face.lo + num::two_pi;
      b.prof.branches.push_back(detail::build_branch(G, glo, ghi, true,
                                                     cls.finite1.value_or(false), true,
                                                     cls.finite2.value_or(false)));
      const double k = std::floor((cls.theta0 - glo) / num::two_pi);
      const double shift = num::two_pi * k;
      const double tau0 = b.prof.branches[0].tau_of_theta(cls.theta0 - shift);
      const int dir0 = f.p3 > 0 ? +1 : -1;
      b.march(tau0, shift, dir0, false, false, false, +1, forward_traced,
              face.degenerate());
      b.march(tau0, shift, -dir0, false, false, false, -1, !forward_traced,
              face.degenerate());
      break;
    }
    case ExtremalTag::PendSeparatrixPhi3Zero: {
      if (cls.uniqueness == Uniqueness::Unique) {
        b.require_no_schedule();
        b.constant_profile(cls.theta0);
        break;
      }
      detail::PendGeom G = detail::PendGeom::make(Pp, f);
      const PolarCurve::Face face = P.h2_face(f.p4 < 0);
      const double glo = face.hi, ghi = face.lo + num::two_pi;
      const bool up_fin = cls.finite2.value_or(false);
      const bool dn_fin = cls.finite1.value_or(false);
      b.prof.branches.push_back(
          detail::build_branch(G, glo, ghi, true, up_fin, true, dn_fin));
      b.lo_event_id = 2;  // the gap's lower end is the theta2-side of the face
      b.hi_event_id = 1;
      const double k =
          std::round((cls.theta0 - 0.5 * (face.lo + face.hi)) / num::two_pi);
      const double shift = num::two_pi * k;
      const double pos_tol = 1e-4;
      const bool deg = face.degenerate();
      const bool at_hi = deg || std::abs(cls.theta0 - (face.hi + shift)) <= pos_tol;
      const bool at_lo = deg || std::abs(cls.theta0 - (face.lo + shift)) <= pos_tol;
      const bool up_legal = up_fin && at_hi;
      const bool dn_legal = dn_fin && at_lo;
      const int dfwd = up_legal ? +1 : -1;
      const bool back_cont_legal = (dfwd > 0) ? dn_legal : up_legal;
      const int dback = back_cont_legal ? -dfwd : dfwd;
      b.march(0.0, shift, dfwd, true, up_legal, dn_legal, +1, forward_traced, deg);
      b.march(0.0, shift, dback, true, up_legal, dn_legal, -1, !forward_traced, deg);
      break;
    }
    default:
      break;
  }
  b.finalize();
  return b.prof;
}

// ---------------------------------------------------------------------------
// time integral t(theta)
// ---------------------------------------------------------------------------

/// Time at which the lift angle reaches theta, measured from theta(0) =
/// theta0.  Admissible theta windows follow the class tag; integrable
/// square-root endpoint singularities are handled by substitution.
inline double time_of_theta(const Covector& phi, const PolarCurve& P, double theta,
                            const ExtremalClass& cls) {
  (void)phi;
  const Covector f = cls.phi;
  auto Pp = std::make_shared<const PolarCurve>(P);
  detail::PendGeom G = detail::PendGeom::make(Pp, f);
  if (cls.theta1) G.anchors.push_back(*cls.theta1);
  if (cls.theta2) G.anchors.push_back(*cls.theta2);
  switch (cls.tag) {
    case ExtremalTag::Isoperimetrix:
    case ExtremalTag::PendMonotone: {
      const double s = f.p3 > 0 ? 1.0 : -1.0;
      return s * detail::branch_integral(G, detail::Num::Time, cls.theta0, theta);
    }
    case ExtremalTag::PendOscillate: {
      const double t1 = *cls.theta1, t2 = *cls.theta2;
      const double lo = std::min(t1, t2), hi = std::max(t1, t2);
      if (theta < lo - 1e-9 || theta > hi + 1e-9) throw OutsideBranch(theta);
      double th0u = cls.theta0;
      if (f.p3 == 0)
        th0u = (std::abs(num::angle_diff(cls.theta0, lo)) < 1e-9) ? lo : hi;
      const int dir0 = (f.p3 != 0) ? (f.p3 > 0 ? +1 : -1) : (t2 > t1 ? +1 : -1);
      return dir0 * detail::branch_integral(G, detail::Num::Time, th0u,
                                            std::clamp(theta, lo, hi));
    }
    case ExtremalTag::PendSeparatrixPhi3: {
      const double t1 = *cls.theta1, t2 = *cls.theta2;
      if (theta < t1 - 1e-9 || theta > t2 + 1e-9) throw OutsideBranch(theta);
      if (theta <= t1 + 1e-12 && !cls.finite1.value_or(false))
        throw DivergentIntegral(theta);
      if (theta >= t2 - 1e-12 && !cls.finite2.value_or(false))
        throw DivergentIntegral(theta);
      const double s = f.p3 > 0 ? 1.0 : -1.0;
      return s * detail::branch_integral(G, detail::Num::Time, cls.theta0,
                                         std::clamp(theta, t1, t2));
    }
    case ExtremalTag::PendSeparatrixPhi3Zero: {
      const double t1 = *cls.theta1, t2 = *cls.theta2;
      if (cls.subtag == "5.2") {
        if (theta > t1 + 1e-12 && theta < t2 - 1e-12) {
          if (std::abs(theta - cls.theta0) < 1e-9) return 0.0;
          throw OutsideBranch(theta);
        }
        throw OutsideBranch(theta);
      }
      const double top = t1 + num::two_pi, bot = t2 - num::two_pi;
      if (theta >= t2 - 1e-12 && theta <= top + 1e-9) {
        if (!cls.finite2.value_or(false)) {
          if (theta > t2 + 1e-12) throw DivergentIntegral(theta);
          return 0.0;
        }
        if (theta >= top - 1e-12 &&
            integral_convergence(f, P, t1, Side::Below).kind == Convergence::Infinite)
          throw DivergentIntegral(theta);
        return detail::branch_integral(G, detail::Num::Time, t2,
                                       std::clamp(theta, t2, top));
      }
      if (theta <= t1 + 1e-12 && theta >= bot - 1e-9) {
        if (!cls.finite1.value_or(false)) {
          if (theta < t1 - 1e-12) throw DivergentIntegral(theta);
          return 0.0;
        }
        if (theta <= bot + 1e-12 &&
            integral_convergence(f, P, t2, Side::Above).kind == Convergence::Infinite)
          throw DivergentIntegral(theta);
        return detail::branch_integral(G, detail::Num::Time,
                                       std::clamp(theta, bot, t1), t1);
      }
      throw OutsideBranch(theta);
    }
    case ExtremalTag::ConstantTheta:
    case ExtremalTag::PendStraightLine: {
      if (std::abs(num::angle_diff(theta, cls.theta0)) < 1e-9) return 0.0;
      throw OutsideBranch(theta);
    }
    case ExtremalTag::Abnormal:
      throw OutsideBranch(theta);
  }
  throw OutsideBranch(theta);
}

// ---------------------------------------------------------------------------
// Constant-theta segments
// ---------------------------------------------------------------------------

/// Affine state evolution while theta dwells at a turning value.
struct AffineStateEvolution {
  double t0 = 0;
  double x = 0;
  double y0 = 0, ydot = 0;
  double z0 = 0, zdot = 0;
  double v0 = 0, vdot = 0;

  GroupElement at(double t) const {
    const double d = t - t0;
    return {x, y0 + ydot * d, z0 + zdot * d, v0 + vdot * d};
  }
};

inline AffineStateEvolution constant_theta_segment(const Covector& f, double t0,
                                                   double y0, double z0, double v0) {
  if (f.p4 == 0) throw ParseError("constant-theta segments require phi4 != 0");
  const double D = 2.0 * f.p2 * f.p4 - f.p3 * f.p3;
  if (D == 0) throw DegenerateDenominator();
  AffineStateEvolution a;
  a.t0 = t0;
  a.x = -f.p3 / f.p4;
  a.y0 = y0;
  a.ydot = 2.0 * f.p4 / D;
  a.z0 = z0;
  a.zdot = -f.p3 / D;
  a.v0 = v0;
  a.vdot = f.p3 * f.p3 / (6.0 * f.p4 * D);
  return a;
}

// ---------------------------------------------------------------------------
// Trajectory synthesis and validation
// ---------------------------------------------------------------------------

struct TrajectorySample {
  double t = 0;
  GroupElement g;
  double theta = 0;
  Vec2 u;
  HamiltonianLifts h;
  double E_residual = 0;
  double eq_residual = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  ExtremalClass cls;
  Covector phi;
};

struct TraceOptions {
  SelectorPolicy selector{};
  FamilySchedule schedule{};
  bool normalize = false;
};

struct ValidationReport {
  double casimir_drift = 0;
  double linear_residual = 0;  // max |eq residual| / (1 + |t|)
  double gauge_error = 0;
  double max_condition_slack = 0;
  double h3_residual = 0;
  bool linear_checked = true;

  double tol_casimir = 1e-6;
  double tol_linear = 1e-6;
  double tol_gauge = 1e-9;
  double tol_max = 1e-8;
  double tol_h3 = 1e-12;

  bool casimir_ok() const { return casimir_drift <= tol_casimir; }
  bool linear_ok() const { return !linear_checked || linear_residual <= tol_linear; }
  bool gauge_ok() const { return gauge_error <= tol_gauge; }
  bool max_ok() const { return max_condition_slack <= tol_max; }
  bool h3_ok() const { return h3_residual <= tol_h3; }
  bool pass() const {
    return casimir_ok() && linear_ok() && gauge_ok() && max_ok() && h3_ok();
  }
};

namespace detail {

inline double linear_integral_residual(const Covector& f, const GroupElement& g,
                                       double t) {
  return f.p1 * g.x + f.p2 * g.y + (2.0 * f.p3 + 0.5 * f.p4 * g.x) * g.z +
         3.0 * f.p4 * g.v - t;
}

/// Integral of numer(theta)/sqrt(g) dt over a time interval of the profile.
/// Constant segments contribute const_rate * dt.
inline double profile_time_integral(const ThetaProfile& prof, const PendGeom& G,
                                    const std::function<double(double)>& numer,
                                    double const_rate, double ta, double tb) {
  if (ta == tb) return 0.0;
  double sign = 1.0;
  if (tb < ta) {
    std::swap(ta, tb);
    sign = -1.0;
  }
  double total = 0;
  for (const auto& s : prof.segments) {
    const double a = std::max(ta, s.t0), bb = std::min(tb, s.t1);
    if (bb <= a) continue;
    if (s.constant) {
      total += const_rate * (bb - a);
      continue;
    }
    const Branch& B = prof.branches[s.branch];
    const double th_a = B.theta_of_tau(s.tau_ref + s.dir * (a - s.t_ref));
    const double th_b = B.theta_of_tau(s.tau_ref + s.dir * (bb - s.t_ref));
    // Within a whisker of a turning point the theta-space integrand can no
    // longer be resolved in doubles (g is rounding-dominated); there the
    // time-space form numer(theta(t))/r^2 is smooth and exact.
    const double dzone = 1e-7;
    const bool near_lo = B.lo_sing && std::min(th_a, th_b) < B.lo + dzone;
    const bool near_hi = B.hi_sing && std::max(th_a, th_b) > B.hi - dzone;
    if (near_lo || near_hi) {
      auto td = [&](double t) {
        const double th = B.theta_of_tau(s.tau_ref + s.dir * (t - s.t_ref)) + s.shift;
        const double r = G.P->radius(th);
        return numer(th) / (r * r);
      };
      total += num::integrate_adaptive(td, a, bb, 1e-11);
    } else {
      total += s.dir * branch_integral_fn(G, numer, th_a, th_b);
    }
  }
  return sign * total;
}

}  // namespace detail

inline Trajectory trace(const Covector& phi, const ControlRegion& U, double T, int n,
                        const TraceOptions& opts = {}) {
  if (n < 2) throw ParseError("sample count must be at least 2");
  if (T == 0) throw ParseError("horizon T must be nonzero");
  const PolarCurve P = U.polar();
  Trajectory tr;
  tr.cls = classify(phi, U, P, {opts.normalize});
  const Covector f = tr.cls.phi;
  tr.phi = f;
  tr.samples.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) tr.samples[k].t = T * k / (n - 1);

  const double E_init = 0.5 * f.p3 * f.p3 - f.p2 * f.p4;
  auto fill_lifts = [&](TrajectorySample& s) {
    s.h = lifts_from_state(f, s.g.x, s.g.y, s.g.z);
    s.E_residual = (0.5 * s.h.h3 * s.h.h3 - s.h.h2 * s.h.h4) - E_init;
    s.eq_residual =
        (s.h.M == 0) ? 0.0 : detail::linear_integral_residual(f, s.g, s.t);
  };

  if (tr.cls.tag == ExtremalTag::Abnormal) {
    if (!opts.schedule.empty())
      throw ScheduleInvalid("schedule supplied for a unique class");
    const double u2 = 1.0 / U.gauge({0.0, 1.0});
    for (auto& s : tr.samples) {
      s.g = {0.0, u2 * s.t, 0.0, 0.0};
      s.theta = 0.0;
      s.u = {0.0, u2};
      s.h = {0, 0, 0, f.p4, 0};
    }
    return tr;
  }

  if (tr.cls.tag == ExtremalTag::ConstantTheta) {
    if (!opts.schedule.empty())
      throw ScheduleInvalid("schedule supplied for a unique class");
    const double th0 = tr.cls.theta0;
    const auto ev = P.eval(th0);
    std::vector<double> cuts{0.0};
    if (ev.corner && opts.selector.mode == SelectorPolicy::Mode::Schedule)
      for (const auto& [until, lam] : opts.selector.schedule) {
        (void)lam;
        if ((T > 0 && until > 0 && until < T) || (T < 0 && until < 0 && until > T))
          cuts.push_back(until);
      }
    cuts.push_back(T);
    std::sort(cuts.begin(), cuts.end(),
              [&](double a, double b) { return T > 0 ? a < b : a > b; });
    struct PieceState {
      double t = 0, x = 0, y = 0, P1 = 0, P2 = 0;
      Vec2 u;
    };
    std::vector<PieceState> pieces;
    PieceState st;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      st.t = cuts[i];
      st.u = control_from_theta(P, th0, opts.selector, 0.5 * (cuts[i] + cuts[i + 1]));
      pieces.push_back(st);
      const double d = cuts[i + 1] - cuts[i];
      st.P1 += st.u.y * (st.x * d + 0.5 * st.u.x * d * d);
      st.P2 += st.u.y * (st.x * st.x * d + st.x * st.u.x * d * d +
                         st.u.x * st.u.x * d * d * d / 3.0);
      st.x += st.u.x * d;
      st.y += st.u.y * d;
    }
    for (auto& s : tr.samples) {
      const PieceState* p = &pieces[0];
      for (const auto& q : pieces)
        if ((T > 0 && q.t <= s.t + 1e-15) || (T < 0 && q.t >= s.t - 1e-15)) p = &q;
      const double d = s.t - p->t;
      const double x = p->x + p->u.x * d;
      const double y = p->y + p->u.y * d;
      const double P1 = p->P1 + p->u.y * (p->x * d + 0.5 * p->u.x * d * d);
      const double P2 = p->P2 + p->u.y * (p->x * p->x * d + p->x * p->u.x * d * d +
                                          p->u.x * p->u.x * d * d * d / 3.0);
      s.g = {x, y, -0.5 * x * y + P1, x * x * y / 12.0 - 0.5 * x * P1 + 0.5 * P2};
      s.theta = th0;
      s.u = p->u;
      fill_lifts(s);
    }
    return tr;
  }

  // Isoperimetrix and pendulum classes share the theta-profile pipeline.
  const ThetaProfile prof = theta_profile(tr.cls, f, P, T, opts.schedule);
  auto Pp = std::make_shared<const PolarCurve>(P);
  const detail::PendGeom G = detail::PendGeom::make(Pp, f);
  const bool iso = (tr.cls.tag == ExtremalTag::Isoperimetrix);
  const double dwell_u2 =
      (f.p4 != 0) ? 1.0 / detail::h2_turning_level(f) : 0.0;

  auto u2_numer = [&](double th) {
    return detail::branch_numerator(P, detail::Num::U2, th);
  };
  auto w_numer = [&](double th) {
    const double xx = (P.h2(th) - f.p2) / f.p3;
    return xx * xx * detail::branch_numerator(P, detail::Num::U2, th);
  };

  double y_acc = 0, w_acc = 0;
  const std::size_t nn = tr.samples.size();
  for (std::size_t k = 0; k < nn; ++k) {
    TrajectorySample& s = tr.samples[k];
    if (k > 0) {
      const double t_prev = tr.samples[k - 1].t;
      y_acc += detail::profile_time_integral(prof, G, u2_numer, dwell_u2, t_prev, s.t);
      if (iso)
        w_acc += detail::profile_time_integral(prof, G, w_numer, 0.0, t_prev, s.t);
    }
    s.theta = prof.theta(s.t);
    const int sgn = prof.theta_dot_sign(s.t);
    double x;
    if (iso)
      x = (P.h2(s.theta) - f.p2) / f.p3;
    else
      x = (sgn * G.sqrtg(s.theta) - f.p3) / f.p4;
    const double y = y_acc;
    double z, v;
    if (iso) {
      z = (s.t - f.p1 * x - f.p2 * y) / (2.0 * f.p3);
      const double P1 = z + 0.5 * x * y;  // int x u2 dtau
      v = x * x * y / 12.0 - 0.5 * x * P1 + 0.5 * w_acc;
    } else {
      z = -(P.h1(s.theta) - f.p1 + (f.p3 + 0.5 * f.p4 * x) * y) / f.p4;
      v = (s.t - f.p1 * x - f.p2 * y - (2.0 * f.p3 + 0.5 * f.p4 * x) * z) /
          (3.0 * f.p4);
    }
    s.g = {x, y, z, v};
    s.u = (sgn == 0) ? Vec2{0.0, dwell_u2}
                     : control_from_theta(P, s.theta, opts.selector, s.t);
    fill_lifts(s);
  }
  return tr;
}

inline ValidationReport validate(const Trajectory& tr, const Covector& phi,
                                 const ControlRegion& U) {
  ValidationReport rep;
  const Covector f = phi;
  const double E_init = 0.5 * f.p3 * f.p3 - f.p2 * f.p4;
  const bool abnormal = (tr.cls.tag == ExtremalTag::Abnormal);
  rep.linear_checked = !abnormal;

  std::vector<Vec2> probes;
  if (U.shape() == ControlRegion::Shape::Polygon ||
      U.shape() == ControlRegion::Shape::Square) {
    probes = U.vertices();
  } else {
    probes.reserve(512);
    for (int i = 0; i < 512; ++i)
      probes.push_back(U.boundary_point(num::two_pi * i / 512));
  }

  for (const auto& s : tr.samples) {
    const double E = 0.5 * s.h.h3 * s.h.h3 - s.h.h2 * s.h.h4;
    rep.casimir_drift = std::max(rep.casimir_drift, std::abs(E - E_init));
    rep.gauge_error = std::max(rep.gauge_error, std::abs(U.gauge(s.u) - 1.0));
    const double hu = s.h.h1 * s.u.x + s.h.h2 * s.u.y;
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2& p : probes)
      best = std::max(best, s.h.h1 * p.x + s.h.h2 * p.y);
    rep.max_condition_slack = std::max(rep.max_condition_slack, best - hu);
    rep.h3_residual =
        std::max(rep.h3_residual, std::abs(s.h.h3 - f.p3 - f.p4 * s.g.x));
    if (!abnormal) {
      const double res = detail::linear_integral_residual(f, s.g, s.t);
      rep.linear_residual =
          std::max(rep.linear_residual, std::abs(res) / (1.0 + std::abs(s.t)));
    }
  }
  return rep;
}

}  // namespace engel
