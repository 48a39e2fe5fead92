#pragma once

#include <stdexcept>
#include <string>

namespace engel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All components of the covector are zero; the maximum principle requires a
/// non-vanishing adjoint.
struct ZeroCovector : Error {
  ZeroCovector() : Error("covector is identically zero") {}
};

/// Normal covector whose (phi1, phi2) does not lie on the boundary of the
/// polar body and normalization was not requested.
struct CovectorNotOnPolar : Error {
  explicit CovectorNotOnPolar(double support)
      : Error("support of (phi1, phi2) is " + std::to_string(support) +
              ", expected 1 (pass normalize to rescale)") {}
};

/// (phi1, phi2) = (0, 0) with phi3 != 0: no admissible extremal exists.
struct AbnormalWithNonzeroH : Error {
  AbnormalWithNonzeroH()
      : Error("(phi1, phi2) = (0, 0) requires phi3 = 0 and phi4 != 0") {}
};

struct OriginNotInterior : Error {
  OriginNotInterior() : Error("origin is not strictly interior to the region") {}
};

struct ConvexityViolation : Error {
  explicit ConvexityViolation(const std::string& what) : Error(what) {}
};

struct DivergentIntegral : Error {
  explicit DivergentIntegral(double theta)
      : Error("time integral diverges at theta = " + std::to_string(theta)) {}
};

struct OutsideBranch : Error {
  explicit OutsideBranch(double theta)
      : Error("theta = " + std::to_string(theta) +
              " lies outside the admissible branch") {}
};

struct NoTurningPoint : Error {
  NoTurningPoint() : Error("class has no turning points") {}
};

struct ScheduleInvalid : Error {
  explicit ScheduleInvalid(const std::string& what) : Error(what) {}
};

struct DegenerateDenominator : Error {
  DegenerateDenominator()
      : Error("2*phi2*phi4 - phi3^2 = 0: no constant-theta segment exists") {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace engel
