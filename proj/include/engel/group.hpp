#pragma once

#include <array>

namespace engel {

/// Point of the Engel group in exponential coordinates of the first kind.
struct GroupElement {
  double x = 0, y = 0, z = 0, v = 0;
};

inline constexpr GroupElement identity() { return {}; }

/// Group product.  Closed form of the Campbell-Hausdorff series, which
/// terminates at triple brackets for the 3-step nilpotent Engel algebra.
inline GroupElement mul(const GroupElement& a, const GroupElement& b) {
  const double w = a.x * b.y - b.x * a.y;
  return {a.x + b.x, a.y + b.y, a.z + b.z + 0.5 * w,
          a.v + b.v + 0.5 * (a.x * b.z - b.x * a.z) + w * (a.x - b.x) / 12.0};
}

/// Inverse is negation in exponential coordinates.
inline GroupElement inverse(const GroupElement& a) {
  return {-a.x, -a.y, -a.z, -a.v};
}

/// Element of the Engel algebra in the basis X, Y, Z, V.
struct AlgebraVector {
  double cx = 0, cy = 0, cz = 0, cv = 0;
};

/// Bilinear extension of [X,Y] = Z, [X,Z] = V, all other basis brackets zero.
inline AlgebraVector bracket(const AlgebraVector& a, const AlgebraVector& b) {
  return {0.0, 0.0, a.cx * b.cy - b.cx * a.cy, a.cx * b.cz - b.cx * a.cz};
}

enum class BasisField { X, Y, Z, V };

/// Left-invariant basis field at g, as coefficients of (d/dx, d/dy, d/dz, d/dv).
inline std::array<double, 4> field_at(BasisField f, const GroupElement& g) {
  switch (f) {
    case BasisField::X:
      return {1.0, 0.0, -g.y / 2.0, -g.z / 2.0 - g.x * g.y / 12.0};
    case BasisField::Y:
      return {0.0, 1.0, g.x / 2.0, g.x * g.x / 12.0};
    case BasisField::Z:
      return {0.0, 0.0, 1.0, g.x / 2.0};
    case BasisField::V:
      return {0.0, 0.0, 0.0, 1.0};
  }
  return {};
}

}  // namespace engel
