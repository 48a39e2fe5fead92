#include <random>

#include "doctest.h"
#include "engel/group.hpp"

using namespace engel;

namespace {
bool close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }
bool close(const GroupElement& a, const GroupElement& b, double tol = 1e-12) {
  return close(a.x, b.x, tol) && close(a.y, b.y, tol) && close(a.z, b.z, tol) &&
         close(a.v, b.v, tol);
}
}  // namespace

TEST_CASE("group law basic values") {
  const GroupElement e = identity();
  const GroupElement g{0.3, -0.7, 1.1, 2.5};
  CHECK(close(mul(e, g), g));
  CHECK(close(mul(g, e), g));

  const GroupElement p = mul({1, 0, 0, 0}, {0, 1, 0, 0});
  CHECK(close(p, {1.0, 1.0, 0.5, 1.0 / 12.0}));

  CHECK(close(inverse({0, 0, 0, 0}), {0, 0, 0, 0}));
  CHECK(close(inverse({1, 2, 3, 4}), {-1, -2, -3, -4}));
  CHECK(close(mul({1, 2, 3, 4}, inverse({1, 2, 3, 4})), {0, 0, 0, 0}));
}

TEST_CASE("group law properties over random elements") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> ud(-10.0, 10.0);
  auto rnd = [&] { return GroupElement{ud(rng), ud(rng), ud(rng), ud(rng)}; };

  for (int i = 0; i < 2000; ++i) {
    const GroupElement a = rnd(), b = rnd(), c = rnd();
    const GroupElement l = mul(mul(a, b), c);
    const GroupElement r = mul(a, mul(b, c));
    const double scale = 1.0 + std::abs(l.v) + std::abs(l.z);
    CHECK(std::abs(l.x - r.x) <= 1e-9 * scale);
    CHECK(std::abs(l.y - r.y) <= 1e-9 * scale);
    CHECK(std::abs(l.z - r.z) <= 1e-9 * scale);
    CHECK(std::abs(l.v - r.v) <= 1e-9 * scale);

    CHECK(close(inverse(inverse(a)), a));
    CHECK(close(mul(a, inverse(a)), identity(), 1e-9 * scale));
    CHECK(close(mul(a, identity()), a));
    CHECK(close(mul(identity(), a), a));
  }
}

TEST_CASE("bracket table and bilinearity") {
  const AlgebraVector X{1, 0, 0, 0}, Y{0, 1, 0, 0}, Z{0, 0, 1, 0}, V{0, 0, 0, 1};
  auto is = [](const AlgebraVector& a, double cx, double cy, double cz, double cv) {
    return close(a.cx, cx) && close(a.cy, cy) && close(a.cz, cz) && close(a.cv, cv);
  };
  CHECK(is(bracket(X, Y), 0, 0, 1, 0));   // [X,Y] = Z
  CHECK(is(bracket(X, Z), 0, 0, 0, 1));   // [X,Z] = V
  CHECK(is(bracket(Y, V), 0, 0, 0, 0));
  CHECK(is(bracket(Z, V), 0, 0, 0, 0));
  CHECK(is(bracket(Y, Z), 0, 0, 0, 0));
  // bracket(X+Y, X+Z) = V - Z
  CHECK(is(bracket({1, 1, 0, 0}, {1, 0, 1, 0}), 0, 0, -1, 1));
  // antisymmetry
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ud(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const AlgebraVector a{ud(rng), ud(rng), ud(rng), ud(rng)};
    const AlgebraVector b{ud(rng), ud(rng), ud(rng), ud(rng)};
    const AlgebraVector ab = bracket(a, b), ba = bracket(b, a);
    CHECK(close(ab.cz, -ba.cz));
    CHECK(close(ab.cv, -ba.cv));
  }
}

TEST_CASE("left-invariant fields") {
  auto is = [](const std::array<double, 4>& a, double dx, double dy, double dz,
               double dv) {
    return close(a[0], dx) && close(a[1], dy) && close(a[2], dz) && close(a[3], dv);
  };
  CHECK(is(field_at(BasisField::X, identity()), 1, 0, 0, 0));
  CHECK(is(field_at(BasisField::Y, {1, 0, 0, 0}), 0, 1, 0.5, 1.0 / 12.0));
  CHECK(is(field_at(BasisField::X, {0, 2, 4, 0}), 1, 0, -1, -2));
}

namespace {

// Commutator of two left-invariant fields by central differences of their
// coefficient functions; the coefficients are polynomials of degree <= 2, so
// central differences are exact up to rounding.
std::array<double, 4> commutator_fd(BasisField A, BasisField B, const GroupElement& g) {
  const double h = 1e-2;
  auto field = [](BasisField f, const GroupElement& p) { return field_at(f, p); };
  auto shift = [](const GroupElement& p, int k, double d) {
    GroupElement q = p;
    if (k == 0) q.x += d;
    if (k == 1) q.y += d;
    if (k == 2) q.z += d;
    if (k == 3) q.v += d;
    return q;
  };
  const auto a = field(A, g), b = field(B, g);
  std::array<double, 4> out{};
  for (int comp = 0; comp < 4; ++comp) {
    double acc = 0;
    for (int k = 0; k < 4; ++k) {
      const double dbk =
          (field(B, shift(g, k, h))[comp] - field(B, shift(g, k, -h))[comp]) / (2 * h);
      const double dak =
          (field(A, shift(g, k, h))[comp] - field(A, shift(g, k, -h))[comp]) / (2 * h);
      acc += a[k] * dbk - b[k] * dak;
    }
    out[comp] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("field commutators reproduce the bracket table at random points") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ud(-2, 2);
  const BasisField fs[4] = {BasisField::X, BasisField::Y, BasisField::Z,
                            BasisField::V};
  const AlgebraVector basis[4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0},
                                  {0, 0, 0, 1}};
  for (int it = 0; it < 100; ++it) {
    const GroupElement g{ud(rng), ud(rng), ud(rng), ud(rng)};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const auto num = commutator_fd(fs[i], fs[j], g);
        const AlgebraVector br = bracket(basis[i], basis[j]);
        // expected field: br.cz * Z(g) + br.cv * V(g) (cx = cy = 0 always)
        const auto Zg = field_at(BasisField::Z, g);
        const auto Vg = field_at(BasisField::V, g);
        for (int c = 0; c < 4; ++c)
          CHECK(std::abs(num[c] - (br.cz * Zg[c] + br.cv * Vg[c])) <= 1e-12);
      }
  }
}
