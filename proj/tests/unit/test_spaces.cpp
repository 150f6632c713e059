#include <doctest.h>

#include <random>

#include "cvhi/errors.hpp"
#include "cvhi/spaces.hpp"

using namespace cvhi;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

ConvexSet triangle() {
  Mat A(3, 2);
  A << 1, 1, -1, 0, 0, -1;
  Vec b(3);
  b << 1, 0, 0;
  return ConvexSet::polytope(A, b);
}

// Nearest point of the triangle by scanning a fine grid of it.
Vec grid_nearest_triangle(const Vec& x, double step) {
  Vec best = Vec::Zero(2);
  double bd = 1e300;
  for (double a = 0; a <= 1 + 1e-12; a += step) {
    for (double b = 0; a + b <= 1 + 1e-12; b += step) {
      double d = (v2(a, b) - x).norm();
      if (d < bd) {
        bd = d;
        best = v2(a, b);
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("projection examples") {
  CHECK(ConvexSet::box(v1(-1), v1(1)).project(v1(3))(0) == 1.0);
  Vec p = ConvexSet::ball(Vec::Zero(2), 1.0).project(v2(3, 4));
  CHECK(p(0) == doctest::Approx(0.6));
  CHECK(p(1) == doctest::Approx(0.8));
  Vec q = triangle().project(v2(1, 1));
  Vec g = grid_nearest_triangle(v2(1, 1), 1e-3);
  CHECK((q - g).norm() <= 1e-3);
  CHECK(q(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("projection is idempotent and nonexpansive on random points") {
  std::mt19937 rng(5);
  std::normal_distribution<double> N(0.0, 2.0);
  std::vector<ConvexSet> sets = {ConvexSet::box(v2(-1, 0), v2(1, 2)), ConvexSet::ball(v2(0.5, 0), 1.5), triangle()};
  for (const auto& S : sets) {
    for (int k = 0; k < 50; ++k) {
      Vec x = v2(N(rng), N(rng)), y = v2(N(rng), N(rng));
      Vec px = S.project(x), py = S.project(y);
      CHECK(S.contains(px, 1e-9));
      CHECK((S.project(px) - px).norm() <= 1e-12);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("triangle projection agrees with a grid oracle on random points") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(-1.5, 2.0);
  for (int k = 0; k < 20; ++k) {
    Vec x = v2(U(rng), U(rng));
    CHECK((triangle().project(x) - grid_nearest_triangle(x, 2e-3)).norm() <= 2e-3);
  }
}

TEST_CASE("contains examples") {
  ConvexSet b = ConvexSet::box(v1(-1), v1(1));
  CHECK(b.contains(v1(1.0), 0.0));
  CHECK_FALSE(b.contains(v1(1.001), 1e-6));
  CHECK(triangle().contains(v2(0.5, 0.5), 1e-9));
  CHECK_FALSE(triangle().contains(v2(0.6, 0.5), 1e-9));
}

TEST_CASE("support point examples") {
  Vec s = ConvexSet::box(v2(-1, -1), v2(1, 1)).support_point(v2(1, -1));
  CHECK(s(0) == 1.0);
  CHECK(s(1) == -1.0);
  Vec t = ConvexSet::ball(Vec::Zero(2), 2.0).support_point(v2(3, 4));
  CHECK(t(0) == doctest::Approx(1.2));
  CHECK(t(1) == doctest::Approx(1.6));
  // Vertices of the triangle are the only candidates for a linear maximum.
  Vec u = triangle().support_point(v2(1, 0));
  CHECK(u(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(u(1)) <= 1e-12);
  std::mt19937 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Vec g = v2(N(rng), N(rng));
    double best = std::max({0.0, g(0), g(1)});
    CHECK(g.dot(triangle().support_point(g)) == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("polytope construction reports emptiness and unboundedness") {
  Mat A(2, 1);
  A << 1, -1;
  Vec b(2);
  b << -1, -1;  // x <= -1 and x >= 1
  CHECK_THROWS_AS(ConvexSet::polytope(A, b), InputError);
  Mat A2(1, 2);
  A2 << 1, 1;
  Vec b2 = Vec::Ones(1);
  ConvexSet half = ConvexSet::polytope(A2, b2);
  CHECK_FALSE(half.bounded());
  CHECK_THROWS_AS(half.support_point(v2(1, 0)), DomainError);
  CHECK_THROWS_AS(ConvexSet::whole(2).support_point(v2(1, 0)), DomainError);
  CHECK(triangle().bounded());
  CHECK(triangle().bbox_hi()(0) == doctest::Approx(1.0));
}

TEST_CASE("box with lo above hi is rejected") {
  CHECK_THROWS_AS(ConvexSet::box(v1(1), v1(0)), InputError);
}
