#pragma once

#include <string>
#include <variant>

#include "cvhi/linalg.hpp"

namespace cvhi {

struct Box {
  Vec lo, hi;
};

struct Ball {
  Vec center;
  double radius = 0.0;
};

// {x : A x <= b}
struct Polytope {
  Mat A;
  Vec b;
};

struct WholeSpace {
  int dim = 0;
};

// Closed convex subset of R^n. Polytopes are checked for emptiness and
// boundedness on construction.
class ConvexSet {
 public:
  using Shape = std::variant<Box, Ball, Polytope, WholeSpace>;

  ConvexSet() : ConvexSet(WholeSpace{0}) {}
  ConvexSet(Shape shape);  // NOLINT(google-explicit-constructor)

  static ConvexSet box(Vec lo, Vec hi) { return ConvexSet(Box{std::move(lo), std::move(hi)}); }
  static ConvexSet ball(Vec c, double r) { return ConvexSet(Ball{std::move(c), r}); }
  static ConvexSet polytope(Mat A, Vec b) { return ConvexSet(Polytope{std::move(A), std::move(b)}); }
  static ConvexSet whole(int n) { return ConvexSet(WholeSpace{n}); }

  int dim() const { return dim_; }
  const Shape& shape() const { return shape_; }
  std::string kind() const;

  bool bounded() const { return bounded_; }
  bool polyhedral() const { return !std::holds_alternative<Ball>(shape_); }
  // Componentwise bounds; infinite where unbounded.
  const Vec& bbox_lo() const { return lo_; }
  const Vec& bbox_hi() const { return hi_; }

  Vec project(const Vec& x) const;
  bool contains(const Vec& x, double tol = 1e-9) const;
  // Maximiser of <g, x> over the set. Throws DomainError when unbounded in g.
  Vec support_point(const Vec& g) const;
  double support_value(const Vec& g) const;

  // Inequality description (empty for balls and the whole space).
  void inequalities(Mat& A, Vec& b) const;

 private:
  Shape shape_;
  int dim_ = 0;
  bool bounded_ = false;
  Vec lo_, hi_;
};

}  // namespace cvhi
