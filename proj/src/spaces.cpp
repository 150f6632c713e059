#include "cvhi/spaces.hpp"

#include <cmath>
#include <limits>

#include "cvhi/composite.hpp"
#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec project_polytope(const Polytope& p, const Vec& x) {
  const int n = static_cast<int>(x.size());
  if (p.A.rows() == 0 || ((p.A * x - p.b).array() <= 0.0).all()) return x;
  CompositeProgram prog(n);
  prog.M = Mat::Identity(n, n);
  prog.b = -x;
  prog.add_inequalities(p.A, p.b);
  CompositeSettings st;
  st.max_iter = 50000;
  CompositeSolution s = solve_composite(prog, st);
  double scale = 1.0 + p.b.lpNorm<Eigen::Infinity>() + x.lpNorm<Eigen::Infinity>();
  if (s.infeasibility > 1e-9 * scale) {
    throw NumericalError("polytope projection did not converge after " +
                         std::to_string(s.iterations) + " iterations (infeasibility " +
                         std::to_string(s.infeasibility) + ")");
  }
  return s.x;
}

// Linear maximisation over a bounded-or-not polytope by proximal point with
// a doubling step; each step is an exact projection.
Vec polytope_lp(const Polytope& p, const Vec& g, const Vec& start, double diverge_at) {
  Vec x = project_polytope(p, start);
  if (g.norm() == 0.0) return x;
  double rho = 1.0 / g.norm();
  for (int k = 0; k < 200; ++k) {
    Vec xn = project_polytope(p, x + rho * g);
    if (!xn.allFinite() || xn.norm() > diverge_at) {
      throw DomainError("support point: set is unbounded in the requested direction");
    }
    if ((xn - x).norm() <= 1e-14 * (1.0 + x.norm())) return xn;
    x = xn;
    rho *= 2.0;
  }
  throw NumericalError("support point: proximal LP did not settle");
}

}  // namespace

ConvexSet::ConvexSet(Shape shape) : shape_(std::move(shape)) {
  if (auto* b = std::get_if<Box>(&shape_)) {
    if (b->lo.size() != b->hi.size()) throw InputError("box: lo and hi differ in length");
    for (Eigen::Index i = 0; i < b->lo.size(); ++i) {
      if (!(b->lo(i) <= b->hi(i))) throw InputError("box: lo exceeds hi in coordinate " + std::to_string(i));
    }
    dim_ = static_cast<int>(b->lo.size());
    lo_ = b->lo;
    hi_ = b->hi;
    bounded_ = lo_.allFinite() && hi_.allFinite();
  } else if (auto* bl = std::get_if<Ball>(&shape_)) {
    if (!(bl->radius >= 0.0) || !std::isfinite(bl->radius)) throw InputError("ball: radius must be finite and nonnegative");
    dim_ = static_cast<int>(bl->center.size());
    lo_ = bl->center.array() - bl->radius;
    hi_ = bl->center.array() + bl->radius;
    bounded_ = true;
  } else if (auto* p = std::get_if<Polytope>(&shape_)) {
    if (p->A.rows() != p->b.size()) throw InputError("polytope: A and b differ in row count");
    if (p->A.rows() == 0) throw InputError("polytope: at least one inequality is required");
    dim_ = static_cast<int>(p->A.cols());
    Vec origin = Vec::Zero(dim_);
    Vec x0;
    try {
      x0 = project_polytope(*p, origin);
    } catch (const NumericalError&) {
      throw InputError("polytope: inequality system is empty");
    }
    lo_.resize(dim_);
    hi_.resize(dim_);
    double diverge = 1e9 * (1.0 + p->b.lpNorm<Eigen::Infinity>());
    bounded_ = true;
    for (int i = 0; i < dim_; ++i) {
      Vec e = Vec::Zero(dim_);
      e(i) = 1.0;
      try {
        hi_(i) = polytope_lp(*p, e, x0, diverge)(i);
      } catch (const DomainError&) {
        hi_(i) = kInf;
        bounded_ = false;
      }
      try {
        lo_(i) = polytope_lp(*p, -e, x0, diverge)(i);
      } catch (const DomainError&) {
        lo_(i) = -kInf;
        bounded_ = false;
      }
    }
  } else {
    dim_ = std::get<WholeSpace>(shape_).dim;
    lo_ = Vec::Constant(dim_, -kInf);
    hi_ = Vec::Constant(dim_, kInf);
    bounded_ = false;
  }
}

std::string ConvexSet::kind() const {
  switch (shape_.index()) {
    case 0: return "box";
    case 1: return "ball";
    case 2: return "polytope";
    default: return "whole";
  }
}

Vec ConvexSet::project(const Vec& x) const {
  if (x.size() != dim_) throw InputError("project: dimension mismatch");
  if (auto* b = std::get_if<Box>(&shape_)) return x.cwiseMax(b->lo).cwiseMin(b->hi);
  if (auto* bl = std::get_if<Ball>(&shape_)) {
    Vec d = x - bl->center;
    double r = d.norm();
    return r <= bl->radius ? x : Vec(bl->center + (bl->radius / r) * d);
  }
  if (auto* p = std::get_if<Polytope>(&shape_)) return project_polytope(*p, x);
  return x;
}

bool ConvexSet::contains(const Vec& x, double tol) const {
  if (x.size() != dim_) return false;
  if (auto* b = std::get_if<Box>(&shape_)) {
    return ((x - b->lo).array() >= -tol).all() && ((b->hi - x).array() >= -tol).all();
  }
  if (auto* bl = std::get_if<Ball>(&shape_)) return (x - bl->center).norm() <= bl->radius + tol;
  if (auto* p = std::get_if<Polytope>(&shape_)) {
    if (((p->A * x - p->b).array() <= 0.0).all()) return true;
    return (project_polytope(*p, x) - x).norm() <= tol;
  }
  return true;
}

Vec ConvexSet::support_point(const Vec& g) const {
  if (g.size() != dim_) throw InputError("support_point: dimension mismatch");
  if (auto* b = std::get_if<Box>(&shape_)) {
    Vec x(dim_);
    for (int i = 0; i < dim_; ++i) {
      if (g(i) > 0) x(i) = b->hi(i);
      else if (g(i) < 0) x(i) = b->lo(i);
      else x(i) = std::isfinite(b->lo(i) + b->hi(i)) ? 0.5 * (b->lo(i) + b->hi(i))
                  : std::isfinite(b->lo(i)) ? b->lo(i)
                  : std::isfinite(b->hi(i)) ? b->hi(i) : 0.0;
      if (!std::isfinite(x(i))) throw DomainError("support point: set is unbounded in the requested direction");
    }
    return x;
  }
  if (auto* bl = std::get_if<Ball>(&shape_)) {
    double n = g.norm();
    return n == 0.0 ? bl->center : Vec(bl->center + (bl->radius / n) * g);
  }
  if (auto* p = std::get_if<Polytope>(&shape_)) {
    double diverge = 1e9 * (1.0 + p->b.lpNorm<Eigen::Infinity>());
    return polytope_lp(*p, g, Vec::Zero(dim_), diverge);
  }
  if (g.norm() == 0.0) return Vec::Zero(dim_);
  throw DomainError("support point: set is unbounded in the requested direction");
}

double ConvexSet::support_value(const Vec& g) const {
  if (auto* b = std::get_if<Box>(&shape_)) {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      if (g(i) > 0) s += g(i) * b->hi(i);
      else if (g(i) < 0) s += g(i) * b->lo(i);
    }
    return s;
  }
  if (auto* bl = std::get_if<Ball>(&shape_)) return g.dot(bl->center) + bl->radius * g.norm();
  try {
    return g.dot(support_point(g));
  } catch (const DomainError&) {
    return kInf;
  }
}

void ConvexSet::inequalities(Mat& A, Vec& b) const {
  if (auto* bx = std::get_if<Box>(&shape_)) {
    std::vector<std::pair<Vec, double>> rows;
    for (int i = 0; i < dim_; ++i) {
      if (std::isfinite(bx->hi(i))) {
        Vec r = Vec::Zero(dim_);
        r(i) = 1.0;
        rows.emplace_back(r, bx->hi(i));
      }
      if (std::isfinite(bx->lo(i))) {
        Vec r = Vec::Zero(dim_);
        r(i) = -1.0;
        rows.emplace_back(r, -bx->lo(i));
      }
    }
    A.resize(static_cast<Eigen::Index>(rows.size()), dim_);
    b.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
      A.row(static_cast<Eigen::Index>(k)) = rows[k].first.transpose();
      b(static_cast<Eigen::Index>(k)) = rows[k].second;
    }
    return;
  }
  if (auto* p = std::get_if<Polytope>(&shape_)) {
    A = p->A;
    b = p->b;
    return;
  }
  A.resize(0, dim_);
  b.resize(0);
}

}  // namespace cvhi
