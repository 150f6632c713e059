#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "cvhi/composite.hpp"
#include "cvhi/linalg.hpp"
#include "cvhi/spaces.hpp"

namespace cvhi {

// 1/2 x'Qx + q'x + c with Q symmetric positive semidefinite.
struct QuadraticTerm {
  Mat Q;
  Vec q;
  double c = 0.0;
};

struct WeightedL1Term {
  double weight = 0.0;
};

struct NormL2Term {
  double weight = 0.0;
};

struct IndicatorTerm {
  ConvexSet set;
};

struct ZeroTerm {};

using ConvexTerm = std::variant<QuadraticTerm, WeightedL1Term, NormL2Term, IndicatorTerm, ZeroTerm>;

// Proper convex lower semicontinuous function given as a finite sum of terms.
// Evaluates to +inf outside the domain.
class ConvexExtendedFunction {
 public:
  ConvexExtendedFunction() = default;
  ConvexExtendedFunction(int dim, std::vector<ConvexTerm> terms);
  static ConvexExtendedFunction zero(int dim) { return ConvexExtendedFunction(dim, {}); }

  int dim() const { return dim_; }
  const std::vector<ConvexTerm>& terms() const { return terms_; }

  double value(const Vec& x) const;
  bool in_domain(const Vec& x, double tol = 1e-9) const;
  bool is_zero() const;
  // No quadratic, L2 or ball-indicator term: the function is polyhedral.
  bool piecewise_linear() const;
  bool has_indicator() const;
  double l1_weight() const;

  // Constants (alpha, beta) with value(x) >= -alpha ||x|| - beta everywhere.
  std::pair<double, double> minorant_constants() const;

  // Adds this function to a composite program.
  void append_to(CompositeProgram& prog) const;

 private:
  int dim_ = 0;
  std::vector<ConvexTerm> terms_;
};

// argmin_y f(y) + ||y - x||^2 / (2 lambda)
Vec prox(const ConvexExtendedFunction& f, const Vec& x, double lambda);

// Smooth piece of a max-of-smooth bifunction phi(p, x).
//   affine:    <g_p, p> + <g_x, x> + b
//   quadratic: 1/2 x'Sx + x'Wp + <g_p, p> + <g_x, x> + b
struct SmoothPiece {
  bool quadratic = false;
  Mat S;  // nX x nX, symmetric
  Mat W;  // nX x nZ
  Vec g_p, g_x;
  double b = 0.0;

  double value(const Vec& p, const Vec& x) const;
  Vec grad_x(const Vec& p, const Vec& x) const;
  Vec grad_p(const Vec& p, const Vec& x) const;
};

// J(p, x) = max_i phi_i(p, x), locally Lipschitz in x and Clarke regular.
class MaxSmoothBifunction {
 public:
  MaxSmoothBifunction() = default;
  MaxSmoothBifunction(int param_dim, int dim, std::vector<SmoothPiece> pieces);
  static MaxSmoothBifunction zero(int param_dim, int dim);

  int param_dim() const { return nz_; }
  int dim() const { return nx_; }
  const std::vector<SmoothPiece>& pieces() const { return pieces_; }

  double value(const Vec& p, const Vec& x) const;
  std::vector<int> active(const Vec& p, const Vec& x, double tol = 1e-9) const;
  // Generalized directional derivative in x.
  double clarke_dir(const Vec& p, const Vec& x, const Vec& d, double tol = 1e-9) const;
  // Vertices of the Clarke subdifferential in x (gradients of active pieces).
  std::vector<Vec> clarke_subdiff(const Vec& p, const Vec& x, double tol = 1e-9) const;

  // Smallest c with ||xi|| <= c (1 + ||p|| + ||x||) for every xi in the subdifferential.
  double growth_constant() const;
  // Bound on ||grad_x phi_i|| and ||grad_p phi_i|| over the box |p| <= rp, |x| <= rx.
  double gradient_bound_x(double rp, double rx) const;
  double gradient_bound_p(double rp, double rx) const;

  bool all_affine() const;
  bool is_zero() const;
  // Every piece is convex in x (affine or S positive semidefinite).
  bool convex_in_x() const;
  bool parameter_free() const;

 private:
  int nz_ = 0, nx_ = 0;
  std::vector<SmoothPiece> pieces_;
};

}  // namespace cvhi
