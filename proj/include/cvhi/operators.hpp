#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "cvhi/functions.hpp"
#include "cvhi/linalg.hpp"

namespace cvhi {

// T(p, x) = P x + K p + a
struct AffineOperator {
  Mat P;
  Mat K;
  Vec a;
};

// Potentials f with T(p, x) = grad f(x) + K p + a.
//   power:    f(x) = (c/q) ||x||^q, q >= 2
//   softplus: f(x) = c sum_i log(1 + exp(x_i))
struct PowerPotential {
  double c = 1.0;
  double q = 2.0;
};
struct SoftplusPotential {
  double c = 1.0;
};

struct MonotoneGradientOperator {
  std::variant<PowerPotential, SoftplusPotential> potential;
  Mat K;
  Vec a;
};

struct CompositeOperator;

using OperatorPart = std::variant<AffineOperator, MonotoneGradientOperator, CompositeOperator>;

struct CompositeOperator {
  std::vector<OperatorPart> parts;
};

// Operator T : param space x state space -> state space (dual identified).
class CoupledOperator {
 public:
  CoupledOperator() = default;
  CoupledOperator(int param_dim, int dim, OperatorPart part);
  static CoupledOperator affine(Mat P, Mat K, Vec a);
  static CoupledOperator zero(int param_dim, int dim);

  int param_dim() const { return nz_; }
  int dim() const { return nx_; }
  const OperatorPart& part() const { return part_; }
  std::string kind() const;

  Vec apply(const Vec& p, const Vec& x) const;
  // Derivative in x.
  Mat jacobian_x(const Vec& p, const Vec& x) const;

  // b with ||T(p, x)|| <= b (1 + ||p|| + ||x||). Throws UnsupportedEstimate for
  // families without a closed form.
  double growth_constant() const;
  // Affine with constant coefficients.
  bool is_affine() const;
  // Affine with psd symmetric part or a convex-potential gradient, for every p.
  bool monotone_in_x() const;
  // No dependence on p.
  bool parameter_free() const;
  // Smallest eigenvalue of the symmetric part of P for affine operators.
  double strong_monotonicity() const;
  // Coupling matrix ||K|| summed over parts.
  double coupling_norm() const;

 private:
  int nz_ = 0, nx_ = 0;
  OperatorPart part_ = AffineOperator{};
};

// [<T(p,x), x> - J0(delta p, gamma x; -gamma x)] / ||x||, the quantity a
// coercivity profile must bound from below. Throws DomainError at x = 0.
double coercivity_value(const CoupledOperator& T, const MaxSmoothBifunction& J, const LinearMap& delta,
                        const LinearMap& gamma, const Vec& p, const Vec& x, double activity_tol = 1e-9);

}  // namespace cvhi
