#include "cvhi/operators.hpp"

#include <cmath>

#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const OperatorPart& part, int nz, int nx) {
  std::visit(overloaded{
                 [&](const AffineOperator& a) {
                   if (a.P.rows() != nx || a.P.cols() != nx) throw InputError("affine operator: P must be n x n");
                   if (a.K.rows() != nx || a.K.cols() != nz) throw InputError("affine operator: K must be n x m");
                   if (a.a.size() != nx) throw InputError("affine operator: a must have length n");
                 },
                 [&](const MonotoneGradientOperator& g) {
                   if (g.K.rows() != nx || g.K.cols() != nz) throw InputError("gradient operator: K must be n x m");
                   if (g.a.size() != nx) throw InputError("gradient operator: a must have length n");
                   if (auto* pw = std::get_if<PowerPotential>(&g.potential)) {
                     if (!(pw->q >= 2.0)) throw InputError("power potential: exponent must be at least 2");
                     if (!(pw->c >= 0.0)) throw InputError("power potential: coefficient must be nonnegative");
                   } else if (!(std::get<SoftplusPotential>(g.potential).c >= 0.0)) {
                     throw InputError("softplus potential: coefficient must be nonnegative");
                   }
                 },
                 [&](const CompositeOperator& c) {
                   if (c.parts.empty()) throw InputError("composite operator: no parts");
                   for (const auto& p : c.parts) validate(p, nz, nx);
                 }},
             part);
}

Vec apply_part(const OperatorPart& part, const Vec& p, const Vec& x) {
  return std::visit(overloaded{
                        [&](const AffineOperator& a) -> Vec { return a.P * x + a.K * p + a.a; },
                        [&](const MonotoneGradientOperator& g) -> Vec {
                          Vec out = g.K * p + g.a;
                          if (auto* pw = std::get_if<PowerPotential>(&g.potential)) {
                            double r = x.norm();
                            if (r > 0) out += pw->c * std::pow(r, pw->q - 2.0) * x;
                          } else {
                            double c = std::get<SoftplusPotential>(g.potential).c;
                            for (Eigen::Index i = 0; i < x.size(); ++i) out(i) += c / (1.0 + std::exp(-x(i)));
                          }
                          return out;
                        },
                        [&](const CompositeOperator& c) -> Vec {
                          Vec out = Vec::Zero(x.size());
                          for (const auto& q : c.parts) out += apply_part(q, p, x);
                          return out;
                        }},
                    part);
}

Mat jac_part(const OperatorPart& part, const Vec& p, const Vec& x) {
  const Eigen::Index n = x.size();
  return std::visit(overloaded{
                        [&](const AffineOperator& a) -> Mat { return a.P; },
                        [&](const MonotoneGradientOperator& g) -> Mat {
                          if (auto* pw = std::get_if<PowerPotential>(&g.potential)) {
                            double r = x.norm();
                            if (pw->q == 2.0) return pw->c * Mat::Identity(n, n);
                            if (r == 0.0) return Mat::Zero(n, n);
                            double rq = std::pow(r, pw->q - 2.0);
                            return pw->c * (rq * Mat::Identity(n, n) +
                                            (pw->q - 2.0) * std::pow(r, pw->q - 4.0) * x * x.transpose());
                          }
                          double c = std::get<SoftplusPotential>(g.potential).c;
                          Vec d(n);
                          for (Eigen::Index i = 0; i < n; ++i) {
                            double s = 1.0 / (1.0 + std::exp(-x(i)));
                            d(i) = c * s * (1.0 - s);
                          }
                          return d.asDiagonal();
                        },
                        [&](const CompositeOperator& c) -> Mat {
                          Mat out = Mat::Zero(n, n);
                          for (const auto& q : c.parts) out += jac_part(q, p, x);
                          return out;
                        }},
                    part);
}

double growth_part(const OperatorPart& part, int nx) {
  return std::visit(overloaded{
                        [&](const AffineOperator& a) {
                          return std::max({op_norm(a.P), op_norm(a.K), a.a.norm()});
                        },
                        [&](const MonotoneGradientOperator& g) {
                          if (auto* pw = std::get_if<PowerPotential>(&g.potential)) {
                            if (pw->q > 2.0) {
                              throw UnsupportedEstimate(
                                  "power potential with exponent above 2 has superlinear growth");
                            }
                            return std::max({pw->c, op_norm(g.K), g.a.norm()});
                          }
                          double c = std::get<SoftplusPotential>(g.potential).c;
                          return std::max(c * std::sqrt(static_cast<double>(nx)) + g.a.norm(), op_norm(g.K));
                        },
                        [&](const CompositeOperator& c) {
                          double s = 0.0;
                          for (const auto& q : c.parts) s += growth_part(q, nx);
                          return s;
                        }},
                    part);
}

bool affine_part(const OperatorPart& part) {
  if (std::holds_alternative<AffineOperator>(part)) return true;
  if (auto* c = std::get_if<CompositeOperator>(&part)) {
    for (const auto& q : c->parts) {
      if (!affine_part(q)) return false;
    }
    return true;
  }
  if (auto* g = std::get_if<MonotoneGradientOperator>(&part)) {
    if (auto* pw = std::get_if<PowerPotential>(&g->potential)) return pw->q == 2.0;
  }
  return false;
}

// Collapses an affine-only part into (P, K, a).
void affine_data(const OperatorPart& part, Mat& P, Mat& K, Vec& a) {
  std::visit(overloaded{
                 [&](const AffineOperator& o) {
                   P += o.P;
                   K += o.K;
                   a += o.a;
                 },
                 [&](const MonotoneGradientOperator& g) {
                   P += std::get<PowerPotential>(g.potential).c * Mat::Identity(P.rows(), P.cols());
                   K += g.K;
                   a += g.a;
                 },
                 [&](const CompositeOperator& c) {
                   for (const auto& q : c.parts) affine_data(q, P, K, a);
                 }},
             part);
}

bool monotone_part(const OperatorPart& part) {
  return std::visit(overloaded{
                        [](const AffineOperator& a) {
                          return min_sym_eigenvalue(a.P) >= -1e-12 * (1.0 + op_norm(a.P));
                        },
                        [](const MonotoneGradientOperator&) { return true; },
                        [](const CompositeOperator&) { return false; }},
                    part);
}

double coupling_part(const OperatorPart& part) {
  return std::visit(overloaded{[](const AffineOperator& a) { return op_norm(a.K); },
                               [](const MonotoneGradientOperator& g) { return op_norm(g.K); },
                               [](const CompositeOperator& c) {
                                 double s = 0.0;
                                 for (const auto& q : c.parts) s += coupling_part(q);
                                 return s;
                               }},
                    part);
}

}  // namespace

CoupledOperator::CoupledOperator(int param_dim, int dim, OperatorPart part)
    : nz_(param_dim), nx_(dim), part_(std::move(part)) {
  validate(part_, nz_, nx_);
}

CoupledOperator CoupledOperator::affine(Mat P, Mat K, Vec a) {
  int nx = static_cast<int>(P.rows());
  int nz = static_cast<int>(K.cols());
  return CoupledOperator(nz, nx, AffineOperator{std::move(P), std::move(K), std::move(a)});
}

CoupledOperator CoupledOperator::zero(int param_dim, int dim) {
  return affine(Mat::Zero(dim, dim), Mat::Zero(dim, param_dim), Vec::Zero(dim));
}

std::string CoupledOperator::kind() const {
  switch (part_.index()) {
    case 0: return "affine";
    case 1: return "monotone_gradient";
    default: return "composite";
  }
}

Vec CoupledOperator::apply(const Vec& p, const Vec& x) const {
  if (p.size() != nz_ || x.size() != nx_) throw InputError("operator: argument dimension mismatch");
  return apply_part(part_, p, x);
}

Mat CoupledOperator::jacobian_x(const Vec& p, const Vec& x) const { return jac_part(part_, p, x); }

double CoupledOperator::growth_constant() const { return growth_part(part_, nx_); }

bool CoupledOperator::is_affine() const { return affine_part(part_); }

bool CoupledOperator::monotone_in_x() const {
  if (is_affine()) {
    Mat P = Mat::Zero(nx_, nx_), K = Mat::Zero(nx_, nz_);
    Vec a = Vec::Zero(nx_);
    affine_data(part_, P, K, a);
    return min_sym_eigenvalue(P) >= -1e-12 * (1.0 + op_norm(P));
  }
  if (auto* c = std::get_if<CompositeOperator>(&part_)) {
    for (const auto& q : c->parts) {
      if (!monotone_part(q)) return false;
    }
    return true;
  }
  return monotone_part(part_);
}

bool CoupledOperator::parameter_free() const { return coupling_norm() == 0.0; }

double CoupledOperator::strong_monotonicity() const {
  if (!is_affine()) return 0.0;
  Mat P = Mat::Zero(nx_, nx_), K = Mat::Zero(nx_, nz_);
  Vec a = Vec::Zero(nx_);
  affine_data(part_, P, K, a);
  return min_sym_eigenvalue(P);
}

double CoupledOperator::coupling_norm() const { return coupling_part(part_); }

double coercivity_value(const CoupledOperator& T, const MaxSmoothBifunction& J, const LinearMap& delta,
                        const LinearMap& gamma, const Vec& p, const Vec& x, double activity_tol) {
  double nx = x.norm();
  if (nx == 0.0) throw DomainError("coercivity_value: x must be nonzero");
  Vec gx = gamma.apply(x);
  double j0 = J.clarke_dir(delta.apply(p), gx, -gx, activity_tol);
  return (T.apply(p, x).dot(x) - j0) / nx;
}

}  // namespace cvhi
