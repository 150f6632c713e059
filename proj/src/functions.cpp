#include "cvhi/functions.hpp"

#include <cmath>
#include <limits>

#include "cvhi/errors.hpp"

namespace cvhi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

ConvexExtendedFunction::ConvexExtendedFunction(int dim, std::vector<ConvexTerm> terms)
    : dim_(dim), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    std::visit(overloaded{
                   [&](const QuadraticTerm& q) {
                     if (q.Q.rows() != dim || q.Q.cols() != dim || q.q.size() != dim) {
                       throw InputError("quadratic term: expected Q of size n x n and q of length n");
                     }
                     if ((q.Q - q.Q.transpose()).norm() > 1e-12 * (1.0 + q.Q.norm())) {
                       throw InputError("quadratic term: Q must be symmetric");
                     }
                     if (min_sym_eigenvalue(q.Q) < -1e-12 * (1.0 + q.Q.norm())) {
                       throw InputError("quadratic term: Q must be positive semidefinite");
                     }
                   },
                   [&](const WeightedL1Term& w) {
                     if (!(w.weight >= 0.0)) throw InputError("l1 term: weight must be nonnegative");
                   },
                   [&](const NormL2Term& w) {
                     if (!(w.weight >= 0.0)) throw InputError("l2 term: weight must be nonnegative");
                   },
                   [&](const IndicatorTerm& s) {
                     if (s.set.dim() != dim) throw InputError("indicator term: set dimension mismatch");
                   },
                   [](const ZeroTerm&) {}},
               t);
  }
}

double ConvexExtendedFunction::value(const Vec& x) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    v += std::visit(overloaded{
                        [&](const QuadraticTerm& q) { return 0.5 * x.dot(q.Q * x) + q.q.dot(x) + q.c; },
                        [&](const WeightedL1Term& w) { return w.weight * x.lpNorm<1>(); },
                        [&](const NormL2Term& w) { return w.weight * x.norm(); },
                        [&](const IndicatorTerm& s) { return s.set.contains(x) ? 0.0 : kInf; },
                        [](const ZeroTerm&) { return 0.0; }},
                    t);
  }
  return v;
}

bool ConvexExtendedFunction::in_domain(const Vec& x, double tol) const {
  for (const auto& t : terms_) {
    if (auto* s = std::get_if<IndicatorTerm>(&t)) {
      if (!s->set.contains(x, tol)) return false;
    }
  }
  return true;
}

bool ConvexExtendedFunction::is_zero() const {
  for (const auto& t : terms_) {
    if (!std::holds_alternative<ZeroTerm>(t)) return false;
  }
  return true;
}

bool ConvexExtendedFunction::piecewise_linear() const {
  for (const auto& t : terms_) {
    if (std::holds_alternative<QuadraticTerm>(t)) {
      if (std::get<QuadraticTerm>(t).Q.norm() > 0.0) return false;
    } else if (std::holds_alternative<NormL2Term>(t)) {
      if (std::get<NormL2Term>(t).weight > 0.0) return false;
    } else if (auto* s = std::get_if<IndicatorTerm>(&t)) {
      if (!s->set.polyhedral()) return false;
    }
  }
  return true;
}

bool ConvexExtendedFunction::has_indicator() const {
  for (const auto& t : terms_) {
    if (std::holds_alternative<IndicatorTerm>(t)) return true;
  }
  return false;
}

double ConvexExtendedFunction::l1_weight() const {
  double w = 0.0;
  for (const auto& t : terms_) {
    if (auto* l = std::get_if<WeightedL1Term>(&t)) w += l->weight;
  }
  return w;
}

std::pair<double, double> ConvexExtendedFunction::minorant_constants() const {
  double alpha = 0.0, beta = 0.0;
  for (const auto& t : terms_) {
    if (auto* q = std::get_if<QuadraticTerm>(&t)) {
      // Split q into range(Q) and null(Q): the null part is only linearly
      // bounded, the range part is absorbed by the quadratic.
      Eigen::SelfAdjointEigenSolver<Mat> es(q->Q);
      const double tol = 1e-12 * (1.0 + q->Q.norm());
      Vec qr = Vec::Zero(dim_), qn = Vec::Zero(dim_);
      double quad_min = 0.0;
      for (int i = 0; i < dim_; ++i) {
        Vec v = es.eigenvectors().col(i);
        double lam = es.eigenvalues()(i);
        double comp = v.dot(q->q);
        if (lam > tol) {
          qr += comp * v;
          quad_min += comp * comp / lam;
        } else {
          qn += comp * v;
        }
      }
      alpha += qn.norm();
      beta += std::max(0.0, 0.5 * quad_min - q->c);
    }
  }
  return {alpha, beta};
}

void ConvexExtendedFunction::append_to(CompositeProgram& prog) const {
  const int n = dim_;
  for (const auto& t : terms_) {
    std::visit(overloaded{
                   [&](const QuadraticTerm& q) {
                     prog.M += q.Q;
                     prog.b += q.q;
                   },
                   [&](const WeightedL1Term& w) {
                     if (w.weight == 0.0) return;
                     for (int i = 0; i < n; ++i) {
                       Mat G = Mat::Zero(2, n);
                       G(0, i) = w.weight;
                       G(1, i) = -w.weight;
                       prog.add_max_term(G, Vec::Zero(2));
                     }
                   },
                   [&](const NormL2Term& w) {
                     if (w.weight == 0.0) return;
                     prog.norm_terms.push_back({Mat::Identity(n, n), Vec::Zero(n), w.weight});
                   },
                   [&](const IndicatorTerm& s) {
                     if (auto* bl = std::get_if<Ball>(&s.set.shape())) {
                       prog.balls.push_back({bl->center, bl->radius});
                     } else {
                       Mat A;
                       Vec b;
                       s.set.inequalities(A, b);
                       prog.add_inequalities(A, b);
                     }
                   },
                   [](const ZeroTerm&) {}},
               t);
  }
}

Vec prox(const ConvexExtendedFunction& f, const Vec& x, double lambda) {
  if (x.size() != f.dim()) throw InputError("prox: dimension mismatch");
  if (!(lambda > 0.0)) throw InputError("prox: lambda must be positive");
  const int n = f.dim();
  CompositeProgram prog(n);
  prog.M = Mat::Identity(n, n) / lambda;
  prog.b = -x / lambda;
  f.append_to(prog);
  CompositeSolution s = solve_composite(prog);
  if (!s.converged) throw NumericalError("prox: inner solve did not converge");
  return s.x;
}

double SmoothPiece::value(const Vec& p, const Vec& x) const {
  double v = g_p.dot(p) + g_x.dot(x) + b;
  if (quadratic) v += 0.5 * x.dot(S * x) + x.dot(W * p);
  return v;
}

Vec SmoothPiece::grad_x(const Vec& p, const Vec& x) const {
  if (!quadratic) return g_x;
  return S * x + W * p + g_x;
}

Vec SmoothPiece::grad_p(const Vec& p, const Vec& x) const {
  (void)p;
  if (!quadratic) return g_p;
  return W.transpose() * x + g_p;
}

MaxSmoothBifunction::MaxSmoothBifunction(int param_dim, int dim, std::vector<SmoothPiece> pieces)
    : nz_(param_dim), nx_(dim), pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InputError("max-smooth function: at least one piece is required");
  for (size_t i = 0; i < pieces_.size(); ++i) {
    auto& pc = pieces_[i];
    std::string where = "piece " + std::to_string(i) + ": ";
    if (pc.g_p.size() != nz_) throw InputError(where + "g_p must have the parameter dimension");
    if (pc.g_x.size() != nx_) throw InputError(where + "g_x must have the state dimension");
    if (pc.quadratic) {
      if (pc.S.rows() != nx_ || pc.S.cols() != nx_) throw InputError(where + "S must be nX x nX");
      if (pc.W.rows() != nx_ || pc.W.cols() != nz_) throw InputError(where + "W must be nX x nZ");
      pc.S = 0.5 * (pc.S + pc.S.transpose());
    }
  }
}

MaxSmoothBifunction MaxSmoothBifunction::zero(int param_dim, int dim) {
  SmoothPiece p;
  p.g_p = Vec::Zero(param_dim);
  p.g_x = Vec::Zero(dim);
  return MaxSmoothBifunction(param_dim, dim, {p});
}

double MaxSmoothBifunction::value(const Vec& p, const Vec& x) const {
  double v = -kInf;
  for (const auto& pc : pieces_) v = std::max(v, pc.value(p, x));
  return v;
}

std::vector<int> MaxSmoothBifunction::active(const Vec& p, const Vec& x, double tol) const {
  std::vector<double> vals;
  vals.reserve(pieces_.size());
  double m = -kInf;
  for (const auto& pc : pieces_) {
    vals.push_back(pc.value(p, x));
    m = std::max(m, vals.back());
  }
  std::vector<int> act;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] >= m - tol) act.push_back(static_cast<int>(i));
  }
  return act;
}

double MaxSmoothBifunction::clarke_dir(const Vec& p, const Vec& x, const Vec& d, double tol) const {
  double v = -kInf;
  for (int i : active(p, x, tol)) v = std::max(v, pieces_[i].grad_x(p, x).dot(d));
  return v;
}

std::vector<Vec> MaxSmoothBifunction::clarke_subdiff(const Vec& p, const Vec& x, double tol) const {
  std::vector<Vec> out;
  for (int i : active(p, x, tol)) {
    Vec g = pieces_[i].grad_x(p, x);
    bool dup = false;
    for (const auto& o : out) dup = dup || (o - g).norm() == 0.0;
    if (!dup) out.push_back(g);
  }
  return out;
}

double MaxSmoothBifunction::growth_constant() const {
  double c = 0.0;
  for (const auto& pc : pieces_) {
    c = std::max(c, pc.g_x.norm());
    if (pc.quadratic) c = std::max({c, op_norm(pc.S), op_norm(pc.W)});
  }
  return c;
}

double MaxSmoothBifunction::gradient_bound_x(double rp, double rx) const {
  double c = 0.0;
  for (const auto& pc : pieces_) {
    double g = pc.g_x.norm();
    if (pc.quadratic) g += op_norm(pc.S) * rx + op_norm(pc.W) * rp;
    c = std::max(c, g);
  }
  return c;
}

double MaxSmoothBifunction::gradient_bound_p(double rp, double rx) const {
  (void)rp;
  double c = 0.0;
  for (const auto& pc : pieces_) {
    double g = pc.g_p.norm();
    if (pc.quadratic) g += op_norm(pc.W) * rx;
    c = std::max(c, g);
  }
  return c;
}

bool MaxSmoothBifunction::all_affine() const {
  for (const auto& pc : pieces_) {
    if (pc.quadratic && (pc.S.norm() > 0.0 || pc.W.norm() > 0.0)) return false;
  }
  return true;
}

bool MaxSmoothBifunction::is_zero() const {
  for (const auto& pc : pieces_) {
    if (pc.g_x.norm() > 0.0 || pc.g_p.norm() > 0.0 || pc.b != 0.0) return false;
    if (pc.quadratic && (pc.S.norm() > 0.0 || pc.W.norm() > 0.0)) return false;
  }
  return true;
}

bool MaxSmoothBifunction::convex_in_x() const {
  for (const auto& pc : pieces_) {
    if (pc.quadratic && min_sym_eigenvalue(pc.S) < -1e-14) return false;
  }
  return true;
}

bool MaxSmoothBifunction::parameter_free() const {
  for (const auto& pc : pieces_) {
    if (pc.g_p.norm() > 0.0) return false;
    if (pc.quadratic && pc.W.norm() > 0.0) return false;
  }
  return true;
}

}  // namespace cvhi
