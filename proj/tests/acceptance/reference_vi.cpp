#include "reference_vi.hpp"

#include <cmath>
#include <variant>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cvhi/errors.hpp"

namespace cvhi::reference {

namespace {

// prox of lambda * (weight ||.||_1 + indicator of the set) for one block.
struct BlockProx {
  ConvexSet set;
  double weight = 0.0;

  Vec operator()(const Vec& x, double lambda) const {
    Vec y = x;
    if (weight > 0.0) {
      const double t = lambda * weight;
      for (int i = 0; i < y.size(); ++i) y(i) = std::copysign(std::max(std::abs(y(i)) - t, 0.0), y(i));
    }
    // Soft thresholding then clipping is exact only for separable sets.
    return std::visit(
        [&](const auto& s) -> Vec {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Box>) {
            return y.cwiseMax(s.lo).cwiseMin(s.hi);
          } else if constexpr (std::is_same_v<S, Ball>) {
            Vec d = y - s.center;
            double n = d.norm();
            return n <= s.radius ? y : Vec(s.center + d * (s.radius / n));
          } else if constexpr (std::is_same_v<S, Polytope>) {
            return project_polytope(s.A, s.b, y);
          } else {
            return y;
          }
        },
        set.shape());
  }
};

// Folds quadratic terms into (Q, q); returns the l1 weight. Other terms are unsupported.
double split_terms(const ConvexExtendedFunction& f, Mat& Q, Vec& q, const char* name) {
  Q = Mat::Zero(f.dim(), f.dim());
  q = Vec::Zero(f.dim());
  double l1 = 0.0;
  for (const auto& term : f.terms()) {
    if (const auto* t = std::get_if<QuadraticTerm>(&term)) {
      Q += t->Q;
      q += t->q;
    } else if (const auto* t = std::get_if<WeightedL1Term>(&term)) {
      l1 += t->weight;
    } else if (!std::holds_alternative<ZeroTerm>(term)) {
      throw InputError(std::string("reference VI: unsupported term in ") + name);
    }
  }
  return l1;
}

}  // namespace

Vec project_polytope(const Mat& A, const Vec& b, const Vec& x) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  auto feasible = [&](const Vec& y) { return ((A * y - b).array() <= 1e-12 * (1.0 + b.cwiseAbs().maxCoeff())).all(); };
  if (feasible(x)) return x;
  Vec best;
  double best_dist = INFINITY;
  // Every subset of at most n constraints taken as active; the KKT point with
  // nonnegative multipliers is the projection.
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1u) act.push_back(i);
    if (static_cast<int>(act.size()) > n) continue;
    Mat As(act.size(), n);
    Vec bs(act.size());
    for (std::size_t k = 0; k < act.size(); ++k) {
      As.row(static_cast<int>(k)) = A.row(act[k]);
      bs(static_cast<int>(k)) = b(act[k]);
    }
    Mat G = As * As.transpose();
    Eigen::FullPivLU<Mat> lu(G);
    if (lu.rank() < G.rows()) continue;
    Vec mult = lu.solve(As * x - bs);
    if (mult.minCoeff() < -1e-12) continue;
    Vec y = x - As.transpose() * mult;
    if (!feasible(y)) continue;
    double d = (y - x).norm();
    if (d < best_dist) {
      best_dist = d;
      best = y;
    }
  }
  if (best.size() == 0) throw InputError("reference VI: polytope projection found no KKT point");
  return best;
}

VIResult solve_vi(const CoupledProblem& prob, double tol, int max_iter) {
  if (!prob.J.is_zero() || !prob.H.is_zero()) throw InputError("reference VI: J and H must vanish");
  if (!prob.A.is_affine() || !prob.B.is_affine()) throw InputError("reference VI: operators must be affine");
  const int nV = prob.layout.nV, nE = prob.layout.nE, n = nV + nE;

  Mat Qp, Qt;
  Vec qp, qt;
  BlockProx prox_u{prob.C, split_terms(prob.psi, Qp, qp, "psi")};
  BlockProx prox_w{prob.D, split_terms(prob.theta, Qt, qt, "theta")};
  for (const BlockProx* bp : {&prox_u, &prox_w}) {
    if (bp->weight > 0.0 && (std::holds_alternative<Ball>(bp->set.shape()) ||
                             std::holds_alternative<Polytope>(bp->set.shape())))
      throw InputError("reference VI: l1 potential needs a box or the whole space");
  }

  auto F = [&](const Vec& z) {
    Vec u = z.head(nV), w = z.tail(nE);
    Vec out(n);
    out.head(nV) = prob.A.apply(w, u) + Qp * u + qp - prob.h;
    out.tail(nE) = prob.B.apply(u, w) + Qt * w + qt - prob.l;
    return out;
  };
  const Vec c = F(Vec::Zero(n));
  Mat M(n, n);
  for (int j = 0; j < n; ++j) M.col(j) = F(Vec::Unit(n, j)) - c;

  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
  const double mu = es.eigenvalues().minCoeff();
  if (!(mu > 1e-9)) throw InputError("reference VI: stacked operator is not strongly monotone");
  const double L = Eigen::JacobiSVD<Mat>(M).singularValues()(0);
  // z -> prox(z - lambda F(z)) contracts with factor q for lambda = mu / L^2.
  const double lambda = mu / (L * L);
  const double q = std::sqrt(std::max(0.0, 1.0 - mu * mu / (L * L)));

  auto step = [&](const Vec& z) {
    Vec y = z - lambda * (M * z + c);
    Vec out(n);
    out.head(nV) = prox_u(y.head(nV), lambda);
    out.tail(nE) = prox_w(y.tail(nE), lambda);
    return out;
  };

  Vec z = step(Vec::Zero(n));
  VIResult res;
  for (int k = 1; k <= max_iter; ++k) {
    Vec next = step(z);
    double bound = q / (1.0 - q) * (next - z).norm();
    z = std::move(next);
    res.iterations = k;
    res.error_bound = bound;
    if (bound <= tol) break;
  }
  res.u = z.head(nV);
  res.w = z.tail(nE);
  return res;
}

}  // namespace cvhi::reference
