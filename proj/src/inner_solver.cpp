#include "cvhi/inner_solver.hpp"

#include <cmath>
#include <limits>
#include <variant>

namespace cvhi {

Vec inner_step(const CoupledProblem& prob, Side side, const Vec& other, const Vec& x, double lambda,
               const CompositeSettings& sub) {
  SideView sv = side_view(prob, side);
  const int n = sv.dim;
  const Vec p = sv.delta->apply(other);
  const Vec xg = sv.gamma->apply(x);

  Mat M = psd_part(sv.op->jacobian_x(other, x)) + Mat::Identity(n, n) / lambda;
  CompositeProgram prog(n);
  prog.M = M;
  prog.b = sv.op->apply(other, x) - *sv.rhs - M * x;

  if (!sv.J->is_zero()) {
    const auto& pcs = sv.J->pieces();
    Mat G(static_cast<Eigen::Index>(pcs.size()), n);
    Vec a(static_cast<Eigen::Index>(pcs.size()));
    for (size_t i = 0; i < pcs.size(); ++i) {
      Vec gi = sv.gamma->adjoint(pcs[i].grad_x(p, xg));
      G.row(static_cast<Eigen::Index>(i)) = gi.transpose();
      a(static_cast<Eigen::Index>(i)) = pcs[i].value(p, xg) - gi.dot(x);
    }
    if (pcs.size() == 1) prog.b += G.row(0).transpose();
    else prog.add_max_term(G, a);
  }
  sv.psi->append_to(prog);
  Mat A;
  Vec b;
  sv.set->inequalities(A, b);
  prog.add_inequalities(A, b);
  if (auto* bl = std::get_if<Ball>(&sv.set->shape())) prog.balls.push_back({bl->center, bl->radius});

  CompositeSolution s = solve_composite(prog, sub);
  Vec xn = s.x;
  if (sv.set->kind() == "box") xn = sv.set->project(xn);
  if (!sv.set->contains(xn) || !sv.psi->in_domain(xn)) xn = project_feasible(prob, side, xn);
  return xn;
}

InnerResult solve_inner(const CoupledProblem& prob, Side side, const Vec& other, const Vec& x0,
                        const InnerParams& params) {
  if (!(params.lambda > 0.0)) throw InputError("inner solver: lambda must be positive");
  if (!(params.step_tol > 0.0) || !(params.gap_tol > 0.0)) throw InputError("inner solver: tolerances must be positive");
  SideView sv = side_view(prob, side);
  if (x0.size() != sv.dim || other.size() != sv.other_dim) throw InputError("inner solver: dimension mismatch");

  Vec x = x0;
  if (!sv.set->contains(x) || !sv.psi->in_domain(x)) x = project_feasible(prob, side, x);

  auto gap_at = [&](const Vec& y) { return primal_gap(prob, side, y, other, params.gap).value; };

  // Returned iterates are certified and stationary. The gap alone is too weak
  // near a face where the residual is parallel to the normal (it shrinks like
  // the squared distance), so a certified iterate keeps iterating until its step
  // falls below step_tol, or for stall_limit more steps when the subproblem
  // noise floor sits above step_tol.
  constexpr int stall_limit = 100;
  InnerResult res;
  double g = gap_at(x);
  Vec best = x;
  double best_gap = g;
  int certified_since = g <= params.gap_tol ? 0 : -1;

  double lambda = params.lambda;
  double prev_step = std::numeric_limits<double>::infinity();
  int rising = 0;
  for (int k = 1; k <= params.max_iter; ++k) {
    Vec xn = inner_step(prob, side, other, x, lambda, params.subproblem);
    double step = (xn - x).norm();
    rising = step > prev_step ? rising + 1 : 0;
    if (rising >= 5) {
      lambda *= 0.5;
      rising = 0;
    }
    prev_step = step;
    x = xn;
    if (step <= 1e-6 || certified_since >= 0 || k % 25 == 0) {
      g = gap_at(x);
      if (g <= best_gap) {
        best_gap = g;
        best = x;
      }
      if (g <= params.gap_tol) {
        if (certified_since < 0) certified_since = k;
        if (step <= params.step_tol || k - certified_since >= stall_limit) {
          res.x = x;
          res.iterations = k;
          res.gap = g;
          res.lambda = lambda;
          return res;
        }
      }
    }
  }
  throw InnerNonConvergence("inner solver: no certified point after " + std::to_string(params.max_iter) +
                                " iterations (best gap " + std::to_string(best_gap) + ")",
                            best, best_gap, params.max_iter);
}

}  // namespace cvhi
