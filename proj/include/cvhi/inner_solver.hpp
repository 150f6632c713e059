#pragma once

#include "cvhi/composite.hpp"
#include "cvhi/errors.hpp"
#include "cvhi/gap.hpp"
#include "cvhi/problem.hpp"

namespace cvhi {

struct InnerParams {
  double lambda = 1.0;
  int max_iter = 2000;
  double step_tol = 1e-10;
  double gap_tol = 1e-8;
  CompositeSettings subproblem;
  GapOptions gap;
};

struct InnerResult {
  Vec x;
  int iterations = 0;
  double gap = 0.0;
  double lambda = 1.0;
};

class InnerNonConvergence : public NumericalError {
 public:
  InnerNonConvergence(const std::string& msg, Vec best, double best_gap, int iterations)
      : NumericalError(msg), best(std::move(best)), best_gap(best_gap), iterations(iterations) {}
  Vec best;
  double best_gap;
  int iterations;
};

// One application of the iteration map with the other unknown frozen:
//   argmin_{v in set} <T(o,x) - rhs, v> + max_i [phi_i + <grad phi_i, gamma(v - x)>] + psi(v)
//                    + 1/2 (v-x)' M (v-x),   M = psd(sym dT/dx) + I/lambda.
// Fixed points are exactly the solutions of the frozen inequality.
Vec inner_step(const CoupledProblem& prob, Side side, const Vec& other, const Vec& x, double lambda,
               const CompositeSettings& sub = {});

// Iterates inner_step until the primal gap certifies gap_tol.
InnerResult solve_inner(const CoupledProblem& prob, Side side, const Vec& other, const Vec& x0,
                        const InnerParams& params = {});

inline InnerResult solve_inner_1(const CoupledProblem& prob, const Vec& w, const Vec& u0,
                                 const InnerParams& params = {}) {
  return solve_inner(prob, Side::First, w, u0, params);
}

inline InnerResult solve_inner_2(const CoupledProblem& prob, const Vec& u, const Vec& w0,
                                 const InnerParams& params = {}) {
  return solve_inner(prob, Side::Second, u, w0, params);
}

}  // namespace cvhi
