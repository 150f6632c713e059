#pragma once

#include <cstdint>
#include <string>

#include "cvhi/problem.hpp"

namespace cvhi {

enum class GapMethod { Auto, Enumeration, Ascent };

struct GapOptions {
  double activity_tol = 1e-9;
  GapMethod method = GapMethod::Auto;
  // Absolute tolerance on (upper bound - attained value) for the ascent route.
  double ascent_tol = 1e-11;
  int max_prox_steps = 200;
  // Half-width of the box the search is restricted to when the set is unbounded.
  double search_radius = 1.0;
  // Lower bound only: vertex candidates and two ascent steps (oracle prefilter).
  bool cheap = false;
  std::uint64_t seed = 0;
};

struct GapValue {
  double value = 0.0;
  // Certified upper bound; equals value for the exact routes.
  double upper = 0.0;
  Vec argmax;
  bool converged = true;
  std::string method;
};

// sup over the (localized) feasible set of the residual form of one inequality,
// evaluated at (own, other). Zero exactly at solutions.
GapValue primal_gap(const CoupledProblem& prob, Side side, const Vec& own, const Vec& other,
                    const GapOptions& opts = {});

GapValue primal_gap_1(const CoupledProblem& prob, const Vec& u, const Vec& w, const GapOptions& opts = {});
GapValue primal_gap_2(const CoupledProblem& prob, const Vec& u, const Vec& w, const GapOptions& opts = {});

struct MintyValue {
  double value = 0.0;
  Vec argmax;
  // Search is a multistart heuristic; true when the dimension exceeds the
  // range where the grid stage is run.
  bool heuristic = false;
};

MintyValue minty_gap(const CoupledProblem& prob, Side side, const Vec& own, const Vec& other,
                     const GapOptions& opts = {});

struct GapReport {
  double gap1 = 0.0, gap2 = 0.0;
  double minty1 = 0.0, minty2 = 0.0;
  Vec arg1, arg2, minty_arg1, minty_arg2;
  double tol_cert = 1e-7;
  bool certified = false;
  bool minty_heuristic = false;
  double joint() const { return std::max(gap1, gap2); }
};

GapReport certify(const CoupledProblem& prob, const Vec& u, const Vec& w, double tol_cert = 1e-7,
                  const GapOptions& opts = {});

// Nearest point of C ∩ dom psi (first side) or D ∩ dom theta (second side).
Vec project_feasible(const CoupledProblem& prob, Side side, const Vec& x);

}  // namespace cvhi
