#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvhi/problem.hpp"

namespace cvhi {

// provenance: "computed" (closed form, valid everywhere) or "sampled" (lower estimate)
struct GrowthConstant {
  double value = 0.0;
  std::string provenance = "computed";
};

// One radial probe: min over sampled directions of coercivity_value at
// ||own|| = t, ||other|| = s, against the declared profile.
struct CoercivityProbe {
  std::string regime;  // bounded0 | bounded1 | proportional | sublinear | table
  double t = 0.0, s = 0.0;
  double claimed = 0.0;
  double observed = 0.0;
  Vec x, p;  // minimizing pair
};

struct ProfileAudit {
  bool declared = false;
  bool linear = false;
  // observed >= claimed at every probe
  bool pointwise = true;
  // claimed and observed minima increase over the last two decades of every regime
  bool trend_consistent = true;
  // coupling slope of the linear profile is at least 0.9 times its slope
  bool weak_margin = false;
  // coupling slope >= slope: the profile does not grow along ||other|| = ||own|| + 1
  bool coupling_dominated = false;
  std::vector<CoercivityProbe> probes;
  std::optional<CoercivityProbe> witness;
  // Two probes along a regime whose profile values fail to increase.
  std::optional<std::pair<CoercivityProbe, CoercivityProbe>> trend_witness;
  bool ok() const { return declared && pointwise && trend_consistent; }
};

struct PseudoWitness {
  Vec u, v, other;
  // 0 for the plain operator, 1 for the operator shifted by the right-hand side
  int shift = 0;
  double premise = 0.0;     // max over vertices at u, >= 0
  double conclusion = 0.0;  // min over vertices at v, < 0
};

struct PseudoVerdict {
  std::string kind;  // pass-by-construction | not-falsified | falsified
  int samples = 0;
  std::optional<PseudoWitness> witness;
};

struct HypothesisStatus {
  std::string name;
  std::string status;  // pass | fail | flag
  std::string detail;
};

struct HypothesisReport {
  GrowthConstant bA, bB, cJ, cH;
  double alpha_psi = 0, beta_psi = 0, alpha_theta = 0, beta_theta = 0;
  Vec u_anchor, w_anchor;
  ProfileAudit coercA, coercB;
  PseudoVerdict pseudoA, pseudoB;
  std::optional<double> R_solution, m0;
  std::string bound_note;
  std::vector<HypothesisStatus> statuses;
  bool passed = false;
  int samples = 0;
  std::uint64_t seed = 0;
};

HypothesisReport audit(const CoupledProblem& prob, int samples = 1000, std::uint64_t seed = 0);

// Loosening of the solution bound so that it also covers approximate solutions.
struct BoundRelaxation {
  // Pairs whose two primal gaps are at most gap_slack, with the gap taken
  // over search boxes of half-width search_radius around the candidate.
  double gap_slack = 0.0;
  double search_radius = 1.0;
  // Bound on J0_eps(x; d) - J0(x; d) per unit ||d|| in the trace space, when
  // the gaps were computed with relaxed activity.
  double activity_spread1 = 0.0, activity_spread2 = 0.0;
};

// Radius containing every solution (or every approximate solution described
// by the relaxation). Throws DomainError "no finite a-priori bound derivable"
// when the constants do not close the bound.
double solution_bound(const CoupledProblem& prob, const HypothesisReport& report, const BoundRelaxation& relax = {});

// m0 >= solution_bound such that the bound chain maps the box
// {||u|| <= m0, ||w|| <= m0} into itself.
double invariance_radius(const CoupledProblem& prob, const HypothesisReport& report);

PseudoVerdict falsify_pseudomonotone(const CoupledProblem& prob, Side side, int samples, std::uint64_t seed);

// Fresh evaluation of the premise and conclusion of a witness.
std::pair<double, double> evaluate_pseudo_witness(const CoupledProblem& prob, Side side, const PseudoWitness& w);

// Fresh coercivity_value at a probe pair.
double evaluate_coercivity(const CoupledProblem& prob, Side side, const Vec& x, const Vec& p);

}  // namespace cvhi
