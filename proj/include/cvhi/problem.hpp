#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvhi/functions.hpp"
#include "cvhi/linalg.hpp"
#include "cvhi/operators.hpp"
#include "cvhi/spaces.hpp"

namespace cvhi {

// Dimensions of the six coordinate spaces: states V and E, trace spaces X
// and Y, parameter spaces Z1 and Z2.
struct SpaceLayout {
  int nV = 1, nE = 1, nX = 1, nY = 1, nZ1 = 1, nZ2 = 1;
  bool operator==(const SpaceLayout&) const = default;
};

// r(t, s) = slope * t - coupling * s - offset
struct LinearProfile {
  double slope = 0.0;
  double coupling = 0.0;
  double offset = 0.0;
  double operator()(double t, double s) const { return slope * t - coupling * s - offset; }
};

// Tabulated profile, only probed at its own grid points.
struct TableProfile {
  std::vector<double> t, s;
  std::vector<std::vector<double>> r;  // r[i][j] at (t[i], s[j])
};

using CoercivityProfile = std::variant<LinearProfile, TableProfile>;

enum class SpecialCase { General, I, II, III, IV, V, VI, VII };

std::string to_string(SpecialCase k);
SpecialCase special_case_from_string(const std::string& s);

struct ProblemMeta {
  std::string name;
  std::string description;
  std::optional<bool> expect_audit_pass;
  std::optional<std::pair<Vec, Vec>> reference;
};

enum class Side { First, Second };

// Coupled system: find u in C, w in D with
//   <A(w,u), v-u> + J0(d1 w, g1 u; g1(v-u)) + psi(v) - psi(u) >= <h, v-u>  for v in C
//   <B(u,w), z-w> + H0(d2 u, g2 w; g2(z-w)) + theta(z) - theta(w) >= <l, z-w>  for z in D
struct CoupledProblem {
  SpaceLayout layout;
  CoupledOperator A, B;
  MaxSmoothBifunction J, H;
  ConvexExtendedFunction psi, theta;
  ConvexSet C, D;
  LinearMap gamma1, gamma2, delta1, delta2;
  Vec h, l;
  std::optional<Vec> u0, w0;
  std::optional<CoercivityProfile> rA, rB;
  SpecialCase kind = SpecialCase::General;
  ProblemMeta meta;

  // Throws InputError naming the first inconsistent component.
  void validate() const;
};

// One of the two inequalities, seen from its own unknown.
struct SideView {
  const CoupledOperator* op;
  const MaxSmoothBifunction* J;
  const ConvexExtendedFunction* psi;
  const ConvexSet* set;
  const LinearMap* gamma;
  const LinearMap* delta;
  const Vec* rhs;
  int dim;
  int other_dim;
};

SideView side_view(const CoupledProblem& prob, Side s);

// Generalized directional derivative of J at (delta o, gamma x) in direction gamma d.
double coupled_clarke_dir(const SideView& sv, const Vec& own, const Vec& other, const Vec& d,
                          double tol = 1e-9);

// Fills missing components for a special case and validates the zero
// pattern. Throws InputError when a supplied part contradicts the case.
struct SpecialCaseParts {
  SpaceLayout layout;
  std::optional<CoupledOperator> A, B;
  std::optional<MaxSmoothBifunction> J, H;
  std::optional<ConvexExtendedFunction> psi, theta;
  std::optional<ConvexSet> C, D;
  std::optional<LinearMap> gamma1, gamma2, delta1, delta2;
  std::optional<Vec> h, l;
};

CoupledProblem make_special_case(SpecialCase kind, const SpecialCaseParts& parts);

// Checks the zero pattern a declared kind implies.
void check_special_case(const CoupledProblem& prob);

}  // namespace cvhi
