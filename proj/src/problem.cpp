#include "cvhi/problem.hpp"

#include "cvhi/errors.hpp"

namespace cvhi {

std::string to_string(SpecialCase k) {
  switch (k) {
    case SpecialCase::General: return "general";
    case SpecialCase::I: return "i";
    case SpecialCase::II: return "ii";
    case SpecialCase::III: return "iii";
    case SpecialCase::IV: return "iv";
    case SpecialCase::V: return "v";
    case SpecialCase::VI: return "vi";
    case SpecialCase::VII: return "vii";
  }
  return "general";
}

SpecialCase special_case_from_string(const std::string& s) {
  static const std::pair<const char*, SpecialCase> table[] = {
      {"general", SpecialCase::General}, {"i", SpecialCase::I},   {"ii", SpecialCase::II},
      {"iii", SpecialCase::III},         {"iv", SpecialCase::IV}, {"v", SpecialCase::V},
      {"vi", SpecialCase::VI},           {"vii", SpecialCase::VII}};
  for (const auto& [name, k] : table) {
    if (s == name) return k;
  }
  throw InputError("unknown special case '" + s + "'");
}

namespace {

void expect_map(const LinearMap& m, int rows, int cols, const char* name, const char* shape) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError(std::string(name) + ": expected " + shape + " matrix, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

void CoupledProblem::validate() const {
  const auto& L = layout;
  if (L.nV < 1 || L.nE < 1 || L.nX < 1 || L.nY < 1 || L.nZ1 < 1 || L.nZ2 < 1) {
    throw InputError("layout: every dimension must be at least 1");
  }
  expect_map(gamma1, L.nX, L.nV, "gamma1", "nX×nV");
  expect_map(gamma2, L.nY, L.nE, "gamma2", "nY×nE");
  expect_map(delta1, L.nZ1, L.nE, "delta1", "nZ1×nE");
  expect_map(delta2, L.nZ2, L.nV, "delta2", "nZ2×nV");
  if (A.dim() != L.nV || A.param_dim() != L.nE) throw InputError("A: expected an operator E x V -> V");
  if (B.dim() != L.nE || B.param_dim() != L.nV) throw InputError("B: expected an operator V x E -> E");
  if (J.dim() != L.nX || J.param_dim() != L.nZ1) throw InputError("J: expected a function on Z1 x X");
  if (H.dim() != L.nY || H.param_dim() != L.nZ2) throw InputError("H: expected a function on Z2 x Y");
  if (psi.dim() != L.nV) throw InputError("psi: expected a function on V");
  if (theta.dim() != L.nE) throw InputError("theta: expected a function on E");
  if (C.dim() != L.nV) throw InputError("C: expected a subset of V");
  if (D.dim() != L.nE) throw InputError("D: expected a subset of E");
  if (h.size() != L.nV) throw InputError("h: expected a vector of length nV");
  if (l.size() != L.nE) throw InputError("l: expected a vector of length nE");
  if (u0) {
    if (u0->size() != L.nV) throw InputError("anchors.u0: expected a vector of length nV");
    if (!C.contains(*u0) || !psi.in_domain(*u0)) throw InputError("anchors.u0: not in C and dom psi");
  }
  if (w0) {
    if (w0->size() != L.nE) throw InputError("anchors.w0: expected a vector of length nE");
    if (!D.contains(*w0) || !theta.in_domain(*w0)) throw InputError("anchors.w0: not in D and dom theta");
  }
  check_special_case(*this);
}

SideView side_view(const CoupledProblem& prob, Side s) {
  if (s == Side::First) {
    return {&prob.A, &prob.J, &prob.psi, &prob.C, &prob.gamma1, &prob.delta1, &prob.h,
            prob.layout.nV, prob.layout.nE};
  }
  return {&prob.B, &prob.H, &prob.theta, &prob.D, &prob.gamma2, &prob.delta2, &prob.l,
          prob.layout.nE, prob.layout.nV};
}

double coupled_clarke_dir(const SideView& sv, const Vec& own, const Vec& other, const Vec& d, double tol) {
  return sv.J->clarke_dir(sv.delta->apply(other), sv.gamma->apply(own), sv.gamma->apply(d), tol);
}

void check_special_case(const CoupledProblem& p) {
  auto fail = [&](const std::string& why) {
    throw InputError("kind " + to_string(p.kind) + ": " + why);
  };
  auto whole = [](const ConvexSet& s) { return s.kind() == "whole"; };
  switch (p.kind) {
    case SpecialCase::General:
      break;
    case SpecialCase::I:
      if (!p.J.parameter_free()) fail("J must not depend on its parameter");
      if (!p.H.parameter_free()) fail("H must not depend on its parameter");
      break;
    case SpecialCase::II:
      if (!p.psi.is_zero()) fail("psi must be zero");
      if (!p.theta.is_zero()) fail("theta must be zero");
      break;
    case SpecialCase::III:
      if (!p.J.is_zero()) fail("J must be zero");
      if (!p.H.is_zero()) fail("H must be zero");
      break;
    case SpecialCase::IV:
      if (!p.theta.is_zero()) fail("theta must be zero");
      if (!p.H.is_zero()) fail("H must be zero");
      if (!whole(p.D)) fail("D must be the whole space");
      break;
    case SpecialCase::V:
      if (!p.psi.is_zero() || !p.theta.is_zero()) fail("psi and theta must be zero");
      if (!p.J.is_zero() || !p.H.is_zero()) fail("J and H must be zero");
      if (!whole(p.C) || !whole(p.D)) fail("C and D must be the whole spaces");
      break;
    case SpecialCase::VI:
      if (!p.theta.is_zero()) fail("theta must be zero");
      if (!p.H.is_zero()) fail("H must be zero");
      if (!whole(p.D)) fail("D must be the whole space");
      if (!p.B.parameter_free()) fail("B must not depend on u");
      break;
    case SpecialCase::VII:
      if (!p.A.parameter_free()) fail("A must not depend on w");
      if (!p.J.parameter_free()) fail("J must not depend on its parameter");
      if (!p.B.is_affine() || p.B.growth_constant() != 0.0) fail("B must be zero");
      if (!p.theta.is_zero()) fail("theta must be zero");
      if (!p.H.is_zero()) fail("H must be zero");
      if (p.l.norm() != 0.0) fail("l must be zero");
      break;
  }
}

CoupledProblem make_special_case(SpecialCase kind, const SpecialCaseParts& parts) {
  const SpaceLayout& L = parts.layout;
  CoupledProblem p;
  p.layout = L;
  p.kind = kind;
  p.A = parts.A.value_or(CoupledOperator::zero(L.nE, L.nV));
  p.B = parts.B.value_or(CoupledOperator::zero(L.nV, L.nE));
  p.J = parts.J.value_or(MaxSmoothBifunction::zero(L.nZ1, L.nX));
  p.H = parts.H.value_or(MaxSmoothBifunction::zero(L.nZ2, L.nY));
  p.psi = parts.psi.value_or(ConvexExtendedFunction::zero(L.nV));
  p.theta = parts.theta.value_or(ConvexExtendedFunction::zero(L.nE));
  p.C = parts.C.value_or(ConvexSet::whole(L.nV));
  p.D = parts.D.value_or(ConvexSet::whole(L.nE));
  p.gamma1 = parts.gamma1.value_or(L.nX == L.nV ? LinearMap::identity(L.nV) : LinearMap::zero(L.nX, L.nV));
  p.gamma2 = parts.gamma2.value_or(L.nY == L.nE ? LinearMap::identity(L.nE) : LinearMap::zero(L.nY, L.nE));
  p.delta1 = parts.delta1.value_or(LinearMap::zero(L.nZ1, L.nE));
  p.delta2 = parts.delta2.value_or(LinearMap::zero(L.nZ2, L.nV));
  p.h = parts.h.value_or(Vec::Zero(L.nV));
  p.l = parts.l.value_or(Vec::Zero(L.nE));
  p.validate();
  return p;
}

}  // namespace cvhi
