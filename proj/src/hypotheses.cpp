#include "cvhi/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cvhi/errors.hpp"
#include "cvhi/gap.hpp"

namespace cvhi {

namespace {

const std::optional<CoercivityProfile>& profile_of(const CoupledProblem& prob, Side side) {
  return side == Side::First ? prob.rA : prob.rB;
}

Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = N(rng);
  double r = v.norm();
  if (r == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / r;
}

GrowthConstant growth_of(const CoupledOperator& T, std::mt19937_64& rng, int samples) {
  try {
    return {T.growth_constant(), "computed"};
  } catch (const UnsupportedEstimate&) {
    double best = 0.0;
    const double scales[] = {0.1, 1.0, 10.0, 100.0, 1000.0};
    for (int k = 0; k < samples; ++k) {
      double sx = scales[k % 5], sp = scales[(k / 5) % 5];
      Vec x = sx * random_unit(rng, T.dim()), p = sp * random_unit(rng, T.param_dim());
      best = std::max(best, T.apply(p, x).norm() / (1.0 + x.norm() + p.norm()));
    }
    return {best, "sampled"};
  }
}

// Numerator of coercivity_value as a function of the other unknown.
double coercivity_numerator(const SideView& sv, const Vec& x, const Vec& p) {
  Vec gx = sv.gamma->apply(x);
  return sv.op->apply(p, x).dot(x) - sv.J->clarke_dir(sv.delta->apply(p), gx, -gx);
}

double linear_profile_value(const CoercivityProfile& prof, double t, double s) {
  return std::get<LinearProfile>(prof)(t, s);
}

struct ProbeContext {
  const SideView& sv;
  std::vector<Vec> xdirs;
  std::vector<Vec> pdirs;
};

CoercivityProbe probe(const ProbeContext& ctx, const std::string& regime, double t, double s, double claimed) {
  const SideView& sv = ctx.sv;
  CoercivityProbe best;
  best.regime = regime;
  best.t = t;
  best.s = s;
  best.claimed = claimed;
  best.observed = std::numeric_limits<double>::infinity();
  for (const Vec& xd : ctx.xdirs) {
    Vec x = t * xd;
    std::vector<Vec> ps;
    if (s == 0.0) {
      ps.push_back(Vec::Zero(sv.other_dim));
    } else {
      for (const Vec& pd : ctx.pdirs) ps.push_back(s * pd);
      // Steepest descent direction of the numerator in the other unknown.
      Vec g(sv.other_dim);
      double hstep = 1e-4 * std::max(1.0, s);
      for (int j = 0; j < sv.other_dim; ++j) {
        Vec e = Vec::Zero(sv.other_dim);
        e(j) = hstep;
        g(j) = (coercivity_numerator(sv, x, e) - coercivity_numerator(sv, x, -e)) / (2 * hstep);
      }
      if (g.norm() > 0) ps.push_back(-s * g / g.norm());
    }
    for (const Vec& p : ps) {
      double val = coercivity_value(*sv.op, *sv.J, *sv.delta, *sv.gamma, p, x);
      if (val < best.observed) {
        best.observed = val;
        best.x = x;
        best.p = p;
      }
    }
  }
  return best;
}

bool below(double observed, double claimed) { return observed < claimed - 1e-9 * (1.0 + std::abs(claimed)); }

ProfileAudit audit_profile(const CoupledProblem& prob, Side side, std::mt19937_64& rng, int samples) {
  ProfileAudit pa;
  const auto& prof = profile_of(prob, side);
  if (!prof) return pa;
  pa.declared = true;
  SideView sv = side_view(prob, side);

  ProbeContext ctx{sv, {}, {}};
  for (int i = 0; i < sv.dim; ++i) {
    Vec e = Vec::Zero(sv.dim);
    e(i) = 1.0;
    ctx.xdirs.push_back(e);
    ctx.xdirs.push_back(-e);
  }
  {
    // Least-eigenvalue directions of the symmetric Jacobian, the worst case for affine parts.
    Mat Jx = sv.op->jacobian_x(Vec::Zero(sv.other_dim), ctx.xdirs.front());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Jx + Jx.transpose()));
    ctx.xdirs.push_back(es.eigenvectors().col(0));
    ctx.xdirs.push_back(-es.eigenvectors().col(0));
  }
  const int nrand = std::max(4, samples / 100);
  for (int i = 0; i < nrand; ++i) ctx.xdirs.push_back(random_unit(rng, sv.dim));
  for (int j = 0; j < sv.other_dim; ++j) {
    Vec e = Vec::Zero(sv.other_dim);
    e(j) = 1.0;
    ctx.pdirs.push_back(e);
    ctx.pdirs.push_back(-e);
  }
  for (int i = 0; i < std::max(2, nrand / 2); ++i) ctx.pdirs.push_back(random_unit(rng, sv.other_dim));

  auto record = [&](const CoercivityProbe& pr) {
    pa.probes.push_back(pr);
    if (below(pr.observed, pr.claimed)) {
      if (pa.pointwise || pr.observed - pr.claimed < pa.witness->observed - pa.witness->claimed) pa.witness = pr;
      pa.pointwise = false;
    }
  };

  if (auto* tab = std::get_if<TableProfile>(&*prof)) {
    for (size_t i = 0; i < tab->t.size(); ++i) {
      for (size_t j = 0; j < tab->s.size(); ++j) {
        if (tab->t[i] <= 0.0) continue;
        record(probe(ctx, "table", tab->t[i], tab->s[j], tab->r[i][j]));
      }
    }
    return pa;
  }

  pa.linear = true;
  const auto& lin = std::get<LinearProfile>(*prof);
  pa.coupling_dominated = lin.coupling >= lin.slope;
  pa.weak_margin = !pa.coupling_dominated && lin.coupling >= 0.9 * lin.slope;

  struct Regime {
    const char* name;
    double (*s)(double);
  };
  const Regime regimes[] = {{"bounded0", [](double) { return 0.0; }},
                            {"bounded1", [](double) { return 1.0; }},
                            {"proportional", [](double t) { return t + 1.0; }},
                            {"sublinear", [](double t) { return std::sqrt(t); }}};
  const double ts[] = {1.0, 10.0, 100.0, 1000.0};
  for (const auto& rg : regimes) {
    std::vector<CoercivityProbe> row;
    for (double t : ts) {
      double s = rg.s(t);
      row.push_back(probe(ctx, rg.name, t, s, linear_profile_value(*prof, t, s)));
      record(row.back());
    }
    for (size_t k = 2; k < row.size(); ++k) {
      const auto& a = row[k - 1];
      const auto& b = row[k];
      if (!(b.claimed > a.claimed) || !(b.observed > a.observed)) {
        if (pa.trend_consistent) pa.trend_witness = std::make_pair(a, b);
        pa.trend_consistent = false;
      }
    }
  }
  return pa;
}

struct SampleBox {
  Vec lo, hi;
};

SampleBox sample_box(const ConvexSet& set) {
  Vec c = set.project(Vec::Zero(set.dim()));
  Vec lo = (c.array() - 10.0).matrix().cwiseMax(set.bbox_lo());
  Vec hi = (c.array() + 10.0).matrix().cwiseMin(set.bbox_hi());
  return {lo, hi};
}

Vec sample_in(const SampleBox& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec x(b.lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = b.lo(i) + U(rng) * (b.hi(i) - b.lo(i));
  return x;
}

// max (premise) or min (conclusion) over subdifferential vertices at x of
// <T(o,x) + gamma* xi - shift*rhs, v - u> + psi(v) - psi(u)
double pseudo_form(const SideView& sv, const Vec& o, const Vec& x, const Vec& u, const Vec& v, int shift,
                   bool take_max) {
  Vec base = sv.op->apply(o, x);
  if (shift) base -= *sv.rhs;
  Vec d = v - u;
  double psi_diff = sv.psi->value(v) - sv.psi->value(u);
  std::vector<Vec> verts = sv.J->is_zero() ? std::vector<Vec>{}
                                           : sv.J->clarke_subdiff(sv.delta->apply(o), sv.gamma->apply(x));
  if (verts.empty()) return base.dot(d) + psi_diff;
  double best = take_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (const Vec& xi : verts) {
    double val = (base + sv.gamma->adjoint(xi)).dot(d) + psi_diff;
    best = take_max ? std::max(best, val) : std::min(best, val);
  }
  return best;
}

struct BoundCoefficients {
  double a, kappa, c;          // profile slope, coupling slope, offset
  double al0, al1, al2;        // constant, own-norm and other-norm coefficients
  // Largest own norm consistent with (a t - kappa s - c) t <= al0 + al1 t + al2 s.
  double T(double s) const {
    double B = kappa * s + c + al1;
    double C = al0 + al2 * s;
    return (B + std::sqrt(std::max(0.0, B * B + 4.0 * a * C))) / (2.0 * a);
  }
};

BoundCoefficients coefficients(const CoupledProblem& prob, const HypothesisReport& rep, Side side,
                               const BoundRelaxation& relax) {
  const bool first = side == Side::First;
  const auto& prof = profile_of(prob, side);
  const ProfileAudit& pa = first ? rep.coercA : rep.coercB;
  const char* nm = first ? "A" : "B";
  if (!prof || !pa.linear) throw DomainError(std::string("no finite a-priori bound derivable: ") + nm + " has no linear coercivity profile");
  if (!pa.pointwise) throw DomainError(std::string("no finite a-priori bound derivable: coercivity of ") + nm + " is falsified");
  const GrowthConstant& b = first ? rep.bA : rep.bB;
  const GrowthConstant& cj = first ? rep.cJ : rep.cH;
  if (b.provenance != "computed") throw DomainError(std::string("no finite a-priori bound derivable: growth constant of ") + nm + " is only sampled");
  const auto& lin = std::get<LinearProfile>(*prof);
  if (!(lin.slope > 0.0)) throw DomainError(std::string("no finite a-priori bound derivable: profile slope of ") + nm + " is not positive");

  SideView sv = side_view(prob, side);
  const Vec& x0 = first ? rep.u_anchor : rep.w_anchor;
  double U0 = x0.norm(), g = sv.gamma->norm(), d = sv.delta->norm();
  double alpha = first ? rep.alpha_psi : rep.alpha_theta;
  double beta = first ? rep.beta_psi : rep.beta_theta;
  double rhs = sv.rhs->norm();
  BoundCoefficients k{};
  k.a = lin.slope;
  k.kappa = lin.coupling;
  k.c = lin.offset;
  // A gap of at most tau on a box of half-width rho bounds the residual form at
  // any v by tau (1 + ||v - x|| / rho), by concavity along the ray from x.
  const double tau = relax.gap_slack, rho = relax.search_radius;
  const double spread = first ? relax.activity_spread1 : relax.activity_spread2;
  k.al0 = b.value * U0 + cj.value * g * U0 + sv.psi->value(x0) + beta + rhs * U0 + tau * (1.0 + U0 / rho);
  k.al1 = b.value * U0 + cj.value * g * g * U0 + alpha + rhs + tau / rho + spread * g;
  k.al2 = b.value * U0 + cj.value * d * g * U0;
  return k;
}

// Largest fixed point of an increasing map with asymptotic slope below one,
// approached from above so every iterate stays an upper bound. The start is
// pushed far out so that no crossing lies beyond it.
template <class F>
double largest_fixed_point(F f) {
  double t = 1e8;
  while (f(t) >= t) {
    t *= 2.0;
    if (!std::isfinite(t) || t > 1e150) throw DomainError("no finite a-priori bound derivable: bound map does not close");
  }
  for (int it = 0; it < 1000000; ++it) {
    double n = f(t);
    if (t - n <= 1e-13 * (1.0 + t)) return std::max(n, 0.0);
    t = n;
  }
  return t;
}

}  // namespace

double evaluate_coercivity(const CoupledProblem& prob, Side side, const Vec& x, const Vec& p) {
  SideView sv = side_view(prob, side);
  return coercivity_value(*sv.op, *sv.J, *sv.delta, *sv.gamma, p, x);
}

std::pair<double, double> evaluate_pseudo_witness(const CoupledProblem& prob, Side side, const PseudoWitness& w) {
  SideView sv = side_view(prob, side);
  return {pseudo_form(sv, w.other, w.u, w.u, w.v, w.shift, true),
          pseudo_form(sv, w.other, w.v, w.u, w.v, w.shift, false)};
}

PseudoVerdict falsify_pseudomonotone(const CoupledProblem& prob, Side side, int samples, std::uint64_t seed) {
  SideView sv = side_view(prob, side);
  PseudoVerdict out;
  if (sv.op->monotone_in_x() && sv.J->convex_in_x()) {
    out.kind = "pass-by-construction";
    return out;
  }
  std::mt19937_64 rng(seed ^ (side == Side::First ? 0x9e3779b97f4a7c15ULL : 0xc2b2ae3d27d4eb4fULL));
  const ConvexSet& own_set = *sv.set;
  const ConvexSet& other_set = side == Side::First ? prob.D : prob.C;
  SampleBox ob = sample_box(own_set), pb = sample_box(other_set);
  Vec center = project_feasible(prob, side, Vec::Zero(sv.dim));

  auto test = [&](const Vec& u, const Vec& v, const Vec& o) -> bool {
    for (int shift = 0; shift <= 1; ++shift) {
      double prem = pseudo_form(sv, o, u, u, v, shift, true);
      if (!(prem >= 0.0)) continue;
      double concl = pseudo_form(sv, o, v, u, v, shift, false);
      if (concl <= -1e-9) {
        out.kind = "falsified";
        out.witness = PseudoWitness{u, v, o, shift, prem, concl};
        return true;
      }
    }
    return false;
  };

  int n = 0;
  // Structured pairs from the anchor along coordinate directions first.
  for (int i = 0; i < sv.dim && n < samples; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vec v = center;
      v(i) += sgn;
      v = project_feasible(prob, side, v);
      ++n;
      Vec o = project_feasible(prob, side == Side::First ? Side::Second : Side::First,
                               Vec::Zero(sv.other_dim));
      if (test(center, v, o)) {
        out.samples = n;
        return out;
      }
    }
  }
  for (; n < samples; ++n) {
    Vec u = project_feasible(prob, side, sample_in(ob, rng));
    Vec v = project_feasible(prob, side, sample_in(ob, rng));
    if (n % 3 == 2) v = project_feasible(prob, side, u + 0.05 * random_unit(rng, sv.dim));
    Vec o = sample_in(pb, rng);
    if (test(u, v, o)) {
      out.samples = n + 1;
      return out;
    }
  }
  out.kind = "not-falsified";
  out.samples = samples;
  return out;
}

HypothesisReport audit(const CoupledProblem& prob, int samples, std::uint64_t seed) {
  prob.validate();
  HypothesisReport rep;
  rep.samples = samples;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  auto add = [&](std::string name, bool ok, std::string detail, bool flag_only = false) {
    rep.statuses.push_back({std::move(name), ok ? "pass" : (flag_only ? "flag" : "fail"), std::move(detail)});
  };

  rep.bA = growth_of(prob.A, rng, samples);
  rep.bB = growth_of(prob.B, rng, samples);
  rep.cJ = {prob.J.growth_constant(), "computed"};
  rep.cH = {prob.H.growth_constant(), "computed"};
  std::tie(rep.alpha_psi, rep.beta_psi) = prob.psi.minorant_constants();
  std::tie(rep.alpha_theta, rep.beta_theta) = prob.theta.minorant_constants();

  rep.u_anchor = project_feasible(prob, Side::First, prob.u0 ? *prob.u0 : Vec::Zero(prob.layout.nV));
  rep.w_anchor = project_feasible(prob, Side::Second, prob.w0 ? *prob.w0 : Vec::Zero(prob.layout.nE));
  bool u_ok = prob.C.contains(rep.u_anchor, 1e-7) && prob.psi.in_domain(rep.u_anchor, 1e-7);
  bool w_ok = prob.D.contains(rep.w_anchor, 1e-7) && prob.theta.in_domain(rep.w_anchor, 1e-7);
  add("sets.nonempty", true, "C and D constructed nonempty");
  add("psi.domain", u_ok, u_ok ? "anchor in C and dom psi" : "C and dom psi look disjoint");
  add("theta.domain", w_ok, w_ok ? "anchor in D and dom theta" : "D and dom theta look disjoint");
  add("maps.compact", true, "finite dimensional linear maps");
  add("J.growth", true, "c_J = " + std::to_string(rep.cJ.value));
  add("H.growth", true, "c_H = " + std::to_string(rep.cH.value));
  add("J.parameter_usc", true, "continuous pieces");
  add("H.parameter_usc", true, "continuous pieces");

  rep.pseudoA = falsify_pseudomonotone(prob, Side::First, samples, seed);
  rep.pseudoB = falsify_pseudomonotone(prob, Side::Second, samples, seed);
  rep.coercA = audit_profile(prob, Side::First, rng, samples);
  rep.coercB = audit_profile(prob, Side::Second, rng, samples);

  for (Side side : {Side::First, Side::Second}) {
    const bool first = side == Side::First;
    const std::string nm = first ? "A" : "B";
    const GrowthConstant& b = first ? rep.bA : rep.bB;
    const PseudoVerdict& pv = first ? rep.pseudoA : rep.pseudoB;
    const ProfileAudit& pa = first ? rep.coercA : rep.coercB;
    add(nm + ".hemicontinuity", true, "continuous built-in");
    add(nm + ".weak_limit", true, "jointly continuous built-in");
    add(nm + ".pseudomonotone", pv.kind != "falsified", pv.kind);
    add(nm + ".growth", b.provenance == "computed", "b = " + std::to_string(b.value) + " (" + b.provenance + ")", true);
    std::string detail;
    if (!pa.declared) detail = "no coercivity profile declared";
    else if (!pa.pointwise) detail = "profile exceeds sampled coercivity";
    else if (pa.coupling_dominated) detail = "coupling-dominated: profile does not grow along proportional paths";
    else if (!pa.trend_consistent) detail = "sampled coercivity does not increase";
    else detail = "trend-consistent";
    add(nm + ".coercivity", pa.ok(), detail);
    if (pa.weak_margin) add(nm + ".coercivity_margin", false, "weak margin: coupling slope within 10% of slope", true);
  }

  rep.passed = std::none_of(rep.statuses.begin(), rep.statuses.end(),
                            [](const HypothesisStatus& s) { return s.status == "fail"; });
  try {
    rep.R_solution = solution_bound(prob, rep);
    rep.m0 = invariance_radius(prob, rep);
  } catch (const DomainError& e) {
    rep.bound_note = e.what();
  }
  return rep;
}

double solution_bound(const CoupledProblem& prob, const HypothesisReport& report, const BoundRelaxation& relax) {
  if (relax.gap_slack < 0.0 || !(relax.search_radius > 0.0) || relax.activity_spread1 < 0.0 ||
      relax.activity_spread2 < 0.0)
    throw InputError("solution_bound: invalid relaxation");
  BoundCoefficients A = coefficients(prob, report, Side::First, relax);
  BoundCoefficients B = coefficients(prob, report, Side::Second, relax);
  if (!(A.kappa * B.kappa < A.a * B.a))
    throw DomainError("no finite a-priori bound derivable: coupling slopes dominate the profile slopes");
  double t = largest_fixed_point([&](double x) { return A.T(B.T(x)); });
  return 1.1 * std::max(t, B.T(t)) + 1e-9;
}

double invariance_radius(const CoupledProblem& prob, const HypothesisReport& report) {
  BoundCoefficients A = coefficients(prob, report, Side::First, {});
  BoundCoefficients B = coefficients(prob, report, Side::Second, {});
  if (!(A.kappa < A.a) || !(B.kappa < B.a))
    throw DomainError("no finite a-priori bound derivable: coupling slope reaches the profile slope");
  double m = largest_fixed_point([&](double x) { return std::max(A.T(x), B.T(x)); });
  return std::max(1.1 * m + 1e-9, solution_bound(prob, report));
}

}  // namespace cvhi
