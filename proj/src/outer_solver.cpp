#include "cvhi/outer_solver.hpp"

#include <cmath>

namespace cvhi {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Running: return "running";
    case SolveStatus::Certified: return "certified";
    default: return "nonconverged";
  }
}

SolveStatus solve_status_from_string(const std::string& s) {
  if (s == "running") return SolveStatus::Running;
  if (s == "certified") return SolveStatus::Certified;
  if (s == "nonconverged") return SolveStatus::NonConverged;
  throw InputError("unknown solve status '" + s + "'");
}

const OuterRecord& SolveTrace::best() const {
  if (records.empty()) throw InputError("trace: no records");
  const OuterRecord* b = &records.front();
  for (const auto& r : records) {
    if (std::max(r.gap1, r.gap2) < std::max(b->gap1, b->gap2)) b = &r;
  }
  return *b;
}

int SolveTrace::inner_total() const {
  int s = 0;
  for (const auto& r : records) s += r.inner1 + r.inner2;
  return s;
}

namespace {

struct Gaps {
  double g1, g2;
  double joint() const { return std::max(g1, g2); }
};

Gaps gaps_at(const CoupledProblem& prob, const Vec& u, const Vec& w, const OuterParams& params) {
  return {primal_gap(prob, Side::First, u, w, params.inner.gap).value,
          primal_gap(prob, Side::Second, w, u, params.inner.gap).value};
}

void check_params(const OuterParams& params) {
  if (!(params.damping > 0.0 && params.damping <= 1.0)) throw InputError("outer solver: damping must lie in (0, 1]");
  if (params.max_outer < 0) throw InputError("outer solver: max_outer must be nonnegative");
  if (!(params.joint_tol > 0.0)) throw InputError("outer solver: joint_tol must be positive");
}

void check_ball(SolveTrace& t, const OuterParams& params) {
  if (!params.invariance_radius) return;
  double m0 = *params.invariance_radius;
  const auto& r = t.records.back();
  if (r.u.norm() > m0 || r.w.norm() > m0) {
    t.diagnostics.push_back("iteration " + std::to_string(r.k) + " leaves the invariance ball of radius " +
                            std::to_string(m0) + " (||u|| = " + std::to_string(r.u.norm()) +
                            ", ||w|| = " + std::to_string(r.w.norm()) + ")");
  }
}

InnerResult inner_with_context(const CoupledProblem& prob, Side side, const Vec& other, const Vec& x0,
                               const InnerParams& ip, int k) {
  try {
    return solve_inner(prob, side, other, x0, ip);
  } catch (const InnerNonConvergence& e) {
    throw InnerNonConvergence("outer iteration " + std::to_string(k) + ", inequality " +
                                  (side == Side::First ? "1" : "2") + ": " + e.what(),
                              e.best, e.best_gap, e.iterations);
  }
}

// Runs up to n iterations on t. Returns true once certified.
bool advance(const CoupledProblem& prob, SolveTrace& t, int n, const OuterParams& params) {
  const double a = t.damping;
  for (int i = 0; i < n; ++i) {
    int k = t.records.back().k + 1;
    // Jacobi sweep: both inner solves see the previous pair.
    InnerResult r1 = inner_with_context(prob, Side::First, t.w, t.u, params.inner, k);
    InnerResult r2 = inner_with_context(prob, Side::Second, t.u, t.w, params.inner, k);
    Vec uh = project_feasible(prob, Side::First, r1.x);
    Vec wh = project_feasible(prob, Side::Second, r2.x);

    OuterRecord rec;
    rec.k = k;
    rec.inner1 = r1.iterations;
    rec.inner2 = r2.iterations;
    rec.damping = a;
    Gaps g{0.0, 0.0};
    bool full = false;
    if (a < 1.0) {
      Gaps gf = gaps_at(prob, uh, wh, params);
      if (gf.joint() <= params.joint_tol) {
        full = true;
        g = gf;
        t.u = uh;
        t.w = wh;
      }
    }
    if (!full) {
      t.u = (1.0 - a) * t.u + a * uh;
      t.w = (1.0 - a) * t.w + a * wh;
      g = gaps_at(prob, t.u, t.w, params);
    }
    rec.u = t.u;
    rec.w = t.w;
    rec.gap1 = g.g1;
    rec.gap2 = g.g2;
    rec.full_step = full;
    t.records.push_back(rec);
    check_ball(t, params);
    if (g.joint() <= params.joint_tol) {
      t.status = SolveStatus::Certified;
      return true;
    }
  }
  return false;
}

SolveResult finish(SolveTrace t) {
  SolveResult r;
  r.u = t.u;
  r.w = t.w;
  r.trace = std::move(t);
  return r;
}

[[noreturn]] void fail(SolveTrace t, int budget) {
  t.status = SolveStatus::NonConverged;
  const auto& b = t.best();
  std::string msg = "outer solver: not certified after " + std::to_string(budget) + " iterations; best joint gap " +
                    std::to_string(std::max(b.gap1, b.gap2)) + " at iteration " + std::to_string(b.k);
  throw OuterNonConvergence(msg, std::move(t));
}

}  // namespace

SolveResult solve_coupled(const CoupledProblem& prob, const std::optional<Vec>& u0, const std::optional<Vec>& w0,
                          const OuterParams& params) {
  check_params(params);
  prob.validate();
  Vec us = u0 ? *u0 : (prob.u0 ? *prob.u0 : Vec::Zero(prob.layout.nV));
  Vec ws = w0 ? *w0 : (prob.w0 ? *prob.w0 : Vec::Zero(prob.layout.nE));
  if (us.size() != prob.layout.nV || ws.size() != prob.layout.nE) throw InputError("outer solver: start dimension mismatch");
  if (!us.allFinite() || !ws.allFinite()) throw InputError("outer solver: start point must be finite");

  SolveTrace t;
  t.damping = params.damping;
  t.u = project_feasible(prob, Side::First, us);
  t.w = project_feasible(prob, Side::Second, ws);
  Gaps g = gaps_at(prob, t.u, t.w, params);
  t.records.push_back({0, t.u, t.w, g.g1, g.g2, 0, 0, t.damping, false});
  check_ball(t, params);
  if (g.joint() <= params.joint_tol) {
    t.status = SolveStatus::Certified;
    return finish(std::move(t));
  }
  if (advance(prob, t, params.max_outer, params)) return finish(std::move(t));
  int budget = params.max_outer;
  if (params.retry) {
    // Restart from the best pair seen so far with half the damping.
    const auto b = t.best();
    t.u = b.u;
    t.w = b.w;
    t.damping *= 0.5;
    t.retried = true;
    t.diagnostics.push_back("retry with damping " + std::to_string(t.damping) + " from iteration " +
                            std::to_string(b.k));
    if (advance(prob, t, params.max_outer, params)) return finish(std::move(t));
    budget *= 2;
  }
  fail(std::move(t), budget);
}

SolveResult continue_from(const CoupledProblem& prob, const SolveTrace& trace, int extra_iters,
                          const OuterParams& params) {
  check_params(params);
  prob.validate();
  if (extra_iters < 0) throw InputError("continue_from: negative iteration count");
  if (trace.records.empty()) throw InputError("continue_from: trace has no records");
  if (trace.u.size() != prob.layout.nV || trace.w.size() != prob.layout.nE)
    throw InputError("continue_from: trace state does not match the problem dimensions");
  if (!trace.u.allFinite() || !trace.w.allFinite()) throw InputError("continue_from: trace state is not finite");
  if (!(trace.damping > 0.0 && trace.damping <= 1.0)) throw InputError("continue_from: trace damping outside (0, 1]");
  for (size_t i = 1; i < trace.records.size(); ++i) {
    if (trace.records[i].k != trace.records[i - 1].k + 1)
      throw InputError("continue_from: trace records are not consecutive");
  }

  SolveTrace t = trace;
  if (t.status == SolveStatus::Certified) {
    Gaps g = gaps_at(prob, t.u, t.w, params);
    if (g.joint() <= params.joint_tol) return finish(std::move(t));
  }
  t.status = SolveStatus::Running;
  if (advance(prob, t, extra_iters, params)) return finish(std::move(t));
  fail(std::move(t), extra_iters);
}

}  // namespace cvhi
