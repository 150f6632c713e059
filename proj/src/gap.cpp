#include "cvhi/gap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <variant>

#include "cvhi/composite.hpp"
#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// C (localized when unbounded) intersected with the indicator terms of psi.
struct Region {
  int n = 0;
  Mat E_set;  // rows of C plus localization box
  Vec e_set;
  Mat E_dom;  // rows of the polyhedral indicator terms of psi
  Vec e_dom;
  std::vector<BallConstraint> balls;  // ball-shaped C or indicator sets
  Vec lo, hi;
  bool localized = false;
  bool box_only = false;  // C is a box (or localized whole space), no indicators
  const ConvexSet* set = nullptr;
  const ConvexExtendedFunction* psi = nullptr;

  bool polyhedral() const { return balls.empty(); }
  bool contains(const Vec& x, double tol = 1e-10) const {
    for (Eigen::Index r = 0; r < E_set.rows(); ++r) {
      if (E_set.row(r).dot(x) > e_set(r) + tol * (1.0 + std::abs(e_set(r)))) return false;
    }
    for (Eigen::Index r = 0; r < E_dom.rows(); ++r) {
      if (E_dom.row(r).dot(x) > e_dom(r) + tol * (1.0 + std::abs(e_dom(r)))) return false;
    }
    for (const auto& b : balls) {
      if ((x - b.center).norm() > b.radius + tol) return false;
    }
    return true;
  }
};

void append_rows(Mat& E, Vec& e, const Mat& A, const Vec& b) {
  Mat E2(E.rows() + A.rows(), A.cols());
  E2 << E, A;
  Vec e2(e.size() + b.size());
  e2 << e, b;
  E = std::move(E2);
  e = std::move(e2);
}

Region build_region(const SideView& sv, const Vec& own, double radius) {
  Region r;
  r.n = sv.dim;
  r.set = sv.set;
  r.psi = sv.psi;
  r.E_set.resize(0, r.n);
  r.E_dom.resize(0, r.n);
  sv.set->inequalities(r.E_set, r.e_set);
  if (auto* b = std::get_if<Ball>(&sv.set->shape())) r.balls.push_back({b->center, b->radius});
  r.lo = sv.set->bbox_lo();
  r.hi = sv.set->bbox_hi();
  bool has_ind = false;
  for (const auto& t : sv.psi->terms()) {
    if (auto* ind = std::get_if<IndicatorTerm>(&t)) {
      has_ind = true;
      Mat A;
      Vec b;
      ind->set.inequalities(A, b);
      if (A.rows() > 0) append_rows(r.E_dom, r.e_dom, A, b);
      if (auto* bl = std::get_if<Ball>(&ind->set.shape())) r.balls.push_back({bl->center, bl->radius});
      r.lo = r.lo.cwiseMax(ind->set.bbox_lo());
      r.hi = r.hi.cwiseMin(ind->set.bbox_hi());
    }
  }
  if (!r.lo.allFinite() || !r.hi.allFinite()) {
    r.localized = true;
    Mat A(2 * r.n, r.n);
    Vec b(2 * r.n);
    A << Mat::Identity(r.n, r.n), -Mat::Identity(r.n, r.n);
    b << (own.array() + radius).matrix(), (-(own.array() - radius)).matrix();
    append_rows(r.E_set, r.e_set, A, b);
    r.lo = r.lo.cwiseMax((own.array() - radius).matrix());
    r.hi = r.hi.cwiseMin((own.array() + radius).matrix());
  }
  bool box_set = sv.set->kind() == "box" || sv.set->kind() == "whole";
  r.box_only = box_set && !has_ind;
  return r;
}

void append_indicators(const ConvexExtendedFunction& psi, CompositeProgram& prog) {
  for (const auto& t : psi.terms()) {
    if (std::holds_alternative<IndicatorTerm>(t)) {
      ConvexExtendedFunction(psi.dim(), {t}).append_to(prog);
    }
  }
}

void append_set(const Region& r, CompositeProgram& prog) {
  prog.add_inequalities(r.E_set, r.e_set);
  if (auto* b = std::get_if<Ball>(&r.set->shape())) prog.balls.push_back({b->center, b->radius});
}

Vec project_region(const Region& r, const Vec& x) {
  if (r.box_only) return x.cwiseMax(r.lo).cwiseMin(r.hi);
  if (!r.localized && r.E_dom.rows() == 0 && r.balls.size() <= 1 &&
      (r.balls.empty() || std::holds_alternative<Ball>(r.set->shape()))) {
    bool has_ind = false;
    for (const auto& t : r.psi->terms()) has_ind = has_ind || std::holds_alternative<IndicatorTerm>(t);
    if (!has_ind) return r.set->project(x);
  }
  if (r.contains(x, 0.0)) return x;
  CompositeProgram prog(r.n);
  prog.M = Mat::Identity(r.n, r.n);
  prog.b = -x;
  append_set(r, prog);
  append_indicators(*r.psi, prog);
  CompositeSolution s = solve_composite(prog);
  return s.x;
}

double support_bound(const Region& r, const Vec& g) {
  double s = 0.0;
  for (int i = 0; i < r.n; ++i) s += g(i) > 0 ? g(i) * r.hi(i) : g(i) * r.lo(i);
  if (!r.localized && std::holds_alternative<Ball>(r.set->shape())) s = std::min(s, r.set->support_value(g));
  return s;
}

// Phi(v) = <c, v-u> - max_i <q_i, v-u> - psi(v) + psi(u), concave.
struct Residual {
  Vec c;
  std::vector<Vec> q;
  Vec u;
  const ConvexExtendedFunction* psi;
  double psi_u;

  double operator()(const Vec& v) const {
    Vec d = v - u;
    double m = -kInf;
    for (const auto& qi : q) m = std::max(m, qi.dot(d));
    double pv = psi->value(v);
    if (!std::isfinite(pv)) return -kInf;
    return c.dot(d) - m - pv + psi_u;
  }
};

Residual build_residual(const SideView& sv, const Vec& own, const Vec& other, double tol) {
  Residual res;
  res.u = own;
  res.psi = sv.psi;
  res.psi_u = sv.psi->value(own);
  res.c = *sv.rhs - sv.op->apply(other, own);
  Vec p = sv.delta->apply(other);
  Vec x = sv.gamma->apply(own);
  for (const auto& g : sv.J->clarke_subdiff(p, x, tol)) {
    Vec qi = sv.gamma->adjoint(g);
    bool dup = false;
    for (const auto& o : res.q) dup = dup || (o - qi).norm() <= 1e-14 * (1.0 + qi.norm());
    if (!dup) res.q.push_back(qi);
  }
  return res;
}

void check_point(const SideView& sv, const Vec& own, const Vec& other, const char* who) {
  if (own.size() != sv.dim || other.size() != sv.other_dim) {
    throw InputError(std::string(who) + ": argument dimension mismatch");
  }
  if (!sv.set->contains(own) || !sv.psi->in_domain(own)) {
    throw DomainError(std::string(who) + ": point " + format_vec(own) + " is not feasible");
  }
}

GapValue enumerate(const Region& r, const Residual& phi) {
  const int n = r.n;
  struct Plane {
    Vec a;
    double b;
  };
  std::vector<Plane> planes;
  auto add = [&](Vec a, double b) {
    double na = a.norm();
    if (na <= 1e-14) return;
    a /= na;
    b /= na;
    for (const auto& p : planes) {
      if ((p.a - a).norm() <= 1e-12 && std::abs(p.b - b) <= 1e-12 * (1.0 + std::abs(b))) return;
      if ((p.a + a).norm() <= 1e-12 && std::abs(p.b + b) <= 1e-12 * (1.0 + std::abs(b))) return;
    }
    planes.push_back({std::move(a), b});
  };
  for (Eigen::Index i = 0; i < r.E_set.rows(); ++i) add(r.E_set.row(i).transpose(), r.e_set(i));
  for (Eigen::Index i = 0; i < r.E_dom.rows(); ++i) add(r.E_dom.row(i).transpose(), r.e_dom(i));
  for (size_t i = 0; i < phi.q.size(); ++i) {
    for (size_t j = i + 1; j < phi.q.size(); ++j) {
      Vec a = phi.q[i] - phi.q[j];
      add(a, a.dot(phi.u));
    }
  }
  if (r.psi->l1_weight() > 0.0) {
    for (int k = 0; k < n; ++k) {
      Vec a = Vec::Zero(n);
      a(k) = 1.0;
      add(a, 0.0);
    }
  }

  GapValue best;
  best.value = 0.0;
  best.argmax = phi.u;
  best.method = "enumeration";
  const int m = static_cast<int>(planes.size());
  std::vector<int> idx(n);
  // n <= 3 on this route: stack storage keeps the vertex loop allocation-free.
  using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
  using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
  SmallMat Am(n, n);
  SmallVec bm(n);
  Vec v(n);
  auto visit = [&]() {
    for (int k = 0; k < n; ++k) {
      Am.row(k) = planes[idx[k]].a.transpose();
      bm(k) = planes[idx[k]].b;
    }
    // Rows are unit vectors, so |det| <= 1 and the threshold is scale-free.
    if (n == 1) {
      v(0) = bm(0) / Am(0, 0);
    } else if (n == 2) {
      double det = Am(0, 0) * Am(1, 1) - Am(0, 1) * Am(1, 0);
      if (std::abs(det) <= 1e-10) return;
      v(0) = (bm(0) * Am(1, 1) - Am(0, 1) * bm(1)) / det;
      v(1) = (Am(0, 0) * bm(1) - bm(0) * Am(1, 0)) / det;
    } else {
      Eigen::Matrix3d M3 = Am;
      double det = M3.determinant();
      if (std::abs(det) <= 1e-10) return;
      Eigen::FullPivLU<Eigen::Matrix3d> lu(M3);
      v = lu.solve(Eigen::Vector3d(bm));
    }
    if (!v.allFinite() || !r.contains(v)) return;
    double val = phi(v);
    if (val > best.value) {
      best.value = val;
      best.argmax = v;
    }
  };
  // Lexicographic n-subsets.
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      visit();
      return;
    }
    for (int i = start; i <= m - (n - depth); ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  if (m >= n) rec(0, 0);
  best.upper = best.value;
  best.converged = true;
  return best;
}

// One proximal-point step on -Phi over the region.
Vec prox_step(const Region& r, const Residual& phi, const Vec& v, double rho) {
  const int n = r.n;
  CompositeProgram prog(n);
  prog.M = Mat::Identity(n, n) / rho;
  prog.b = -phi.c - v / rho;
  if (phi.q.size() == 1) {
    prog.b += phi.q[0];
  } else {
    Mat G(phi.q.size(), n);
    Vec a(phi.q.size());
    for (size_t i = 0; i < phi.q.size(); ++i) {
      G.row(static_cast<Eigen::Index>(i)) = phi.q[i].transpose();
      a(static_cast<Eigen::Index>(i)) = -phi.q[i].dot(phi.u);
    }
    prog.add_max_term(G, a);
  }
  phi.psi->append_to(prog);
  append_set(r, prog);
  CompositeSolution s = solve_composite(prog);
  return s.x;
}

GapValue ascend(const Region& r, const Residual& phi, const GapOptions& opts) {
  GapValue best;
  best.method = "ascent";
  best.value = 0.0;
  best.argmax = phi.u;
  best.upper = kInf;
  best.converged = false;

  Vec v = phi.u;
  double width = std::max((r.hi - r.lo).maxCoeff(), 1e-12);
  double scale = 1.0 + phi.c.norm();
  for (const auto& q : phi.q) scale = std::max(scale, 1.0 + q.norm());
  double rho = width / scale;
  int steps = opts.cheap ? 2 : opts.max_prox_steps;

  if (opts.cheap) {
    // Vertex-style candidates: maximisers of each linear piece over the box.
    for (const auto& q : phi.q) {
      Vec g = phi.c - q;
      Vec cand(r.n);
      for (int i = 0; i < r.n; ++i) cand(i) = g(i) >= 0 ? r.hi(i) : r.lo(i);
      cand = project_region(r, cand);
      double val = phi(cand);
      if (val > best.value) {
        best.value = val;
        best.argmax = cand;
      }
    }
    v = best.argmax;
  }

  for (int k = 0; k < steps; ++k) {
    Vec vn = prox_step(r, phi, v, rho);
    double val = phi(vn);
    if (val > best.value) {
      best.value = val;
      best.argmax = vn;
    }
    Vec g = (v - vn) / rho;
    if (std::isfinite(val)) {
      double upper = val + g.dot(vn) + support_bound(r, -g);
      best.upper = std::min(best.upper, upper);
    }
    if (best.upper - best.value <= opts.ascent_tol) {
      best.converged = true;
      break;
    }
    if ((vn - v).norm() <= 1e-15 * (1.0 + v.norm())) {
      best.upper = std::max(best.value, std::min(best.upper, val));
      best.converged = true;
      break;
    }
    v = vn;
    rho = std::min(2.0 * rho, 1e8 * width / scale);
  }
  if (opts.cheap) best.converged = false;
  best.upper = std::max(best.upper, best.value);
  return best;
}

}  // namespace

GapValue primal_gap(const CoupledProblem& prob, Side side, const Vec& own, const Vec& other,
                    const GapOptions& opts) {
  SideView sv = side_view(prob, side);
  check_point(sv, own, other, side == Side::First ? "primal_gap_1" : "primal_gap_2");
  Residual phi = build_residual(sv, own, other, opts.activity_tol);

  // Equation residual: whole space, no convex part, a single active gradient.
  if (sv.set->kind() == "whole" && sv.psi->is_zero() && phi.q.size() == 1) {
    GapValue g;
    Vec d = phi.c - phi.q[0];
    double nd = d.norm();
    g.value = opts.search_radius * nd;
    g.upper = g.value;
    g.argmax = nd > 0 ? Vec(own + (opts.search_radius / nd) * d) : own;
    g.method = "residual";
    return g;
  }

  Region r = build_region(sv, own, opts.search_radius);
  bool enumerable = r.polyhedral() && sv.psi->piecewise_linear() && r.n <= 3;
  GapMethod m = opts.method;
  if (m == GapMethod::Auto) m = enumerable ? GapMethod::Enumeration : GapMethod::Ascent;
  if (m == GapMethod::Enumeration) {
    if (!enumerable) throw InputError("gap: enumeration needs a polyhedral set, a polyhedral psi and dimension <= 3");
    return enumerate(r, phi);
  }
  return ascend(r, phi, opts);
}

GapValue primal_gap_1(const CoupledProblem& prob, const Vec& u, const Vec& w, const GapOptions& opts) {
  GapValue g = primal_gap(prob, Side::First, u, w, opts);
  if (!g.converged && !opts.cheap) {
    throw NumericalError("primal_gap_1: ascent stopped with bracket [" + std::to_string(g.value) + ", " +
                         std::to_string(g.upper) + "]");
  }
  return g;
}

GapValue primal_gap_2(const CoupledProblem& prob, const Vec& u, const Vec& w, const GapOptions& opts) {
  GapValue g = primal_gap(prob, Side::Second, w, u, opts);
  if (!g.converged && !opts.cheap) {
    throw NumericalError("primal_gap_2: ascent stopped with bracket [" + std::to_string(g.value) + ", " +
                         std::to_string(g.upper) + "]");
  }
  return g;
}

MintyValue minty_gap(const CoupledProblem& prob, Side side, const Vec& own, const Vec& other,
                     const GapOptions& opts) {
  SideView sv = side_view(prob, side);
  check_point(sv, own, other, "minty_gap");
  Region r = build_region(sv, own, opts.search_radius);
  const int n = r.n;
  const Vec p = sv.delta->apply(other);
  const double psi_u = sv.psi->value(own);
  auto M = [&](const Vec& x) {
    double pv = sv.psi->value(x);
    if (!std::isfinite(pv)) return -kInf;
    Vec d = x - own;
    return (*sv.rhs - sv.op->apply(other, x)).dot(d) -
           sv.J->clarke_dir(p, sv.gamma->apply(x), sv.gamma->apply(d), opts.activity_tol) - pv + psi_u;
  };

  MintyValue best;
  best.value = 0.0;
  best.argmax = own;
  best.heuristic = n > 4;
  std::vector<std::pair<double, Vec>> pool;
  auto consider = [&](const Vec& x) {
    double val = M(x);
    if (!std::isfinite(val)) return;
    pool.emplace_back(val, x);
    if (val > best.value) {
      best.value = val;
      best.argmax = x;
    }
  };

  // Segment towards the primal maximiser.
  GapOptions po = opts;
  po.cheap = false;
  GapValue pg = primal_gap(prob, side, own, other, po);
  const Vec vstar = pg.argmax;
  double best_t = 0.0, best_tv = 0.0;
  for (int k = 0; k <= 30; ++k) {
    double t = std::ldexp(1.0, -k);
    Vec x = own + t * (vstar - own);
    double val = M(x);
    if (val > best_tv) {
      best_tv = val;
      best_t = t;
    }
    consider(x);
  }
  if (best_t > 0.0) {
    double a = 0.5 * best_t, b = std::min(1.0, 2.0 * best_t);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k < 60 && b - a > 1e-14; ++k) {
      double t1 = b - gr * (b - a), t2 = a + gr * (b - a);
      if (M(own + t1 * (vstar - own)) >= M(own + t2 * (vstar - own))) b = t2;
      else a = t1;
    }
    consider(own + 0.5 * (a + b) * (vstar - own));
  }

  // Coarse grid over the bounding box, then support points and random starts.
  if (n <= 4) {
    const int per = std::max(6, static_cast<int>(std::floor(std::pow(2000.0, 1.0 / n))));
    std::vector<int> k(n, 0);
    while (true) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = r.lo(i) + (r.hi(i) - r.lo(i)) * k[i] / (per - 1);
      if (r.contains(x)) consider(x);
      int i = 0;
      while (i < n && ++k[i] == per) k[i++] = 0;
      if (i == n) break;
    }
  }
  for (int i = 0; i < n; ++i) {
    Vec x = r.lo, y = r.hi;
    x(i) = r.hi(i);
    y(i) = r.lo(i);
    consider(project_region(r, x));
    consider(project_region(r, y));
  }
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int s = 0; s < 8; ++s) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = r.lo(i) + (r.hi(i) - r.lo(i)) * U(rng);
    consider(project_region(r, x));
  }

  // Projected compass search from the three best starts.
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double width = std::max((r.hi - r.lo).maxCoeff(), 1e-12);
  const size_t starts = std::min<size_t>(3, pool.size());
  for (size_t s = 0; s < starts; ++s) {
    Vec x = pool[s].second;
    double fx = pool[s].first;
    double step = 0.25 * width;
    int evals = 0;
    while (step > 1e-10 * width && evals < 4000) {
      bool improved = false;
      for (int i = 0; i < n && !improved; ++i) {
        for (double sg : {1.0, -1.0}) {
          Vec y = x;
          y(i) += sg * step;
          y = project_region(r, y);
          double fy = M(y);
          ++evals;
          if (fy > fx + 1e-15 * (1.0 + std::abs(fx))) {
            x = y;
            fx = fy;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (fx > best.value) {
      best.value = fx;
      best.argmax = x;
    }
  }
  return best;
}

GapReport certify(const CoupledProblem& prob, const Vec& u, const Vec& w, double tol_cert,
                  const GapOptions& opts) {
  GapReport rep;
  rep.tol_cert = tol_cert;
  GapValue g1 = primal_gap_1(prob, u, w, opts);
  GapValue g2 = primal_gap_2(prob, u, w, opts);
  rep.gap1 = g1.value;
  rep.gap2 = g2.value;
  rep.arg1 = g1.argmax;
  rep.arg2 = g2.argmax;
  MintyValue m1 = minty_gap(prob, Side::First, u, w, opts);
  MintyValue m2 = minty_gap(prob, Side::Second, w, u, opts);
  rep.minty1 = m1.value;
  rep.minty2 = m2.value;
  rep.minty_arg1 = m1.argmax;
  rep.minty_arg2 = m2.argmax;
  rep.minty_heuristic = m1.heuristic || m2.heuristic;
  rep.certified = rep.joint() <= tol_cert;
  return rep;
}

Vec project_feasible(const CoupledProblem& prob, Side side, const Vec& x) {
  SideView sv = side_view(prob, side);
  if (!sv.psi->has_indicator()) return sv.set->project(x);
  CompositeProgram prog(sv.dim);
  prog.M = Mat::Identity(sv.dim, sv.dim);
  prog.b = -x;
  Mat A;
  Vec b;
  sv.set->inequalities(A, b);
  prog.add_inequalities(A, b);
  if (auto* bl = std::get_if<Ball>(&sv.set->shape())) prog.balls.push_back({bl->center, bl->radius});
  append_indicators(*sv.psi, prog);
  CompositeSolution s = solve_composite(prog);
  if (s.infeasibility > 1e-9) throw DomainError("project_feasible: C ∩ dom psi appears to be empty");
  return s.x;
}

}  // namespace cvhi
