#include "cvhi/composite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvhi/errors.hpp"

namespace cvhi {

CompositeProgram::CompositeProgram(int n)
    : M(Mat::Zero(n, n)), b(Vec::Zero(n)), E(0, n), e(0), n_(n) {}

void CompositeProgram::add_inequalities(const Mat& rows, const Vec& rhs) {
  if (rows.rows() == 0) return;
  Mat e2(E.rows() + rows.rows(), n_);
  e2 << E, rows;
  Vec r2(e.size() + rhs.size());
  r2 << e, rhs;
  E = std::move(e2);
  e = std::move(r2);
}

void CompositeProgram::add_max_term(Mat G, Vec a) {
  max_terms.push_back({std::move(G), std::move(a)});
}

double CompositeProgram::objective(const Vec& x) const {
  double f = 0.5 * x.dot(M * x) + b.dot(x);
  for (const auto& t : max_terms) f += (t.G * x + t.a).maxCoeff();
  for (const auto& t : norm_terms) f += t.weight * (t.K * x + t.k).norm();
  return f;
}

double CompositeProgram::infeasibility(const Vec& x) const {
  double v = 0.0;
  if (E.rows() > 0) v = std::max(v, (E * x - e).maxCoeff());
  for (const auto& bl : balls) v = std::max(v, (x - bl.center).norm() - bl.radius);
  return std::max(v, 0.0);
}

Vec project_simplex(const Vec& z) {
  const Eigen::Index n = z.size();
  std::vector<double> s(z.data(), z.data() + n);
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cum += s[i];
    double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0) theta = t;
  }
  return (z.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

enum class BlockKind { Simplex, Orthant, NormBall, Shrink };

struct Block {
  BlockKind kind;
  int offset;
  int size;
  double param;
};

struct DualData {
  Mat T;
  Vec t;
  std::vector<Block> blocks;
};

DualData assemble(const CompositeProgram& p) {
  const int n = p.dim();
  int m = 0;
  for (const auto& mt : p.max_terms) m += static_cast<int>(mt.G.rows());
  m += static_cast<int>(p.E.rows());
  for (const auto& nt : p.norm_terms) m += static_cast<int>(nt.K.rows());
  m += static_cast<int>(p.balls.size()) * n;

  DualData d;
  d.T.resize(m, n);
  d.t.resize(m);
  int r = 0;
  for (const auto& mt : p.max_terms) {
    const int k = static_cast<int>(mt.G.rows());
    d.T.middleRows(r, k) = mt.G;
    d.t.segment(r, k) = mt.a;
    d.blocks.push_back({BlockKind::Simplex, r, k, 0.0});
    r += k;
  }
  if (p.E.rows() > 0) {
    const int k = static_cast<int>(p.E.rows());
    d.T.middleRows(r, k) = p.E;
    d.t.segment(r, k) = -p.e;
    d.blocks.push_back({BlockKind::Orthant, r, k, 0.0});
    r += k;
  }
  for (const auto& nt : p.norm_terms) {
    const int k = static_cast<int>(nt.K.rows());
    d.T.middleRows(r, k) = nt.K;
    d.t.segment(r, k) = nt.k;
    d.blocks.push_back({BlockKind::NormBall, r, k, nt.weight});
    r += k;
  }
  for (const auto& bl : p.balls) {
    d.T.middleRows(r, n) = Mat::Identity(n, n);
    d.t.segment(r, n) = -bl.center;
    d.blocks.push_back({BlockKind::Shrink, r, n, bl.radius});
    r += n;
  }
  return d;
}

// Ascent prox on the dual blocks. `step` is 1/L.
void dual_prox(const std::vector<Block>& blocks, double step, Vec& y) {
  for (const auto& bl : blocks) {
    auto seg = y.segment(bl.offset, bl.size);
    switch (bl.kind) {
      case BlockKind::Simplex:
        seg = project_simplex(seg);
        break;
      case BlockKind::Orthant:
        seg = seg.cwiseMax(0.0);
        break;
      case BlockKind::NormBall: {
        double nr = seg.norm();
        if (nr > bl.param) seg *= bl.param / nr;
        break;
      }
      case BlockKind::Shrink: {
        double nr = seg.norm();
        double thr = step * bl.param;
        if (nr <= thr) seg.setZero();
        else seg *= (1.0 - thr / nr);
        break;
      }
    }
  }
}

// Exact solve of the KKT system for the active set read off (x, y).
bool polish(const CompositeProgram& p, const Vec& x, const Vec& y, double eps, Vec& out) {
  const int n = p.dim();
  struct ActiveTerm {
    std::vector<int> pieces;
  };
  std::vector<ActiveTerm> act_terms;
  int n_mu = 0;
  int row = 0;
  for (const auto& mt : p.max_terms) {
    Vec z = mt.G * x + mt.a;
    double zmax = z.maxCoeff();
    ActiveTerm at;
    for (int i = 0; i < z.size(); ++i) {
      bool by_value = zmax - z(i) <= eps * (1.0 + std::abs(zmax));
      bool by_dual = y(row + i) > 1e-3 && zmax - z(i) <= 1e3 * eps * (1.0 + std::abs(zmax));
      if (by_value || by_dual) at.pieces.push_back(i);
    }
    row += static_cast<int>(z.size());
    n_mu += static_cast<int>(at.pieces.size());
    act_terms.push_back(std::move(at));
  }
  std::vector<int> act_rows;
  if (p.E.rows() > 0) {
    Vec slack = p.e - p.E * x;
    for (int r = 0; r < slack.size(); ++r) {
      if (slack(r) <= eps * (1.0 + std::abs(p.e(r)))) act_rows.push_back(r);
    }
  }
  const int m = static_cast<int>(p.max_terms.size());
  const int na = static_cast<int>(act_rows.size());
  const int N = n + m + n_mu + na;
  Mat K = Mat::Zero(N, N);
  Vec rhs = Vec::Zero(N);

  // Columns: [x | t_j | mu | lambda]; rows: stationarity, simplex sums,
  // active-piece equalities, active-constraint equalities.
  K.topLeftCorner(n, n) = p.M;
  rhs.head(n) = -p.b;
  int mu_col = n + m;
  int eq_row = n + m;
  for (int j = 0; j < m; ++j) {
    const auto& mt = p.max_terms[j];
    for (int i : act_terms[j].pieces) {
      K.block(0, mu_col, n, 1) = mt.G.row(i).transpose();
      K(n + j, mu_col) = 1.0;
      K.block(eq_row, 0, 1, n) = mt.G.row(i);
      K(eq_row, n + j) = -1.0;
      rhs(eq_row) = -mt.a(i);
      ++mu_col;
      ++eq_row;
    }
    rhs(n + j) = 1.0;
  }
  int lam_col = n + m + n_mu;
  for (int r : act_rows) {
    K.block(0, lam_col, n, 1) = p.E.row(r).transpose();
    K.block(eq_row, 0, 1, n) = p.E.row(r);
    rhs(eq_row) = p.e(r);
    ++lam_col;
    ++eq_row;
  }

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  Vec z = cod.solve(rhs);
  if (!z.allFinite()) return false;
  double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>() + K.lpNorm<Eigen::Infinity>();
  if ((K * z - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * scale) return false;

  const double mtol = 1e-10 * scale;
  for (int c = n + m; c < N; ++c) {
    if (z(c) < -mtol) return false;
  }
  Vec xs = z.head(n);
  for (int j = 0; j < m; ++j) {
    const auto& mt = p.max_terms[j];
    Vec vals = mt.G * xs + mt.a;
    double tj = z(n + j);
    if (vals.maxCoeff() > tj + 1e-10 * (1.0 + std::abs(tj))) return false;
  }
  if (p.E.rows() > 0) {
    Vec viol = p.E * xs - p.e;
    for (int r = 0; r < viol.size(); ++r) {
      if (viol(r) > 1e-10 * (1.0 + std::abs(p.e(r)))) return false;
    }
  }
  out = xs;
  return true;
}

bool is_checkpoint(int it) {
  static const int pts[] = {5, 15, 40, 100, 250, 600, 1500, 4000, 10000, 25000};
  for (int p : pts) {
    if (it == p) return true;
  }
  return false;
}

}  // namespace

CompositeSolution solve_composite(const CompositeProgram& prog, const CompositeSettings& settings) {
  const int n = prog.dim();
  if (prog.M.rows() != n || prog.M.cols() != n || prog.b.size() != n) {
    throw InputError("composite program: inconsistent dimensions");
  }
  Eigen::LLT<Mat> llt(0.5 * (prog.M + prog.M.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("composite program: quadratic part is not positive definite");
  }
  CompositeSolution sol;
  DualData d = assemble(prog);
  const int m = static_cast<int>(d.T.rows());
  Vec minv_b = llt.solve(prog.b);
  if (m == 0) {
    sol.x = -minv_b;
    sol.objective = prog.objective(sol.x);
    sol.converged = true;
    sol.polished = true;
    return sol;
  }
  Mat minv_tt = llt.solve(d.T.transpose());
  Mat H = d.T * minv_tt;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  double L = std::max(es.eigenvalues().maxCoeff(), 1e-14);
  const double step = 1.0 / L;

  const bool can_polish =
      settings.polish && prog.norm_terms.empty() && prog.balls.empty();

  auto x_of = [&](const Vec& y) -> Vec { return -(minv_b + minv_tt * y); };
  auto dual_value = [&](const Vec& y, const Vec& x) {
    double v = -0.5 * x.dot(prog.M * x) + d.t.dot(y);
    for (const auto& bl : d.blocks) {
      if (bl.kind == BlockKind::Shrink) v -= bl.param * y.segment(bl.offset, bl.size).norm();
    }
    return v;
  };

  Vec y = Vec::Zero(m);
  for (const auto& bl : d.blocks) {
    if (bl.kind == BlockKind::Simplex) y.segment(bl.offset, bl.size).setConstant(1.0 / bl.size);
  }
  Vec z = y;
  Vec x = x_of(y);
  double dval = dual_value(y, x);
  double tk = 1.0;
  const double scale = 1.0 + d.t.lpNorm<Eigen::Infinity>() + prog.b.lpNorm<Eigen::Infinity>();

  int it = 0;
  bool done = false;
  for (it = 1; it <= settings.max_iter; ++it) {
    Vec xz = x_of(z);
    Vec ynew = z + step * (d.T * xz + d.t);
    dual_prox(d.blocks, step, ynew);
    Vec xnew = x_of(ynew);
    double dnew = dual_value(ynew, xnew);
    double resid = L * (ynew - z).norm();
    if (dnew < dval - 1e-15 * (1.0 + std::abs(dval))) {
      z = y;
      tk = 1.0;
    } else {
      double tnew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      z = ynew + ((tk - 1.0) / tnew) * (ynew - y);
      y = ynew;
      x = xnew;
      dval = dnew;
      tk = tnew;
    }
    done = resid <= settings.tol * scale;
    if (can_polish && (done || is_checkpoint(it))) {
      Vec xp;
      for (double eps : {1e-9, 1e-7, 1e-5, 1e-3}) {
        if (polish(prog, x, y, eps, xp)) {
          sol.x = xp;
          sol.objective = prog.objective(xp);
          sol.infeasibility = prog.infeasibility(xp);
          sol.iterations = it;
          sol.polished = true;
          sol.converged = true;
          return sol;
        }
      }
    }
    if (done) break;
  }
  // Unpolished exit: pull back into a single ball constraint exactly.
  if (prog.balls.size() == 1 && prog.E.rows() == 0) {
    const auto& bl = prog.balls.front();
    double r = (x - bl.center).norm();
    if (r > bl.radius) x = bl.center + (bl.radius / r) * (x - bl.center);
  }
  sol.x = x;
  sol.objective = prog.objective(x);
  sol.infeasibility = prog.infeasibility(x);
  sol.iterations = std::min(it, settings.max_iter);
  sol.converged = done && sol.infeasibility <= 1e-9 * scale;
  return sol;
}

}  // namespace cvhi
