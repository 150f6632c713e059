#include "cvhi/oracle.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

// Lattice index; entries past the dimension stay zero.
using Index = std::array<int, 6>;

struct Lattice {
  int nV = 0, d = 0;
  Vec lo;
  double step = 0.0;
  Index K{};     // last index per coordinate
  Index base{};  // offset of index 0 within the lattice of the whole region

  Vec coords(const Index& k) const {
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = lo(i) + static_cast<double>(base[i] + k[i]) * step;
    return x;
  }
};

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CVHI_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Applies f to every element; results land at fixed positions, so the output
// does not depend on the worker count.
template <class T, class F>
std::vector<T> parallel_map(const std::vector<Index>& nodes, int threads, F f) {
  std::vector<T> out(nodes.size());
  if (threads <= 1 || nodes.size() < 64) {
    for (size_t i = 0; i < nodes.size(); ++i) out[i] = f(nodes[i]);
    return out;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = t; i < nodes.size(); i += threads) out[i] = f(nodes[i]);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

struct Eval {
  double g1 = kInfinity(), g2 = kInfinity();
  bool feasible = false;
  double joint() const { return std::max(g1, g2); }
  static double kInfinity() { return std::numeric_limits<double>::infinity(); }
};

struct Evaluator {
  const CoupledProblem& prob;
  const Lattice& lat;
  double search_radius;
  // Activity margin per unit of node spacing, per side.
  double slope1, slope2;

  GapOptions options(double eps, bool cheap) const {
    GapOptions o;
    o.activity_tol = std::max(1e-9, eps);
    o.search_radius = search_radius;
    o.cheap = cheap;
    return o;
  }

  // Joint gap at a node (projected onto C x D when it lies outside), with
  // pieces counted active within the margin for a distance r.
  Eval operator()(const Index& k, double r, bool cheap) const {
    Vec x = lat.coords(k);
    Vec u = x.head(lat.nV), w = x.tail(lat.d - lat.nV);
    Eval e;
    e.feasible = prob.C.contains(u) && prob.D.contains(w) && prob.psi.in_domain(u) && prob.theta.in_domain(w);
    if (!e.feasible) {
      u = project_feasible(prob, Side::First, u);
      w = project_feasible(prob, Side::Second, w);
    }
    GapValue a = primal_gap(prob, Side::First, u, w, options(slope1 * r, cheap));
    GapValue b = primal_gap(prob, Side::Second, w, u, options(slope2 * r, cheap));
    e.g1 = cheap || a.converged ? a.value : a.upper;
    e.g2 = cheap || b.converged ? b.value : b.upper;
    return e;
  }
};

double side_slope(const MaxSmoothBifunction& J, const LinearMap& gamma, const LinearMap& delta, double rp, double rx) {
  if (J.is_zero()) return 0.0;
  return 2.0 * (J.gradient_bound_x(rp, rx) * gamma.norm() + J.gradient_bound_p(rp, rx) * delta.norm());
}

// Norm bounds of u and w over the region, for gradient bounds of J and H.
std::pair<double, double> region_radii(const Vec& lo, const Vec& hi, int nV) {
  const int d = static_cast<int>(lo.size());
  double rx = std::max(lo.head(nV).cwiseAbs().maxCoeff(), hi.head(nV).cwiseAbs().maxCoeff());
  double rw = std::max(lo.tail(d - nV).cwiseAbs().maxCoeff(), hi.tail(d - nV).cwiseAbs().maxCoeff());
  return {rx * std::sqrt(static_cast<double>(nV)), rw * std::sqrt(static_cast<double>(d - nV))};
}

Evaluator make_evaluator(const CoupledProblem& prob, const Lattice& lat, const Vec& lo, const Vec& hi,
                         double search_radius) {
  auto [rx, rw] = region_radii(lo, hi, prob.layout.nV);
  return {prob, lat, search_radius,
          side_slope(prob.J, prob.gamma1, prob.delta1, prob.delta1.norm() * rw, prob.gamma1.norm() * rx),
          side_slope(prob.H, prob.gamma2, prob.delta2, prob.delta2.norm() * rx, prob.gamma2.norm() * rw)};
}

// Largest axis-neighbour difference quotient of the joint gap among the
// evaluated nodes (sorted), floored at 1e-3.
double local_lipschitz(const std::vector<Index>& nodes, const std::vector<Eval>& vals, int d, int stride,
                       const Index& K, double step) {
  double L = 1e-3;
  for (size_t j = 0; j < nodes.size(); ++j) {
    for (int i = 0; i < d; ++i) {
      Index n = nodes[j];
      n[i] = std::min(n[i] + stride, K[i]);
      if (n[i] == nodes[j][i]) continue;
      auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
      if (it == nodes.end() || *it != n) continue;
      const Eval& other = vals[static_cast<size_t>(it - nodes.begin())];
      double dist = static_cast<double>(n[i] - nodes[j][i]) * step;
      L = std::max(L, std::abs(other.joint() - vals[j].joint()) / dist);
    }
  }
  return L;
}

void region_of(const CoupledProblem& prob, const OracleOptions& opts, const HypothesisReport* report, Vec& lo,
               Vec& hi) {
  const int nV = prob.layout.nV, nE = prob.layout.nE;
  if (opts.region_lo || opts.region_hi) {
    if (!opts.region_lo || !opts.region_hi) throw InputError("oracle: region needs both bounds");
    lo = *opts.region_lo;
    hi = *opts.region_hi;
    if (lo.size() != nV + nE || hi.size() != nV + nE) throw InputError("oracle: region dimension mismatch");
  } else {
    lo.resize(nV + nE);
    hi.resize(nV + nE);
    lo << prob.C.bbox_lo(), prob.D.bbox_lo();
    hi << prob.C.bbox_hi(), prob.D.bbox_hi();
    if (report && report->m0) {
      lo = lo.cwiseMax(Vec::Constant(nV + nE, -*report->m0));
      hi = hi.cwiseMin(Vec::Constant(nV + nE, *report->m0));
    }
  }
  if (!lo.allFinite() || !hi.allFinite()) throw InputError("oracle: search region is unbounded; pass an explicit region");
  if ((hi - lo).minCoeff() < 0.0) throw InputError("oracle: empty search region");
}

void neighbours(const Index& k, int d, int stride, int reach, const Index& K, std::vector<Index>& out) {
  Index off{};
  for (int i = 0; i < d; ++i) off[i] = -reach;
  while (true) {
    Index n{};
    bool inside = true;
    for (int i = 0; i < d; ++i) {
      n[i] = k[i] + off[i] * stride;
      if (n[i] < 0 || n[i] > K[i]) inside = false;
    }
    if (inside) out.push_back(n);
    int i = 0;
    while (i < d && off[i] == reach) off[i++] = -reach;
    if (i == d) break;
    ++off[i];
  }
}

void sort_unique(std::vector<Index>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Last lattice index per axis; DomainError when the lattice is too fine to index.
Index lattice_extent(const Vec& lo, const Vec& hi, double step) {
  Index K{};
  for (int i = 0; i < lo.size(); ++i) {
    double k = std::floor((hi(i) - lo(i)) / step + 1e-9);
    if (k >= static_cast<double>(INT_MAX / 4)) throw DomainError("oracle: region too wide for grid_step");
    K[i] = static_cast<int>(k);
  }
  return K;
}

// Full lattice at the coarsest stride (about 4096 nodes), plus the last index
// of every axis. Returns the stride exponent.
int coarse_nodes(const Lattice& lat, std::vector<Index>& out) {
  const int d = lat.d;
  const int Kmax = *std::max_element(lat.K.begin(), lat.K.begin() + d);
  const double per_dim = std::max(4.0, std::floor(std::pow(4096.0, 1.0 / d)));
  int L = 0;
  while ((static_cast<double>(Kmax) / static_cast<double>(1 << L)) > per_dim) ++L;
  const int stride = 1 << L;
  std::vector<std::vector<int>> axes(d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k <= lat.K[i]; k += stride) axes[i].push_back(k);
    if (axes[i].back() != lat.K[i]) axes[i].push_back(lat.K[i]);
  }
  out.clear();
  Index k{};
  std::array<size_t, 6> pos{};
  while (true) {
    for (int i = 0; i < d; ++i) k[i] = axes[i][pos[i]];
    out.push_back(k);
    int i = 0;
    while (i < d && pos[i] + 1 == axes[i].size()) pos[i++] = 0;
    if (i == d) break;
    ++pos[i];
  }
  sort_unique(out);
  return L;
}

}  // namespace

OracleResult enumerate_solutions(const CoupledProblem& prob, const OracleOptions& opts, const HypothesisReport* report) {
  prob.validate();
  const int nV = prob.layout.nV, d = prob.layout.nV + prob.layout.nE;
  if (d > 6) throw InputError("oracle: dim(V) + dim(E) must be at most 6");
  if (!(opts.grid_step > 0.0)) throw InputError("oracle: grid_step must be positive");
  if (opts.window_center && (opts.window_center->size() != d || !(opts.window_radius >= 0.0))) {
    throw InputError("oracle: window needs a center of dimension dim(V) + dim(E) and a nonnegative radius");
  }
  OracleResult res;
  res.grid_step = opts.grid_step;
  region_of(prob, opts, report, res.region_lo, res.region_hi);

  Lattice glob;
  glob.nV = nV;
  glob.d = d;
  glob.lo = res.region_lo;
  glob.step = opts.grid_step;
  glob.K = lattice_extent(res.region_lo, res.region_hi, opts.grid_step);

  const int threads = thread_count(opts.threads);
  const double sqd = std::sqrt(static_cast<double>(d));
  const double s = opts.grid_step;

  auto charge = [&](size_t n) {
    res.evaluated_cells += static_cast<long long>(n);
    if (static_cast<double>(res.evaluated_cells) > opts.cell_budget) {
      throw DomainError("oracle: cell budget of " + std::to_string(static_cast<long long>(opts.cell_budget)) +
                        " exceeded; try grid_step >= " + std::to_string(2.0 * s));
    }
  };
  auto evaluate = [&](const Lattice& lat, const std::vector<Index>& nodes, double r, bool cheap) {
    Evaluator ev = make_evaluator(prob, lat, res.region_lo, res.region_hi, opts.search_radius);
    return parallel_map<Eval>(nodes, threads, [&](const Index& k) { return ev(k, r, cheap); });
  };

  // Slope estimate from the coarse lattice of the whole region, also for a
  // windowed run. Finer levels only see survivors, where activity changes of
  // J and H dominate the difference quotients.
  std::vector<Index> cand;
  int L = coarse_nodes(glob, cand);
  std::vector<Eval> vals;
  {
    const int stride = 1 << L;
    charge(cand.size());
    vals = evaluate(glob, cand, 0.5 * stride * s * sqd, true);
    res.lipschitz = local_lipschitz(cand, vals, d, stride, glob.K, s);
  }
  const double Lhat = res.lipschitz;
  const double tau = opts.accept_tol.value_or(Lhat * s * sqd);
  res.accept_tol = tau;

  Lattice lat = glob;
  if (opts.window_center) {
    for (int i = 0; i < d; ++i) {
      const double c = (*opts.window_center)(i), r = opts.window_radius;
      const double a = std::max(0.0, std::ceil((c - r - glob.lo(i)) / s - 1e-9));
      const double b = std::min(static_cast<double>(glob.K[i]), std::floor((c + r - glob.lo(i)) / s + 1e-9));
      if (b < a) {
        res.levels = 0;
        res.min_joint_gap = std::numeric_limits<double>::infinity();
        res.node_lo.assign(d, 0);
        res.node_hi.assign(d, -1);
        return res;
      }
      lat.base[i] = static_cast<int>(a);
      lat.K[i] = static_cast<int>(b - a);
    }
    L = coarse_nodes(lat, cand);
    charge(cand.size());
    vals = evaluate(lat, cand, 0.5 * (1 << L) * s * sqd, true);
  }
  for (int i = 0; i < d; ++i) {
    res.node_lo.push_back(lat.base[i]);
    res.node_hi.push_back(lat.base[i] + lat.K[i]);
  }
  res.levels = L + 1;

  for (int level = L;; --level) {
    const int stride = 1 << level;
    const double r = 0.5 * static_cast<double>(stride) * s * sqd;
    if (level < L) {
      charge(cand.size());
      vals = evaluate(lat, cand, r, true);
    }

    if (level == 0) {
      std::vector<Index> keep;
      res.min_joint_gap = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < cand.size(); ++i) {
        res.min_joint_gap = std::min(res.min_joint_gap, vals[i].joint());
        if (vals[i].feasible && vals[i].joint() <= tau) keep.push_back(cand[i]);
      }
      charge(keep.size());
      std::vector<Eval> full = evaluate(lat, keep, r, false);
      for (size_t i = 0; i < keep.size(); ++i) {
        res.min_joint_gap = std::min(res.min_joint_gap, full[i].joint());
        if (full[i].joint() <= tau) {
          Vec x = lat.coords(keep[i]);
          res.accepted.push_back({x.head(nV), x.tail(d - nV), full[i].g1, full[i].g2});
          std::vector<long long> node(static_cast<size_t>(d));
          for (int j = 0; j < d; ++j) node[static_cast<size_t>(j)] = lat.base[j] + keep[i][j];
          res.accepted_nodes.push_back(std::move(node));
        }
      }
      break;
    }

    // A final node is at most (stride - 1) steps per axis from its ancestor on
    // this level, so the ancestor's gap exceeds the node's by at most this.
    const double tau_l = tau + Lhat * static_cast<double>(stride - 1) * s * sqd;
    // Every node of the next level lies within one of its strides, per axis,
    // of a node of this level. Duplicates are merged in chunks to bound memory.
    std::vector<Index> next;
    size_t merged = 0;
    for (size_t i = 0; i < cand.size(); ++i) {
      if (vals[i].joint() > tau_l) continue;
      neighbours(cand[i], d, stride / 2, 1, lat.K, next);
      if (next.size() > 2 * merged + (1u << 20)) {
        sort_unique(next);
        merged = next.size();
        if (static_cast<double>(res.evaluated_cells + static_cast<long long>(merged)) > opts.cell_budget) charge(merged);
      }
    }
    sort_unique(next);
    cand = std::move(next);
    if (cand.empty()) break;
  }

  res.nonempty = !res.accepted.empty();
  if (res.nonempty) {
    Vec c = Vec::Zero(d);
    for (const auto& p : res.accepted) {
      Vec x(d);
      x << p.u, p.w;
      c += x;
    }
    c /= static_cast<double>(res.accepted.size());
    for (const auto& p : res.accepted) {
      Vec x(d);
      x << p.u, p.w;
      res.enclosing_radius = std::max(res.enclosing_radius, (x - c).norm());
    }
  } else if (!std::isfinite(res.min_joint_gap)) {
    res.min_joint_gap = std::numeric_limits<double>::infinity();
  }
  return res;
}

ProbeSummary set_probes(const CoupledProblem& prob, const OracleResult& result, const HypothesisReport& report,
                        const OracleOptions& opts) {
  ProbeSummary s;
  const double tau = result.accept_tol;

  if (result.nonempty) s.nonempty = {"pass", std::to_string(result.accepted.size()) + " accepted nodes"};
  else if (report.passed) s.nonempty = {"fail", "audit passes but no grid node is accepted"};
  else s.nonempty = {"skipped", "audit does not pass"};

  if (!report.R_solution) {
    s.bounded = {"skipped", "no a-priori bound: " + report.bound_note};
  } else {
    // Accepted nodes are approximate solutions: gap <= tau under relaxed activity.
    auto [rx, rw] = region_radii(result.region_lo, result.region_hi, prob.layout.nV);
    BoundRelaxation relax;
    relax.gap_slack = tau;
    relax.search_radius = opts.search_radius;
    // Relaxed activity admits pieces whose gradients differ by at most twice the gradient bound.
    relax.activity_spread1 = prob.J.is_zero() ? 0.0 : 2.0 * prob.J.gradient_bound_x(prob.delta1.norm() * rw, prob.gamma1.norm() * rx);
    relax.activity_spread2 = prob.H.is_zero() ? 0.0 : 2.0 * prob.H.gradient_bound_x(prob.delta2.norm() * rx, prob.gamma2.norm() * rw);
    double R = solution_bound(prob, report, relax);
    double worst = 0.0;
    for (const auto& p : result.accepted) worst = std::max({worst, p.u.norm(), p.w.norm()});
    s.bounded = {worst <= R ? "pass" : "fail",
                 "max accepted norm " + std::to_string(worst) + " vs relaxed bound " + std::to_string(R)};
  }

  // Closedness at grid resolution: no unaccepted node next to the accepted set,
  // and none among random nodes, has a full joint gap at or below tau / 2.
  bool searched = !result.node_lo.empty();
  for (size_t i = 0; i < result.node_lo.size(); ++i) searched = searched && result.node_lo[i] <= result.node_hi[i];
  if (!searched) {
    s.closed = {"skipped", "the search window holds no lattice node"};
  } else {
    const int nV = prob.layout.nV, d = nV + prob.layout.nE;
    Lattice lat;
    lat.nV = nV;
    lat.d = d;
    lat.lo = result.region_lo;
    lat.step = result.grid_step;
    lat.K = lattice_extent(result.region_lo, result.region_hi, result.grid_step);
    // Only the searched index box counts; a windowed run says nothing outside it.
    for (int i = 0; i < d; ++i) {
      lat.base[i] = static_cast<int>(result.node_lo[static_cast<size_t>(i)]);
      lat.K[i] = static_cast<int>(result.node_hi[static_cast<size_t>(i)] - result.node_lo[static_cast<size_t>(i)]);
    }
    Evaluator ev = make_evaluator(prob, lat, result.region_lo, result.region_hi, opts.search_radius);
    const double r = 0.5 * result.grid_step * std::sqrt(static_cast<double>(d));
    std::vector<Index> acc;
    for (const auto& k : result.accepted_nodes) {
      Index a{};
      for (int i = 0; i < d; ++i) a[i] = static_cast<int>(k[static_cast<size_t>(i)] - lat.base[i]);
      acc.push_back(a);
    }
    sort_unique(acc);
    auto accepted = [&](const Index& k) { return std::binary_search(acc.begin(), acc.end(), k); };
    std::vector<Index> ring;
    for (const auto& k : acc) neighbours(k, d, 1, 1, lat.K, ring);
    sort_unique(ring);
    ring.erase(std::remove_if(ring.begin(), ring.end(), accepted), ring.end());
    std::mt19937_64 rng(opts.seed ^ 0x5bd1e995ULL);
    std::vector<Index> sample;
    for (int t = 0; t < 200; ++t) {
      Index k{};
      for (int i = 0; i < d; ++i) k[i] = std::uniform_int_distribution<int>(0, lat.K[i])(rng);
      if (!accepted(k)) sample.push_back(k);
    }
    std::vector<Index> nodes = ring;
    nodes.insert(nodes.end(), sample.begin(), sample.end());
    std::vector<Eval> vals =
        parallel_map<Eval>(nodes, thread_count(opts.threads), [&](const Index& k) { return ev(k, r, false); });
    int misses = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (!vals[i].feasible) continue;
      worst = std::min(worst, vals[i].joint());
      if (vals[i].joint() <= 0.5 * tau) ++misses;
    }
    s.closed = {misses == 0 ? "pass" : "fail", std::to_string(ring.size()) + " ring and " +
                                                   std::to_string(sample.size()) + " sampled nodes, " +
                                                   std::to_string(misses) + " near-misses; smallest unaccepted gap " +
                                                   std::to_string(worst)};
  }
  return s;
}

}  // namespace cvhi
