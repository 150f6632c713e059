#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvhi/gap.hpp"
#include "cvhi/hypotheses.hpp"

namespace cvhi {

struct OracleOptions {
  double grid_step = 1e-3;
  // Defaults to Lhat * grid_step * sqrt(d), Lhat the coarse-level Lipschitz estimate of the joint gap.
  std::optional<double> accept_tol;
  // Search box over the stacked vector (u, w). Defaults to the invariance box
  // clipped to the bounding boxes of C and D, or those bounding boxes alone.
  std::optional<Vec> region_lo, region_hi;
  // 0 reads CVHI_THREADS (default: hardware concurrency).
  int threads = 0;
  double cell_budget = 1e8;
  double search_radius = 1.0;
  std::uint64_t seed = 0;
  // Restricts the search to lattice nodes within window_radius (max norm) of
  // window_center. The lattice, the slope estimate and the default tolerance
  // still come from the whole region, so the nodes accepted are those an
  // unrestricted run accepts inside the window.
  std::optional<Vec> window_center;
  double window_radius = 0.0;
};

struct OraclePoint {
  Vec u, w;
  double gap1 = 0.0, gap2 = 0.0;
};

struct OracleResult {
  double grid_step = 0.0;
  double accept_tol = 0.0;
  double lipschitz = 0.0;
  Vec region_lo, region_hi;
  std::vector<OraclePoint> accepted;  // lexicographic node order
  double min_joint_gap = 0.0;
  bool nonempty = false;
  double enclosing_radius = 0.0;  // max distance of an accepted point from their centroid
  long long evaluated_cells = 0;
  int levels = 0;
  // Lattice indices of the accepted points, offsets from region_lo in grid steps.
  std::vector<std::vector<long long>> accepted_nodes;
  // Index box that was searched (the whole lattice unless windowed).
  std::vector<long long> node_lo, node_hi;
};

// Multilevel lattice search for grid nodes of the region with joint primal gap
// <= accept_tol. Coarse levels discard nodes by a cheap lower bound of the gap;
// pieces within a stride-dependent margin count as active so nodes near a
// kink are not lost.
OracleResult enumerate_solutions(const CoupledProblem& prob, const OracleOptions& opts = {},
                                 const HypothesisReport* report = nullptr);

struct ProbeOutcome {
  std::string status;  // pass | fail | skipped
  std::string detail;
};

struct ProbeSummary {
  ProbeOutcome nonempty, bounded, closed;
  bool all_pass() const { return nonempty.status != "fail" && bounded.status != "fail" && closed.status != "fail"; }
};

ProbeSummary set_probes(const CoupledProblem& prob, const OracleResult& result, const HypothesisReport& report,
                        const OracleOptions& opts = {});

}  // namespace cvhi
