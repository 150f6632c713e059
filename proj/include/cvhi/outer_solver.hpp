#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cvhi/errors.hpp"
#include "cvhi/inner_solver.hpp"

namespace cvhi {

struct OuterParams {
  double damping = 0.5;
  int max_outer = 500;
  double joint_tol = 1e-7;
  InnerParams inner;
  std::uint64_t seed = 0;
  // One more pass with half the damping after max_outer is exhausted.
  bool retry = true;
  // When set, every iterate is checked against the box {||u|| <= m0, ||w|| <= m0}.
  std::optional<double> invariance_radius;
};

struct OuterRecord {
  int k = 0;
  Vec u, w;
  double gap1 = 0.0, gap2 = 0.0;
  int inner1 = 0, inner2 = 0;
  double damping = 0.0;
  // The undamped pair (u-hat, w-hat) certified and was taken.
  bool full_step = false;
};

enum class SolveStatus { Running, Certified, NonConverged };

std::string to_string(SolveStatus s);
SolveStatus solve_status_from_string(const std::string& s);

// Record 0 is the projected start. (u, w, damping, retried) is the resumable state.
struct SolveTrace {
  std::vector<OuterRecord> records;
  SolveStatus status = SolveStatus::Running;
  Vec u, w;
  double damping = 0.5;
  bool retried = false;
  std::vector<std::string> diagnostics;

  const OuterRecord& best() const;
  int inner_total() const;
};

struct SolveResult {
  Vec u, w;
  SolveTrace trace;
};

class OuterNonConvergence : public NumericalError {
 public:
  OuterNonConvergence(const std::string& msg, SolveTrace trace) : NumericalError(msg), trace(std::move(trace)) {}
  SolveTrace trace;
};

// Damped Picard iteration on (u, w) -> (P(w), Q(u)) where P, Q solve one
// inequality with the other unknown frozen. Output is always certified.
SolveResult solve_coupled(const CoupledProblem& prob, const std::optional<Vec>& u0 = std::nullopt,
                          const std::optional<Vec>& w0 = std::nullopt, const OuterParams& params = {});

// Runs extra_iters more iterations from the trace's state with the trace's
// damping. No retry. Throws InputError for a trace that cannot be resumed.
SolveResult continue_from(const CoupledProblem& prob, const SolveTrace& trace, int extra_iters,
                          const OuterParams& params = {});

}  // namespace cvhi
