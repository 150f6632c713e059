#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvhi/gap.hpp"
#include "cvhi/hypotheses.hpp"
#include "cvhi/oracle.hpp"
#include "cvhi/outer_solver.hpp"
#include "cvhi/problem.hpp"

namespace cvhi {

std::string tool_version();

// Optional "solver" block of a problem file; command-line flags override it.
struct SolverDefaults {
  std::optional<double> tol, damping;
  std::optional<int> max_outer;
  std::optional<std::uint64_t> seed;
  bool operator==(const SolverDefaults&) const = default;
};

struct ProblemFile {
  CoupledProblem problem;
  SolverDefaults solver;
};

// Format "cvhi-problem/1". Throws InputError whose message starts with the
// JSON path of the offending field, or with line:column on a syntax error.
ProblemFile parse_problem(const std::string& text);
// Canonical form: fixed key order, shortest round-trip decimals.
std::string serialize_problem(const ProblemFile& file);
ProblemFile load_problem(const std::string& path);

struct TraceSummary {
  int outer_iterations = 0;
  int inner_iterations = 0;
  double damping = 0.0;
  bool retried = false;
  std::vector<std::string> diagnostics;
};

struct HypothesisSummary {
  bool passed = false;
  std::optional<double> R_solution, m0;
  std::vector<HypothesisStatus> statuses;
};

// Format "cvhi-result/1".
struct ResultFile {
  std::string problem_name;
  std::string status;  // certified | nonconverged
  Vec u, w;
  GapReport gaps;
  TraceSummary trace;
  HypothesisSummary hypotheses;
  std::string tool_version;
  std::string input_digest;  // hex sha256 of the problem file bytes
  std::uint64_t seed = 0;
};

std::string serialize_result(const ResultFile& r);
ResultFile parse_result(const std::string& text);

std::string serialize_report(const HypothesisReport& rep);
std::string serialize_oracle(const OracleResult& res, const ProbeSummary* probes, const OracleOptions& opts);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace cvhi
