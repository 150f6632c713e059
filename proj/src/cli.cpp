#include "cvhi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cvhi/errors.hpp"
#include "cvhi/instances.hpp"
#include "cvhi/io.hpp"

namespace cvhi {

namespace {

namespace fs = std::filesystem;

struct SolveFlags {
  std::optional<double> tol, damping;
  std::optional<int> max_outer;
  std::optional<std::uint64_t> seed;
  int samples = 1000;
};

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  app->add_option("--tol", f.tol, "joint certification tolerance (default 1e-7)");
  app->add_option("--damping", f.damping, "outer damping in (0, 1] (default 0.5)");
  app->add_option("--max-outer", f.max_outer, "outer iteration budget (default 500)");
  app->add_option("--seed", f.seed, "seed for every randomized step (default 0)");
  app->add_option("--samples", f.samples, "hypothesis-audit samples")->check(CLI::PositiveNumber);
}

struct Resolved {
  OuterParams params;
  double tol = 1e-7;
  std::uint64_t seed = 0;
};

// Flags override the file's solver block, which overrides the built-in defaults.
Resolved resolve(const SolveFlags& f, const SolverDefaults& d) {
  Resolved r;
  r.tol = f.tol.value_or(d.tol.value_or(1e-7));
  r.seed = f.seed.value_or(d.seed.value_or(0));
  r.params.joint_tol = r.tol;
  r.params.damping = f.damping.value_or(d.damping.value_or(0.5));
  r.params.max_outer = f.max_outer.value_or(d.max_outer.value_or(500));
  r.params.seed = r.seed;
  r.params.inner.gap.seed = r.seed;
  return r;
}

struct Solved {
  ResultFile file;
  bool certified = false;
  std::string message;
};

Solved solve_problem(const ProblemFile& pf, const std::string& bytes, const SolveFlags& flags) {
  const CoupledProblem& p = pf.problem;
  Resolved rs = resolve(flags, pf.solver);
  Solved out;
  ResultFile& r = out.file;
  r.problem_name = p.meta.name;
  r.tool_version = tool_version();
  r.input_digest = sha256_hex(bytes);
  r.seed = rs.seed;

  HypothesisReport rep = audit(p, flags.samples, rs.seed);
  r.hypotheses.passed = rep.passed;
  r.hypotheses.R_solution = rep.R_solution;
  r.hypotheses.m0 = rep.m0;
  r.hypotheses.statuses = rep.statuses;

  try {
    SolveResult s = solve_coupled(p, std::nullopt, std::nullopt, rs.params);
    r.u = s.u;
    r.w = s.w;
    r.trace = {static_cast<int>(s.trace.records.size()) - 1, s.trace.inner_total(), s.trace.damping, s.trace.retried,
               s.trace.diagnostics};
  } catch (const OuterNonConvergence& e) {
    const auto& best = e.trace.best();
    r.u = best.u;
    r.w = best.w;
    r.trace = {static_cast<int>(e.trace.records.size()) - 1, e.trace.inner_total(), e.trace.damping, e.trace.retried,
               e.trace.diagnostics};
    out.message = e.what();
  } catch (const InnerNonConvergence& e) {
    r.u = project_feasible(p, Side::First, p.u0.value_or(Vec::Zero(p.layout.nV)));
    r.w = project_feasible(p, Side::Second, p.w0.value_or(Vec::Zero(p.layout.nE)));
    r.trace.diagnostics.push_back(e.what());
    out.message = e.what();
  }
  GapOptions go;
  go.seed = rs.seed;
  r.gaps = certify(p, r.u, r.w, rs.tol, go);
  out.certified = r.gaps.certified;
  r.status = out.certified ? "certified" : "nonconverged";
  if (!out.certified && out.message.empty()) out.message = "pair does not certify";
  return out;
}

void emit(const std::string& text, const std::string& output, std::ostream& out) {
  if (output.empty()) out << text;
  else write_file(output, text);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

int cmd_solve(const std::string& path, const SolveFlags& flags, const std::string& output, std::ostream& out,
              std::ostream& err) {
  const std::string bytes = read_file(path);
  ProblemFile pf = parse_problem(bytes);
  Solved s = solve_problem(pf, bytes, flags);
  emit(serialize_result(s.file), output, out);
  if (!s.certified) {
    err << "solve: " << s.message << "\n";
    return kExitNonConverged;
  }
  if (!output.empty()) {
    out << "certified " << pf.problem.meta.name << ": gap1 " << fmt(s.file.gaps.gap1) << ", gap2 "
        << fmt(s.file.gaps.gap2) << "\n";
  }
  return kExitOk;
}

int cmd_verify(const std::string& problem_path, const std::string& result_path, std::ostream& out,
               std::ostream& err) {
  const std::string bytes = read_file(problem_path);
  ProblemFile pf = parse_problem(bytes);
  ResultFile r = parse_result(read_file(result_path));
  const auto& L = pf.problem.layout;
  if (r.u.size() != L.nV || r.w.size() != L.nE) throw InputError("verify: result pair does not match the problem layout");
  if (r.input_digest != sha256_hex(bytes)) throw InputError("verify: result was produced for a different problem file");
  GapOptions go;
  go.seed = r.seed;
  GapReport g = certify(pf.problem, r.u, r.w, r.gaps.tol_cert, go);
  const double joint = g.joint();
  if (joint > r.gaps.tol_cert) {
    err << "certificate failed: gap1 " << fmt(g.gap1) << ", gap2 " << fmt(g.gap2) << " > tol " << fmt(r.gaps.tol_cert)
        << "\n";
    return kExitVerify;
  }
  if (std::abs(g.gap1 - r.gaps.gap1) > 1e-12 || std::abs(g.gap2 - r.gaps.gap2) > 1e-12) {
    err << "certificate failed: stored gaps (" << fmt(r.gaps.gap1) << ", " << fmt(r.gaps.gap2)
        << ") do not re-verify; recomputed (" << fmt(g.gap1) << ", " << fmt(g.gap2) << ")\n";
    return kExitVerify;
  }
  out << "certificate verified: gap1 " << fmt(g.gap1) << ", gap2 " << fmt(g.gap2) << " <= tol " << fmt(r.gaps.tol_cert)
      << "\n";
  return kExitOk;
}

int cmd_oracle(const std::string& path, double grid, std::optional<double> tol, std::uint64_t seed, int samples,
               const std::string& output, std::ostream& out, std::ostream& err) {
  ProblemFile pf = load_problem(path);
  const CoupledProblem& p = pf.problem;
  HypothesisReport rep = audit(p, samples, seed);
  OracleOptions o;
  o.grid_step = grid;
  o.accept_tol = tol;
  o.seed = seed;
  OracleResult res;
  try {
    res = enumerate_solutions(p, o, &rep);
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  ProbeSummary probes = set_probes(p, res, rep, o);
  emit(serialize_oracle(res, &probes, o), output, out);
  if (!probes.all_pass()) {
    err << "oracle: probe failed (nonempty " << probes.nonempty.status << ", bounded " << probes.bounded.status
        << ", closed " << probes.closed.status << ")\n";
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_check(const std::string& path, std::uint64_t seed, int samples, const std::string& output, std::ostream& out,
              std::ostream& err) {
  ProblemFile pf = load_problem(path);
  HypothesisReport rep = audit(pf.problem, samples, seed);
  emit(serialize_report(rep), output, out);
  if (!rep.passed) {
    for (const auto& s : rep.statuses) {
      if (s.status == "fail") err << "check: " << s.name << " fails: " << s.detail << "\n";
    }
    return kExitVerify;
  }
  return kExitOk;
}

std::vector<std::pair<std::string, CoupledProblem>> suite_files() {
  std::vector<std::pair<std::string, CoupledProblem>> all;
  for (auto& p : hand_built_suite()) all.emplace_back(p.meta.name, std::move(p));
  for (auto& p : pathological_suite()) all.emplace_back(p.meta.name, std::move(p));
  for (int s = 1; s <= 50; ++s) {
    auto p = suite_random_instance(s);
    all.emplace_back(p.meta.name, std::move(p));
  }
  return all;
}

int cmd_gen_suite(const std::string& dir, std::ostream& out) {
  fs::create_directories(dir);
  int n = 0;
  for (const auto& [name, p] : suite_files()) {
    write_file((fs::path(dir) / (name + ".json")).string(), serialize_problem({p, {}}));
    ++n;
  }
  out << "wrote " << n << " problem files to " << dir << "\n";
  return kExitOk;
}

int cmd_gen_random(const std::vector<int>& dims, double kappa, int pieces, std::uint64_t seed,
                   const std::string& output, std::ostream& out) {
  if (dims.size() != 2) throw InputError("gen: --dims takes two sizes, nV,nE");
  CoupledProblem p = random_instance({dims[0], dims[1]}, kappa, pieces, seed);
  emit(serialize_problem({p, {}}), output, out);
  return kExitOk;
}

int cmd_bench(const std::string& dir, const SolveFlags& flags, bool timing, const std::string& output,
              std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  if (files.empty()) throw InputError(dir + ": no problem files");
  std::sort(files.begin(), files.end());
  std::ostringstream csv;
  csv << "instance,status,outer_iters,inner_iters_total,gap1,gap2,wall_time_s\n";
  for (const auto& f : files) {
    auto t0 = std::chrono::steady_clock::now();
    std::string name = f.stem().string(), status;
    int outer = 0, inner = 0;
    double g1 = NAN, g2 = NAN;
    try {
      const std::string bytes = read_file(f.string());
      ProblemFile pf = parse_problem(bytes);
      Solved s = solve_problem(pf, bytes, flags);
      status = s.file.status;
      outer = s.file.trace.outer_iterations;
      inner = s.file.trace.inner_iterations;
      g1 = s.file.gaps.gap1;
      g2 = s.file.gaps.gap2;
    } catch (const InputError&) {
      status = "input-error";
    } catch (const Error&) {
      status = "error";
    }
    double wall = timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", wall);
    csv << name << "," << status << "," << outer << "," << inner << "," << fmt(g1) << "," << fmt(g2) << "," << buf
        << "\n";
  }
  emit(csv.str(), output, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solver, certificate checker and hypothesis audit for coupled variational-hemivariational inequalities",
               "cvhi"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  std::string problem, result, output, dir;
  SolveFlags sflags;
  double grid = 1e-3;
  std::optional<double> accept_tol;
  std::uint64_t seed = 0;
  int samples = 1000;
  bool timing = false;
  std::vector<int> dims{1, 1};
  double kappa = 0.3;
  int pieces = 2;

  auto* solve = app.add_subcommand("solve", "solve a problem file and write a certified result");
  solve->add_option("problem", problem, "problem file")->required();
  add_solve_flags(solve, sflags);
  solve->add_option("--output,-o", output, "result file (default: standard output)");

  auto* verify = app.add_subcommand("verify", "recompute the gaps of a stored result");
  verify->add_option("problem", problem, "problem file")->required();
  verify->add_option("result", result, "result file")->required();

  auto* oracle = app.add_subcommand("oracle", "enumerate grid solutions and run the set probes");
  oracle->add_option("problem", problem, "problem file")->required();
  oracle->add_option("--grid", grid, "grid step")->check(CLI::PositiveNumber);
  oracle->add_option("--tol", accept_tol, "acceptance tolerance (default: Lipschitz estimate)");
  oracle->add_option("--seed", seed, "seed");
  oracle->add_option("--samples", samples, "hypothesis-audit samples")->check(CLI::PositiveNumber);
  oracle->add_option("--output,-o", output, "output file");

  auto* check = app.add_subcommand("check", "audit the hypotheses of a problem file");
  check->add_option("problem", problem, "problem file")->required();
  check->add_option("--seed", seed, "seed");
  check->add_option("--samples", samples, "samples")->check(CLI::PositiveNumber);
  check->add_option("--output,-o", output, "output file");

  auto* gen = app.add_subcommand("gen", "write the bundled suite or one random instance");
  auto* suite_opt = gen->add_option("--suite", dir, "write every bundled instance into this directory");
  gen->add_option("--dims", dims, "nV,nE")->delimiter(',')->excludes(suite_opt);
  gen->add_option("--kappa", kappa, "coupling strength in [0, 1)")->excludes(suite_opt);
  gen->add_option("--pieces", pieces, "max pieces of J and H")->excludes(suite_opt);
  gen->add_option("--seed", seed, "seed")->excludes(suite_opt);
  gen->add_option("--output,-o", output, "output file")->excludes(suite_opt);

  auto* bench = app.add_subcommand("bench", "solve every problem file of a directory, CSV summary");
  bench->add_option("dir", dir, "directory of problem files")->required();
  add_solve_flags(bench, sflags);
  bench->add_flag("--timing", timing, "record wall time (otherwise 0, so runs compare bytewise)");
  bench->add_option("--output,-o", output, "CSV file");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return cmd_solve(problem, sflags, output, out, err);
    if (*verify) return cmd_verify(problem, result, out, err);
    if (*oracle) return cmd_oracle(problem, grid, accept_tol, seed, samples, output, out, err);
    if (*check) return cmd_check(problem, seed, samples, output, out, err);
    if (*gen) {
      if (!dir.empty()) return cmd_gen_suite(dir, out);
      return cmd_gen_random(dims, kappa, pieces, seed, output, out);
    }
    if (*bench) return cmd_bench(dir, sflags, timing, output, out);
  } catch (const OuterNonConvergence& e) {
    err << e.what() << "\n";
    return kExitNonConverged;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace cvhi
