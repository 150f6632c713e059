#include "cvhi/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr const char* kProblemFormat = "cvhi-problem/1";
constexpr const char* kResultFormat = "cvhi-result/1";

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw InputError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Object view that remembers which keys were read, so leftovers can be
// reported as unknown fields.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  const json* opt(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& req(const std::string& key) {
    const json* v = opt(key);
    if (!v) fail(join(path_, key), "missing field");
    return *v;
  }
  std::string path(const std::string& key) const { return join(path_, key); }
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(join(path_, it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Constructor errors carry no location; prefix the path unless one is there.
[[noreturn]] void rethrow_with_path(const Error& e, const std::string& path) {
  const std::string msg = e.what();
  if (msg.rfind(path, 0) == 0) throw InputError(msg);
  fail(path, msg);
}

double read_num(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  fail(path, "expected a number");
}

int read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string read_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec read_vec(const json& j, int n, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  if (n >= 0 && static_cast<int>(j.size()) != n) {
    fail(path, "expected length " + std::to_string(n) + ", got " + std::to_string(j.size()));
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_num(j[i], at(path, i));
  return v;
}

// Rows of numbers, or the keywords "identity" (square only) and "zero".
Mat read_mat(const json& j, int rows, int cols, const std::string& path, const std::string& shape = "") {
  const std::string want = shape.empty() ? std::to_string(rows) + "x" + std::to_string(cols) : shape;
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "zero") return Mat::Zero(rows, cols);
    if (s == "identity") {
      if (rows != cols) fail(path, "expected " + want + " matrix, got a square identity");
      return Mat::Identity(rows, cols);
    }
    fail(path, "expected a matrix, \"identity\" or \"zero\"");
  }
  if (!j.is_array()) fail(path, "expected an array of rows");
  const int r = static_cast<int>(j.size());
  int c = -1;
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) fail(at(path, i), "expected an array of numbers");
    if (c < 0) c = static_cast<int>(j[i].size());
    if (static_cast<int>(j[i].size()) != c) fail(at(path, i), "ragged matrix");
  }
  if (r != rows || c != cols) {
    fail(path, "expected " + want + " matrix, got " + std::to_string(r) + "x" + std::to_string(std::max(c, 0)));
  }
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = read_num(j[i][k], at(at(path, i), k));
  }
  return m;
}

std::string read_type(Obj& o) { return read_str(o.req("type"), o.path("type")); }

ConvexSet read_set(const json& j, int n, const std::string& path) {
  Obj o(j, path);
  const std::string type = read_type(o);
  std::optional<ConvexSet> s;
  try {
    if (type == "box") {
      Vec lo = read_vec(o.req("lo"), n, o.path("lo")), hi = read_vec(o.req("hi"), n, o.path("hi"));
      s = ConvexSet::box(lo, hi);
    } else if (type == "ball") {
      Vec c = read_vec(o.req("center"), n, o.path("center"));
      s = ConvexSet::ball(c, read_num(o.req("radius"), o.path("radius")));
    } else if (type == "polytope") {
      const json& b = o.req("b");
      if (!b.is_array()) fail(o.path("b"), "expected an array of numbers");
      const int m = static_cast<int>(b.size());
      Mat A = read_mat(o.req("A"), m, n, o.path("A"));
      s = ConvexSet::polytope(A, read_vec(b, m, o.path("b")));
    } else if (type == "whole") {
      s = ConvexSet::whole(n);
    } else {
      fail(o.path("type"), "unknown set type '" + type + "'");
    }
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
  o.done();
  return *s;
}

ConvexTerm read_term(const json& j, int n, const std::string& path) {
  Obj o(j, path);
  const std::string type = read_type(o);
  ConvexTerm t = ZeroTerm{};
  if (type == "quadratic") {
    QuadraticTerm q;
    q.Q = read_mat(o.req("Q"), n, n, o.path("Q"));
    const json* lin = o.opt("q");
    q.q = lin ? read_vec(*lin, n, o.path("q")) : Vec::Zero(n);
    const json* c = o.opt("c");
    q.c = c ? read_num(*c, o.path("c")) : 0.0;
    t = q;
  } else if (type == "l1") {
    t = WeightedL1Term{read_num(o.req("weight"), o.path("weight"))};
  } else if (type == "l2norm") {
    t = NormL2Term{read_num(o.req("weight"), o.path("weight"))};
  } else if (type == "indicator") {
    t = IndicatorTerm{read_set(o.req("set"), n, o.path("set"))};
  } else if (type != "zero") {
    fail(o.path("type"), "unknown term type '" + type + "'");
  }
  o.done();
  return t;
}

ConvexExtendedFunction read_function(const json* j, int n, const std::string& path) {
  if (!j) return ConvexExtendedFunction::zero(n);
  Obj o(*j, path);
  std::vector<ConvexTerm> terms;
  const json& arr = o.req("terms");
  if (!arr.is_array()) fail(o.path("terms"), "expected an array");
  for (size_t i = 0; i < arr.size(); ++i) terms.push_back(read_term(arr[i], n, at(o.path("terms"), i)));
  o.done();
  try {
    return ConvexExtendedFunction(n, std::move(terms));
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

SmoothPiece read_piece(const json& j, int nz, int nx, const std::string& path) {
  Obj o(j, path);
  const std::string type = read_type(o);
  SmoothPiece p;
  if (type == "quadratic") {
    p.quadratic = true;
    p.S = read_mat(o.req("S"), nx, nx, o.path("S"));
    const json* W = o.opt("W");
    p.W = W ? read_mat(*W, nx, nz, o.path("W")) : Mat::Zero(nx, nz);
  } else if (type != "affine") {
    fail(o.path("type"), "unknown piece type '" + type + "'");
  }
  p.g_x = read_vec(o.req("g_x"), nx, o.path("g_x"));
  const json* gp = o.opt("g_p");
  p.g_p = gp ? read_vec(*gp, nz, o.path("g_p")) : Vec::Zero(nz);
  const json* b = o.opt("b");
  p.b = b ? read_num(*b, o.path("b")) : 0.0;
  o.done();
  return p;
}

MaxSmoothBifunction read_bifunction(const json* j, int nz, int nx, const std::string& path) {
  if (!j) return MaxSmoothBifunction::zero(nz, nx);
  Obj o(*j, path);
  const json& arr = o.req("pieces");
  if (!arr.is_array()) fail(o.path("pieces"), "expected an array");
  std::vector<SmoothPiece> pieces;
  for (size_t i = 0; i < arr.size(); ++i) pieces.push_back(read_piece(arr[i], nz, nx, at(o.path("pieces"), i)));
  o.done();
  if (pieces.empty()) return MaxSmoothBifunction::zero(nz, nx);
  try {
    return MaxSmoothBifunction(nz, nx, std::move(pieces));
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

OperatorPart read_part(const json& j, int nz, int n, const std::string& path) {
  Obj o(j, path);
  const std::string type = read_type(o);
  auto coupling = [&] {
    const json* K = o.opt("K");
    return K ? read_mat(*K, n, nz, o.path("K")) : Mat(Mat::Zero(n, nz));
  };
  auto offset = [&] {
    const json* a = o.opt("a");
    return a ? read_vec(*a, n, o.path("a")) : Vec(Vec::Zero(n));
  };
  OperatorPart part = AffineOperator{};
  if (type == "affine") {
    AffineOperator a;
    a.P = read_mat(o.req("P"), n, n, o.path("P"));
    a.K = coupling();
    a.a = offset();
    part = a;
  } else if (type == "zero") {
    part = AffineOperator{Mat::Zero(n, n), Mat::Zero(n, nz), Vec::Zero(n)};
  } else if (type == "gradient") {
    MonotoneGradientOperator g;
    Obj pot(o.req("potential"), o.path("potential"));
    const std::string kind = read_type(pot);
    const json* c = pot.opt("c");
    const double cv = c ? read_num(*c, pot.path("c")) : 1.0;
    if (kind == "power") {
      const json* q = pot.opt("q");
      g.potential = PowerPotential{cv, q ? read_num(*q, pot.path("q")) : 2.0};
    } else if (kind == "softplus") {
      g.potential = SoftplusPotential{cv};
    } else {
      fail(pot.path("type"), "unknown potential '" + kind + "'");
    }
    pot.done();
    g.K = coupling();
    g.a = offset();
    part = g;
  } else if (type == "composite") {
    CompositeOperator comp;
    const json& arr = o.req("parts");
    if (!arr.is_array() || arr.empty()) fail(o.path("parts"), "expected a nonempty array");
    for (size_t i = 0; i < arr.size(); ++i) comp.parts.push_back(read_part(arr[i], nz, n, at(o.path("parts"), i)));
    part = comp;
  } else {
    fail(o.path("type"), "unknown operator type '" + type + "'");
  }
  o.done();
  return part;
}

CoupledOperator read_operator(const json& j, int nz, int n, const std::string& path) {
  OperatorPart part = read_part(j, nz, n, path);
  try {
    return CoupledOperator(nz, n, std::move(part));
  } catch (const Error& e) {
    rethrow_with_path(e, path);
  }
}

LinearMap read_map(const json* j, int rows, int cols, const std::string& path, const std::string& shape,
                   bool default_identity) {
  if (!j) return default_identity && rows == cols ? LinearMap::identity(rows) : LinearMap::zero(rows, cols);
  // "identity" is the identity of the domain, so a non-square layout reports the shape mismatch.
  if (j->is_string() && j->get_ref<const std::string&>() == "identity") {
    if (rows != cols) fail(path, "expected " + shape + " matrix, got " + std::to_string(cols) + "x" + std::to_string(cols));
    return LinearMap::identity(rows);
  }
  return LinearMap(read_mat(*j, rows, cols, path, shape));
}

CoercivityProfile read_profile(const json& j, const std::string& path) {
  Obj o(j, path);
  const std::string type = read_type(o);
  CoercivityProfile out = LinearProfile{};
  if (type == "linear") {
    LinearProfile p{read_num(o.req("a"), o.path("a")), read_num(o.req("b"), o.path("b")),
                    read_num(o.req("c"), o.path("c"))};
    if (!(p.slope > 0.0)) fail(o.path("a"), "must be positive");
    if (p.coupling < 0.0) fail(o.path("b"), "must be nonnegative");
    if (p.offset < 0.0) fail(o.path("c"), "must be nonnegative");
    out = p;
  } else if (type == "table") {
    TableProfile t;
    Vec tv = read_vec(o.req("t"), -1, o.path("t")), sv = read_vec(o.req("s"), -1, o.path("s"));
    t.t.assign(tv.begin(), tv.end());
    t.s.assign(sv.begin(), sv.end());
    Mat r = read_mat(o.req("r"), static_cast<int>(tv.size()), static_cast<int>(sv.size()), o.path("r"));
    for (int i = 0; i < r.rows(); ++i) t.r.emplace_back(r.row(i).begin(), r.row(i).end());
    if (t.t.empty() || t.s.empty()) fail(path, "empty table");
    out = t;
  } else {
    fail(o.path("type"), "unknown profile type '" + type + "'");
  }
  o.done();
  return out;
}

std::string line_col(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the position one past the offending character.
  return std::to_string(line) + ":" + std::to_string(col > 1 ? col - 1 : col);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    auto pos = msg.find("syntax error");
    throw InputError("syntax error at line:column " + line_col(text, e.byte) + ": " +
                     (pos == std::string::npos ? msg : msg.substr(pos)));
  }
}

// ---- writing ----

ojson num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

ojson vec(const Vec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

ojson mat(const Mat& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

ojson map_json(const LinearMap& m) {
  if (m.rows() == m.cols() && m.matrix() == Mat::Identity(m.rows(), m.cols())) return "identity";
  return mat(m.matrix());
}

ojson set_json(const ConvexSet& s) {
  return std::visit(
      [](const auto& sh) -> ojson {
        using T = std::decay_t<decltype(sh)>;
        ojson o;
        if constexpr (std::is_same_v<T, Box>) {
          o["type"] = "box";
          o["lo"] = vec(sh.lo);
          o["hi"] = vec(sh.hi);
        } else if constexpr (std::is_same_v<T, Ball>) {
          o["type"] = "ball";
          o["center"] = vec(sh.center);
          o["radius"] = num(sh.radius);
        } else if constexpr (std::is_same_v<T, Polytope>) {
          o["type"] = "polytope";
          o["A"] = mat(sh.A);
          o["b"] = vec(sh.b);
        } else {
          o["type"] = "whole";
        }
        return o;
      },
      s.shape());
}

ojson function_json(const ConvexExtendedFunction& f) {
  ojson terms = ojson::array();
  for (const auto& t : f.terms()) {
    terms.push_back(std::visit(
        [](const auto& x) -> ojson {
          using T = std::decay_t<decltype(x)>;
          ojson o;
          if constexpr (std::is_same_v<T, QuadraticTerm>) {
            o["type"] = "quadratic";
            o["Q"] = mat(x.Q);
            o["q"] = vec(x.q);
            o["c"] = num(x.c);
          } else if constexpr (std::is_same_v<T, WeightedL1Term>) {
            o["type"] = "l1";
            o["weight"] = num(x.weight);
          } else if constexpr (std::is_same_v<T, NormL2Term>) {
            o["type"] = "l2norm";
            o["weight"] = num(x.weight);
          } else if constexpr (std::is_same_v<T, IndicatorTerm>) {
            o["type"] = "indicator";
            o["set"] = set_json(x.set);
          } else {
            o["type"] = "zero";
          }
          return o;
        },
        t));
  }
  ojson o;
  o["terms"] = terms;
  return o;
}

ojson bifunction_json(const MaxSmoothBifunction& J) {
  ojson pieces = ojson::array();
  if (!J.is_zero()) {
    for (const auto& p : J.pieces()) {
      ojson o;
      o["type"] = p.quadratic ? "quadratic" : "affine";
      if (p.quadratic) {
        o["S"] = mat(p.S);
        o["W"] = mat(p.W);
      }
      o["g_x"] = vec(p.g_x);
      o["g_p"] = vec(p.g_p);
      o["b"] = num(p.b);
      pieces.push_back(o);
    }
  }
  ojson o;
  o["pieces"] = pieces;
  return o;
}

ojson part_json(const OperatorPart& part) {
  return std::visit(
      [](const auto& x) -> ojson {
        using T = std::decay_t<decltype(x)>;
        ojson o;
        if constexpr (std::is_same_v<T, AffineOperator>) {
          o["type"] = "affine";
          o["P"] = mat(x.P);
          o["K"] = mat(x.K);
          o["a"] = vec(x.a);
        } else if constexpr (std::is_same_v<T, MonotoneGradientOperator>) {
          o["type"] = "gradient";
          ojson pot;
          if (const auto* pw = std::get_if<PowerPotential>(&x.potential)) {
            pot["type"] = "power";
            pot["c"] = num(pw->c);
            pot["q"] = num(pw->q);
          } else {
            pot["type"] = "softplus";
            pot["c"] = num(std::get<SoftplusPotential>(x.potential).c);
          }
          o["potential"] = pot;
          o["K"] = mat(x.K);
          o["a"] = vec(x.a);
        } else {
          o["type"] = "composite";
          ojson parts = ojson::array();
          for (const auto& p : x.parts) parts.push_back(part_json(p));
          o["parts"] = parts;
        }
        return o;
      },
      part);
}

ojson profile_json(const CoercivityProfile& p) {
  ojson o;
  if (const auto* lp = std::get_if<LinearProfile>(&p)) {
    o["type"] = "linear";
    o["a"] = num(lp->slope);
    o["b"] = num(lp->coupling);
    o["c"] = num(lp->offset);
  } else {
    const auto& t = std::get<TableProfile>(p);
    o["type"] = "table";
    o["t"] = vec(Eigen::Map<const Vec>(t.t.data(), static_cast<Eigen::Index>(t.t.size())));
    o["s"] = vec(Eigen::Map<const Vec>(t.s.data(), static_cast<Eigen::Index>(t.s.size())));
    ojson r = ojson::array();
    for (const auto& row : t.r) r.push_back(vec(Eigen::Map<const Vec>(row.data(), static_cast<Eigen::Index>(row.size()))));
    o["r"] = r;
  }
  return o;
}

ojson opt_num(const std::optional<double>& x) { return x ? num(*x) : ojson(nullptr); }

std::optional<double> read_opt_num(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  return read_num(j, path);
}

}  // namespace

std::string tool_version() { return "cvhi 1.0.0"; }

ProblemFile parse_problem(const std::string& text) {
  const json root = parse_json(text);
  Obj o(root, "");
  const std::string format = read_str(o.req("format"), "format");
  if (format != kProblemFormat) fail("format", "expected \"" + std::string(kProblemFormat) + "\", got \"" + format + "\"");

  ProblemFile file;
  CoupledProblem& p = file.problem;
  {
    Obj L(o.req("layout"), "layout");
    auto dim = [&](const char* k) {
      int n = read_int(L.req(k), L.path(k));
      if (n < 1) fail(L.path(k), "must be at least 1");
      return n;
    };
    p.layout = {dim("nV"), dim("nE"), dim("nX"), dim("nY"), dim("nZ1"), dim("nZ2")};
    L.done();
  }
  const SpaceLayout& L = p.layout;
  if (const json* k = o.opt("kind")) {
    try {
      p.kind = special_case_from_string(read_str(*k, "kind"));
    } catch (const InputError& e) {
      fail("kind", e.what());
    }
  }
  p.A = read_operator(o.req("A"), L.nE, L.nV, "A");
  p.B = read_operator(o.req("B"), L.nV, L.nE, "B");
  p.J = read_bifunction(o.opt("J"), L.nZ1, L.nX, "J");
  p.H = read_bifunction(o.opt("H"), L.nZ2, L.nY, "H");
  p.psi = read_function(o.opt("psi"), L.nV, "psi");
  p.theta = read_function(o.opt("theta"), L.nE, "theta");
  p.C = read_set(o.req("C"), L.nV, "C");
  p.D = read_set(o.req("D"), L.nE, "D");
  p.gamma1 = read_map(o.opt("gamma1"), L.nX, L.nV, "gamma1", "nX×nV", true);
  p.gamma2 = read_map(o.opt("gamma2"), L.nY, L.nE, "gamma2", "nY×nE", true);
  p.delta1 = read_map(o.opt("delta1"), L.nZ1, L.nE, "delta1", "nZ1×nE", false);
  p.delta2 = read_map(o.opt("delta2"), L.nZ2, L.nV, "delta2", "nZ2×nV", false);
  p.h = read_vec(o.req("h"), L.nV, "h");
  p.l = read_vec(o.req("l"), L.nE, "l");
  if (const json* a = o.opt("anchors")) {
    Obj ao(*a, "anchors");
    if (const json* u0 = ao.opt("u0")) p.u0 = read_vec(*u0, L.nV, "anchors.u0");
    if (const json* w0 = ao.opt("w0")) p.w0 = read_vec(*w0, L.nE, "anchors.w0");
    ao.done();
  }
  if (const json* r = o.opt("profiles")) {
    Obj ro(*r, "profiles");
    if (const json* a = ro.opt("A")) p.rA = read_profile(*a, "profiles.A");
    if (const json* b = ro.opt("B")) p.rB = read_profile(*b, "profiles.B");
    ro.done();
  }
  if (const json* m = o.opt("meta")) {
    Obj mo(*m, "meta");
    if (const json* n = mo.opt("name")) p.meta.name = read_str(*n, "meta.name");
    if (const json* d = mo.opt("description")) p.meta.description = read_str(*d, "meta.description");
    if (const json* e = mo.opt("expect_audit")) p.meta.expect_audit_pass = read_bool(*e, "meta.expect_audit");
    if (const json* ref = mo.opt("reference")) {
      Obj so(*ref, "meta.reference");
      Vec u = read_vec(so.req("u"), L.nV, "meta.reference.u");
      Vec w = read_vec(so.req("w"), L.nE, "meta.reference.w");
      so.done();
      p.meta.reference = std::make_pair(u, w);
    }
    mo.done();
  }
  if (const json* s = o.opt("solver")) {
    Obj so(*s, "solver");
    if (const json* t = so.opt("tol")) file.solver.tol = read_num(*t, "solver.tol");
    if (const json* d = so.opt("damping")) file.solver.damping = read_num(*d, "solver.damping");
    if (const json* m = so.opt("max_outer")) file.solver.max_outer = read_int(*m, "solver.max_outer");
    if (const json* sd = so.opt("seed")) {
      if (!sd->is_number_unsigned()) fail("solver.seed", "expected a nonnegative integer");
      file.solver.seed = sd->get<std::uint64_t>();
    }
    so.done();
  }
  o.done();
  p.validate();
  return file;
}

std::string serialize_problem(const ProblemFile& file) {
  const CoupledProblem& p = file.problem;
  ojson o;
  o["format"] = kProblemFormat;
  o["kind"] = to_string(p.kind);
  const auto& L = p.layout;
  o["layout"] = {{"nV", L.nV}, {"nE", L.nE}, {"nX", L.nX}, {"nY", L.nY}, {"nZ1", L.nZ1}, {"nZ2", L.nZ2}};
  o["A"] = part_json(p.A.part());
  o["B"] = part_json(p.B.part());
  o["J"] = bifunction_json(p.J);
  o["H"] = bifunction_json(p.H);
  o["psi"] = function_json(p.psi);
  o["theta"] = function_json(p.theta);
  o["C"] = set_json(p.C);
  o["D"] = set_json(p.D);
  o["gamma1"] = map_json(p.gamma1);
  o["gamma2"] = map_json(p.gamma2);
  o["delta1"] = map_json(p.delta1);
  o["delta2"] = map_json(p.delta2);
  o["h"] = vec(p.h);
  o["l"] = vec(p.l);
  if (p.u0 || p.w0) {
    ojson a = ojson::object();
    if (p.u0) a["u0"] = vec(*p.u0);
    if (p.w0) a["w0"] = vec(*p.w0);
    o["anchors"] = a;
  }
  if (p.rA || p.rB) {
    ojson r = ojson::object();
    if (p.rA) r["A"] = profile_json(*p.rA);
    if (p.rB) r["B"] = profile_json(*p.rB);
    o["profiles"] = r;
  }
  ojson m = ojson::object();
  m["name"] = p.meta.name;
  m["description"] = p.meta.description;
  if (p.meta.expect_audit_pass) m["expect_audit"] = *p.meta.expect_audit_pass;
  if (p.meta.reference) m["reference"] = {{"u", vec(p.meta.reference->first)}, {"w", vec(p.meta.reference->second)}};
  o["meta"] = m;
  const auto& s = file.solver;
  if (s.tol || s.damping || s.max_outer || s.seed) {
    ojson so = ojson::object();
    if (s.tol) so["tol"] = num(*s.tol);
    if (s.damping) so["damping"] = num(*s.damping);
    if (s.max_outer) so["max_outer"] = *s.max_outer;
    if (s.seed) so["seed"] = *s.seed;
    o["solver"] = so;
  }
  return o.dump(2) + "\n";
}

ProblemFile load_problem(const std::string& path) { return parse_problem(read_file(path)); }

std::string serialize_result(const ResultFile& r) {
  ojson o;
  o["format"] = kResultFormat;
  o["tool_version"] = r.tool_version;
  o["input_digest"] = r.input_digest;
  o["problem"] = r.problem_name;
  o["status"] = r.status;
  o["seed"] = r.seed;
  o["u"] = vec(r.u);
  o["w"] = vec(r.w);
  const auto& g = r.gaps;
  o["gaps"] = {{"gap1", num(g.gap1)},         {"gap2", num(g.gap2)},       {"minty1", num(g.minty1)},
               {"minty2", num(g.minty2)},     {"tol_cert", num(g.tol_cert)}, {"certified", g.certified},
               {"minty_heuristic", g.minty_heuristic}};
  o["trace"] = {{"outer_iterations", r.trace.outer_iterations},
                {"inner_iterations", r.trace.inner_iterations},
                {"damping", num(r.trace.damping)},
                {"retried", r.trace.retried},
                {"diagnostics", r.trace.diagnostics}};
  ojson st = ojson::array();
  for (const auto& s : r.hypotheses.statuses) st.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
  o["hypotheses"] = {{"passed", r.hypotheses.passed},
                     {"R_solution", opt_num(r.hypotheses.R_solution)},
                     {"m0", opt_num(r.hypotheses.m0)},
                     {"statuses", st}};
  return o.dump(2) + "\n";
}

ResultFile parse_result(const std::string& text) {
  const json root = parse_json(text);
  Obj o(root, "");
  const std::string format = read_str(o.req("format"), "format");
  if (format != kResultFormat) fail("format", "expected \"" + std::string(kResultFormat) + "\", got \"" + format + "\"");
  ResultFile r;
  r.tool_version = read_str(o.req("tool_version"), "tool_version");
  r.input_digest = read_str(o.req("input_digest"), "input_digest");
  r.problem_name = read_str(o.req("problem"), "problem");
  r.status = read_str(o.req("status"), "status");
  if (r.status != "certified" && r.status != "nonconverged") fail("status", "expected certified or nonconverged");
  const json& seed = o.req("seed");
  if (!seed.is_number_unsigned()) fail("seed", "expected a nonnegative integer");
  r.seed = seed.get<std::uint64_t>();
  r.u = read_vec(o.req("u"), -1, "u");
  r.w = read_vec(o.req("w"), -1, "w");
  {
    Obj g(o.req("gaps"), "gaps");
    r.gaps.gap1 = read_num(g.req("gap1"), "gaps.gap1");
    r.gaps.gap2 = read_num(g.req("gap2"), "gaps.gap2");
    r.gaps.minty1 = read_num(g.req("minty1"), "gaps.minty1");
    r.gaps.minty2 = read_num(g.req("minty2"), "gaps.minty2");
    r.gaps.tol_cert = read_num(g.req("tol_cert"), "gaps.tol_cert");
    r.gaps.certified = read_bool(g.req("certified"), "gaps.certified");
    r.gaps.minty_heuristic = read_bool(g.req("minty_heuristic"), "gaps.minty_heuristic");
    g.done();
  }
  {
    Obj t(o.req("trace"), "trace");
    r.trace.outer_iterations = read_int(t.req("outer_iterations"), "trace.outer_iterations");
    r.trace.inner_iterations = read_int(t.req("inner_iterations"), "trace.inner_iterations");
    r.trace.damping = read_num(t.req("damping"), "trace.damping");
    r.trace.retried = read_bool(t.req("retried"), "trace.retried");
    const json& d = t.req("diagnostics");
    if (!d.is_array()) fail("trace.diagnostics", "expected an array");
    for (size_t i = 0; i < d.size(); ++i) r.trace.diagnostics.push_back(read_str(d[i], at("trace.diagnostics", i)));
    t.done();
  }
  {
    Obj h(o.req("hypotheses"), "hypotheses");
    r.hypotheses.passed = read_bool(h.req("passed"), "hypotheses.passed");
    r.hypotheses.R_solution = read_opt_num(h.req("R_solution"), "hypotheses.R_solution");
    r.hypotheses.m0 = read_opt_num(h.req("m0"), "hypotheses.m0");
    const json& st = h.req("statuses");
    if (!st.is_array()) fail("hypotheses.statuses", "expected an array");
    for (size_t i = 0; i < st.size(); ++i) {
      const std::string path = at("hypotheses.statuses", i);
      Obj so(st[i], path);
      HypothesisStatus s{read_str(so.req("name"), path + ".name"), read_str(so.req("status"), path + ".status"),
                         read_str(so.req("detail"), path + ".detail")};
      so.done();
      r.hypotheses.statuses.push_back(s);
    }
    h.done();
  }
  o.done();
  return r;
}

std::string serialize_report(const HypothesisReport& rep) {
  auto growth = [](const GrowthConstant& g) { return ojson{{"value", num(g.value)}, {"provenance", g.provenance}}; };
  auto probe = [](const CoercivityProbe& p) {
    return ojson{{"regime", p.regime}, {"t", num(p.t)},           {"s", num(p.s)}, {"claimed", num(p.claimed)},
                 {"observed", num(p.observed)}, {"x", vec(p.x)}, {"p", vec(p.p)}};
  };
  auto profile = [&](const ProfileAudit& a) {
    ojson o = {{"declared", a.declared},
               {"linear", a.linear},
               {"pointwise", a.pointwise},
               {"trend_consistent", a.trend_consistent},
               {"weak_margin", a.weak_margin},
               {"coupling_dominated", a.coupling_dominated},
               {"probes", a.probes.size()}};
    o["witness"] = a.witness ? probe(*a.witness) : ojson(nullptr);
    o["trend_witness"] =
        a.trend_witness ? ojson::array({probe(a.trend_witness->first), probe(a.trend_witness->second)}) : ojson(nullptr);
    return o;
  };
  auto pseudo = [](const PseudoVerdict& v) {
    ojson o = {{"kind", v.kind}, {"samples", v.samples}};
    if (v.witness) {
      const auto& w = *v.witness;
      o["witness"] = {{"u", vec(w.u)},          {"v", vec(w.v)},
                      {"other", vec(w.other)},  {"shift", w.shift},
                      {"premise", num(w.premise)}, {"conclusion", num(w.conclusion)}};
    } else {
      o["witness"] = nullptr;
    }
    return o;
  };
  ojson o;
  o["passed"] = rep.passed;
  o["samples"] = rep.samples;
  o["seed"] = rep.seed;
  ojson st = ojson::array();
  for (const auto& s : rep.statuses) st.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
  o["statuses"] = st;
  o["constants"] = {{"bA", growth(rep.bA)},
                    {"bB", growth(rep.bB)},
                    {"cJ", growth(rep.cJ)},
                    {"cH", growth(rep.cH)},
                    {"alpha_psi", num(rep.alpha_psi)},
                    {"beta_psi", num(rep.beta_psi)},
                    {"alpha_theta", num(rep.alpha_theta)},
                    {"beta_theta", num(rep.beta_theta)}};
  o["coercivity"] = {{"A", profile(rep.coercA)}, {"B", profile(rep.coercB)}};
  o["pseudomonotonicity"] = {{"A", pseudo(rep.pseudoA)}, {"B", pseudo(rep.pseudoB)}};
  o["R_solution"] = opt_num(rep.R_solution);
  o["m0"] = opt_num(rep.m0);
  o["bound_note"] = rep.bound_note;
  return o.dump(2) + "\n";
}

std::string serialize_oracle(const OracleResult& res, const ProbeSummary* probes, const OracleOptions& opts) {
  ojson o;
  o["grid"] = {{"grid_step", num(res.grid_step)},
               {"accept_tol", num(res.accept_tol)},
               {"accept_tol_source", opts.accept_tol ? "explicit" : "lipschitz"},
               {"lipschitz", num(res.lipschitz)},
               {"region_lo", vec(res.region_lo)},
               {"region_hi", vec(res.region_hi)},
               {"levels", res.levels},
               {"seed", opts.seed}};
  o["evaluated_cells"] = res.evaluated_cells;
  o["nonempty"] = res.nonempty;
  o["min_joint_gap"] = num(res.min_joint_gap);
  o["enclosing_radius"] = num(res.enclosing_radius);
  o["accepted_count"] = res.accepted.size();
  ojson pts = ojson::array();
  for (size_t i = 0; i < res.accepted.size(); ++i) {
    const auto& q = res.accepted[i];
    pts.push_back(
        {{"node", res.accepted_nodes[i]}, {"u", vec(q.u)}, {"w", vec(q.w)}, {"gap1", num(q.gap1)}, {"gap2", num(q.gap2)}});
  }
  o["accepted"] = pts;
  if (probes) {
    auto pr = [](const ProbeOutcome& p) { return ojson{{"status", p.status}, {"detail", p.detail}}; };
    o["probes"] = {{"nonempty", pr(probes->nonempty)}, {"bounded", pr(probes->bounded)}, {"closed", pr(probes->closed)}};
  }
  return o.dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot write file");
  out << text;
  if (!out) throw InputError(path + ": write failed");
}

}  // namespace cvhi
