#include "cvhi/instances.hpp"

#include <random>

#include "cvhi/errors.hpp"

namespace cvhi {

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Mat mat(int rows, int cols, std::initializer_list<double> xs) {
  Mat m(rows, cols);
  auto it = xs.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

CoupledOperator affine(const Mat& P, const Mat& K) { return CoupledOperator::affine(P, K, Vec::Zero(P.rows())); }

SmoothPiece piece(const Vec& g_x, const Vec& g_p, double b = 0.0) {
  SmoothPiece s;
  s.g_x = g_x;
  s.g_p = g_p;
  s.b = b;
  return s;
}

ConvexSet interval(double lo, double hi) { return ConvexSet::box(vec({lo}), vec({hi})); }

CoupledProblem finish(CoupledProblem p, std::string name, std::string description, bool expect_pass,
                      std::optional<std::pair<Vec, Vec>> reference = std::nullopt) {
  p.meta.name = std::move(name);
  p.meta.description = std::move(description);
  p.meta.expect_audit_pass = expect_pass;
  p.meta.reference = std::move(reference);
  p.validate();
  return p;
}

SpecialCaseParts parts_1d() {
  SpecialCaseParts s;
  s.layout = {1, 1, 1, 1, 1, 1};
  return s;
}

CoupledProblem coupled_box(double h, const char* name) {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.5}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {0.5}));
  s.C = interval(-1, 1);
  s.D = interval(-1, 1);
  s.h = vec({h});
  auto p = make_special_case(SpecialCase::III, s);
  p.rA = LinearProfile{1.0, 0.5, 0.0};
  p.rB = LinearProfile{1.0, 0.5, 0.0};
  return finish(std::move(p), name, "A = u + 0.5w, B = w + 0.5u on [-1, 1]^2", true,
                std::pair{vec({h == 0.0 ? 0.0 : 1.0}), vec({h == 0.0 ? 0.0 : -0.5})});
}

CoupledProblem decoupled() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.0}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {0.0}));
  s.C = interval(0, 2);
  s.D = interval(0, 1);
  s.h = vec({3.0});
  s.l = vec({-1.0});
  auto p = make_special_case(SpecialCase::III, s);
  p.rA = LinearProfile{1.0, 0.0, 0.0};
  p.rB = LinearProfile{1.0, 0.0, 0.0};
  return finish(std::move(p), "decoupled_1d", "A = u on [0, 2] with h = 3, B = w on [0, 1] with l = -1", true,
                std::pair{vec({2.0}), vec({0.0})});
}

CoupledProblem hemi_abs() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.0}));
  s.B = CoupledOperator::zero(1, 1);
  s.J = MaxSmoothBifunction(1, 1, {piece(vec({1.0}), vec({0.0})), piece(vec({-1.0}), vec({0.0}))});
  s.C = interval(-1, 1);
  s.D = interval(0, 0);
  s.h = vec({1.5});
  auto p = make_special_case(SpecialCase::VII, s);
  p.rA = LinearProfile{1.0, 0.0, 1.0};
  // B = 0 admits no coercivity profile, so the audit cannot pass.
  return finish(std::move(p), "hemi_abs_1d", "single inequality u + d|u| = 1.5 on [-1, 1]", false,
                std::pair{vec({0.5}), vec({0.0})});
}

CoupledProblem kink_coupled() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.2}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {-0.2}));
  s.J = MaxSmoothBifunction(1, 1, {piece(vec({2.0}), vec({0.5}), 1.0), piece(vec({-1.0}), vec({0.0}), 1.0)});
  s.delta1 = LinearMap::identity(1);
  s.C = interval(-1, 1);
  s.D = interval(-1, 1);
  s.h = vec({0.5});
  s.l = vec({0.3});
  auto p = make_special_case(SpecialCase::II, s);
  p.rA = LinearProfile{1.0, 0.2, 2.0};
  p.rB = LinearProfile{1.0, 0.2, 0.0};
  return finish(std::move(p), "kink_coupled_1d", "solution at the kink of J(w, u) = max(2u + 1 + 0.5w, 1 - u)", true,
                std::pair{vec({-0.048387096774193547}), vec({0.29032258064516125})});
}

CoupledProblem polytope() {
  SpecialCaseParts s;
  s.layout = {2, 1, 2, 1, 1, 2};
  s.A = affine(Mat::Identity(2, 2), mat(2, 1, {0.2, 0.1}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 2, {-0.1, -0.1}));
  s.C = ConvexSet::polytope(mat(3, 2, {1, 1, -1, 0, 0, -1}), vec({1, 0, 0}));
  s.D = interval(-1, 1);
  s.h = vec({1.0, 1.0});
  s.l = vec({0.5});
  auto p = make_special_case(SpecialCase::III, s);
  p.rA = LinearProfile{1.0, 0.25, 0.0};
  p.rB = LinearProfile{1.0, 0.15, 0.0};
  return finish(std::move(p), "polytope_2d", "projection onto the simplex-like polytope coupled to a scalar", true,
                std::pair{vec({0.47, 0.53}), vec({0.6})});
}

CoupledProblem equations() {
  SpecialCaseParts s;
  s.layout = {2, 1, 2, 1, 1, 2};
  s.A = affine(mat(2, 2, {2.0, 0.5, 0.5, 1.0}), mat(2, 1, {0.3, 0.1}));
  s.B = affine(mat(1, 1, {1.5}), mat(1, 2, {0.2, -0.1}));
  s.h = vec({1.0, -1.0});
  s.l = vec({0.4});
  auto p = make_special_case(SpecialCase::V, s);
  p.rA = LinearProfile{0.79, 0.32, 0.0};
  p.rB = LinearProfile{1.5, 0.23, 0.0};
  return finish(std::move(p), "equations_2d", "three coupled linear equations", true,
                std::pair{vec({0.8488372093023255, -1.4302325581395348}), vec({0.058139534883720936})});
}

CoupledProblem equation_constraint() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.3}));
  s.B = affine(mat(1, 1, {2.0}), mat(1, 1, {-1.0}));
  s.J = MaxSmoothBifunction(1, 1, {piece(vec({0.0}), vec({0.0})), piece(vec({1.0}), vec({-0.5}))});
  s.delta1 = LinearMap::identity(1);
  s.psi = ConvexExtendedFunction(1, {WeightedL1Term{0.2}});
  s.C = interval(0, 2);
  s.h = vec({1.5});
  s.l = vec({0.2});
  auto p = make_special_case(SpecialCase::IV, s);
  p.rA = LinearProfile{1.0, 0.3, 1.0};
  p.rB = LinearProfile{2.0, 1.0, 0.0};
  return finish(std::move(p), "equation_constraint_1d", "inequality on [0, 2] constrained by 2w - u = 0.2", true,
                std::pair{vec({0.2347826086956522}), vec({0.2173913043478261})});
}

CoupledProblem hemi_2x1() {
  SpecialCaseParts s;
  s.layout = {2, 1, 2, 1, 1, 2};
  s.A = affine(2.0 * Mat::Identity(2, 2), mat(2, 1, {0.3, -0.2}));
  s.B = affine(mat(1, 1, {1.5}), mat(1, 2, {-0.2, 0.0}));
  SmoothPiece concave;
  concave.quadratic = true;
  concave.S = mat(2, 2, {-0.5, 0.0, 0.0, 0.0});
  concave.W = Mat::Zero(2, 1);
  concave.g_x = vec({0.0, 0.5});
  concave.g_p = vec({0.2});
  s.J = MaxSmoothBifunction(1, 2, {concave, piece(vec({0.5, -0.5}), vec({0.0}))});
  s.delta1 = LinearMap::identity(1);
  s.C = ConvexSet::box(vec({-1, -1}), vec({1, 1}));
  s.D = interval(-1, 1);
  s.h = vec({1.0, 0.5});
  s.l = vec({0.1});
  auto p = make_special_case(SpecialCase::II, s);
  // J0(x; -x) <= max(0.5 t^2 + 0.5 t, 0.71 t) for the two pieces.
  p.rA = LinearProfile{1.5, 0.37, 0.71};
  p.rB = LinearProfile{1.5, 0.2, 0.0};
  return finish(std::move(p), "hemi_coupled_2x1", "weakly convex max of a concave quadratic and an affine piece", true,
                std::pair{vec({0.4290632472656223, 0.23578042124425802}), vec({0.12387509963541632})});
}

CoupledProblem parameter_free() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {2.0}), mat(1, 1, {0.5}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {-0.5}));
  s.J = MaxSmoothBifunction(1, 1, {piece(vec({1.0}), vec({0.0})), piece(vec({-0.5}), vec({0.0}))});
  s.H = MaxSmoothBifunction(1, 1, {piece(vec({0.3}), vec({0.0})), piece(vec({-0.3}), vec({0.0}))});
  s.psi = ConvexExtendedFunction(1, {WeightedL1Term{0.1}});
  s.C = interval(-2, 2);
  s.D = interval(-2, 2);
  s.h = vec({0.4});
  s.l = vec({0.5});
  auto p = make_special_case(SpecialCase::I, s);
  p.rA = LinearProfile{2.0, 0.5, 1.0};
  p.rB = LinearProfile{1.0, 0.5, 0.3};
  return finish(std::move(p), "parameter_free_l1_1d", "parameter-free J and H with an l1 potential", true,
                std::pair{vec({0.0}), vec({0.2})});
}

CoupledProblem parameter_control() {
  auto s = parts_1d();
  s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {0.4}));
  s.B = affine(mat(1, 1, {2.0}), mat(1, 1, {0.0}));
  s.J = MaxSmoothBifunction(1, 1, {piece(vec({1.0}), vec({-1.0})), piece(vec({-1.0}), vec({0.0}))});
  s.delta1 = LinearMap::identity(1);
  s.C = interval(-1, 1);
  s.h = vec({0.5});
  s.l = vec({1.0});
  auto p = make_special_case(SpecialCase::VI, s);
  p.rA = LinearProfile{1.0, 0.4, 1.0};
  p.rB = LinearProfile{2.0, 0.0, 0.0};
  return finish(std::move(p), "parameter_control_1d", "control w = 0.5 fixed by 2w = 1 drives the kink of J", true,
                std::pair{vec({0.25}), vec({0.5})});
}

CoupledProblem ball_quadratic() {
  SpecialCaseParts s;
  s.layout = {2, 1, 2, 1, 1, 2};
  s.A = affine(Mat::Identity(2, 2), mat(2, 1, {0.2, 0.0}));
  s.B = affine(mat(1, 1, {1.0}), mat(1, 2, {0.0, -0.1}));
  s.psi = ConvexExtendedFunction(2, {QuadraticTerm{0.5 * Mat::Identity(2, 2), Vec::Zero(2), 0.0}});
  s.C = ConvexSet::ball(Vec::Zero(2), 1.0);
  s.D = interval(-1, 1);
  s.h = vec({2.0, 1.0});
  s.l = vec({0.2});
  auto p = make_special_case(SpecialCase::III, s);
  p.rA = LinearProfile{1.0, 0.2, 0.0};
  p.rB = LinearProfile{1.0, 0.1, 0.0};
  return finish(std::move(p), "ball_quadratic_2d", "unit ball with a quadratic potential; solution on the sphere", true,
                std::pair{vec({0.8899007397631734, 0.45615422103599623}), vec({0.24561542210359963})});
}

Mat random_spd(int n, std::mt19937_64& rng, double& lambda_min) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = N(rng);
  Mat Q = Eigen::HouseholderQR<Mat>(G).householderQ();
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev(i) = U(rng);
  lambda_min = ev.minCoeff();
  Mat P = Q * ev.asDiagonal() * Q.transpose();
  return 0.5 * (P + P.transpose());
}

Mat random_coupling(int rows, int cols, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat K(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) K(i, j) = N(rng);
  double n = op_norm(K);
  return n > 0.0 && norm > 0.0 ? Mat(K * (norm / n)) : Mat::Zero(rows, cols);
}

// Max-affine function of x in R^n with parameter in R^m; returns the largest x-gradient norm.
MaxSmoothBifunction random_max_affine(int m, int n, int pieces, std::mt19937_64& rng, double& max_grad) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0), S(-0.5, 0.5);
  int count = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(pieces));
  std::vector<SmoothPiece> out;
  max_grad = 0.0;
  for (int k = 0; k < count; ++k) {
    Vec gx(n), gp(m);
    for (int i = 0; i < n; ++i) gx(i) = N(rng);
    gx *= U(rng) / std::max(gx.norm(), 1e-300);
    for (int i = 0; i < m; ++i) gp(i) = S(rng);
    max_grad = std::max(max_grad, gx.norm());
    out.push_back(piece(gx, gp, S(rng)));
  }
  return MaxSmoothBifunction(m, n, std::move(out));
}

ConvexSet random_box(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lo(-1.5, -0.5), hi(0.5, 1.5);
  Vec a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a(i) = lo(rng);
    b(i) = hi(rng);
  }
  return ConvexSet::box(a, b);
}

}  // namespace

CoupledProblem random_instance(RandomDims dims, double kappa, int pieces, std::uint64_t seed) {
  if (dims.nV < 1 || dims.nE < 1) throw InputError("random_instance: dimensions must be at least 1");
  if (!(kappa >= 0.0 && kappa < 1.0)) throw InputError("random_instance: coupling strength must lie in [0, 1)");
  if (pieces < 1) throw InputError("random_instance: need at least one piece");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rhs(-2.0, 2.0), coin(0.0, 1.0);
  const int nV = dims.nV, nE = dims.nE;

  CoupledProblem p;
  p.layout = {nV, nE, nV, nE, nE, nV};
  double lamA = 0, lamB = 0, gJ = 0, gH = 0;
  Mat PA = random_spd(nV, rng, lamA);
  Mat PB = random_spd(nE, rng, lamB);
  p.A = affine(PA, random_coupling(nV, nE, kappa * lamA, rng));
  p.B = affine(PB, random_coupling(nE, nV, kappa * lamB, rng));
  p.J = random_max_affine(nE, nV, pieces, rng, gJ);
  p.H = random_max_affine(nV, nE, pieces, rng, gH);
  p.psi = coin(rng) < 0.5 ? ConvexExtendedFunction(nV, {WeightedL1Term{0.1}}) : ConvexExtendedFunction::zero(nV);
  p.theta = coin(rng) < 0.5 ? ConvexExtendedFunction(nE, {WeightedL1Term{0.1}}) : ConvexExtendedFunction::zero(nE);
  p.C = random_box(nV, rng);
  p.D = random_box(nE, rng);
  p.gamma1 = LinearMap::identity(nV);
  p.gamma2 = LinearMap::identity(nE);
  p.delta1 = LinearMap::identity(nE);
  p.delta2 = LinearMap::identity(nV);
  p.h.resize(nV);
  p.l.resize(nE);
  for (int i = 0; i < nV; ++i) p.h(i) = rhs(rng);
  for (int i = 0; i < nE; ++i) p.l(i) = rhs(rng);
  // <P x + K p, x> >= lambda_min t^2 - ||K|| s t and J0(.; -x) <= max ||g_x|| t.
  p.rA = LinearProfile{lamA, kappa * lamA, gJ};
  p.rB = LinearProfile{lamB, kappa * lamB, gH};
  p.meta.name = "random_" + std::to_string(seed);
  p.meta.description = "random instance, coupling " + std::to_string(kappa);
  p.meta.expect_audit_pass = true;
  p.validate();
  return p;
}

CoupledProblem suite_random_instance(int seed) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 0x9e3779b97f4a7c15ULL);
  RandomDims dims{1 + static_cast<int>(rng() % 2), 1 + static_cast<int>(rng() % 2)};
  double kappa = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
  int pieces = 1 + static_cast<int>(rng() % 3);
  auto p = random_instance(dims, kappa, pieces, static_cast<std::uint64_t>(seed));
  char name[32];
  std::snprintf(name, sizeof name, "random_%02d", seed);
  p.meta.name = name;
  return p;
}

std::vector<CoupledProblem> hand_built_suite() {
  return {coupled_box(1.0, "coupled_box_1d"),
          coupled_box(0.0, "coupled_box_zero_1d"),
          decoupled(),
          hemi_abs(),
          kink_coupled(),
          polytope(),
          equations(),
          equation_constraint(),
          hemi_2x1(),
          parameter_free(),
          parameter_control(),
          ball_quadratic()};
}

std::vector<CoupledProblem> pathological_suite() {
  std::vector<CoupledProblem> out;
  {
    auto s = parts_1d();
    s.A = affine(mat(1, 1, {-1.0}), mat(1, 1, {0.0}));
    s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {0.0}));
    s.C = interval(-1, 1);
    s.D = interval(-1, 1);
    auto p = make_special_case(SpecialCase::III, s);
    p.rA = LinearProfile{1.0, 0.0, 0.0};
    p.rB = LinearProfile{1.0, 0.0, 0.0};
    out.push_back(finish(std::move(p), "non_pseudomonotone_1d", "A = -u with a claimed profile r = t", false));
  }
  {
    SpecialCaseParts s;
    s.layout = {2, 1, 2, 1, 1, 2};
    s.A = affine(mat(2, 2, {0, 1, -1, 0}), Mat::Zero(2, 1));
    s.B = affine(mat(1, 1, {1.0}), Mat::Zero(1, 2));
    s.C = ConvexSet::box(vec({-1, -1}), vec({1, 1}));
    s.D = interval(-1, 1);
    s.h = vec({0.5, 0.5});
    auto p = make_special_case(SpecialCase::III, s);
    p.rA = LinearProfile{0.5, 0.0, 0.0};
    p.rB = LinearProfile{1.0, 0.0, 0.0};
    out.push_back(finish(std::move(p), "non_coercive_skew_2d", "skew-symmetric A with a claimed profile r = 0.5t", false));
  }
  {
    auto s = parts_1d();
    s.A = affine(mat(1, 1, {1.0}), mat(1, 1, {2.0}));
    s.B = affine(mat(1, 1, {1.0}), mat(1, 1, {2.0}));
    s.C = interval(-1, 1);
    s.D = interval(-1, 1);
    auto p = make_special_case(SpecialCase::III, s);
    p.rA = LinearProfile{1.0, 2.0, 0.0};
    p.rB = LinearProfile{1.0, 2.0, 0.0};
    out.push_back(finish(std::move(p), "coupling_dominated_1d", "valid profiles t - 2s that do not grow", false));
  }
  return out;
}

}  // namespace cvhi
