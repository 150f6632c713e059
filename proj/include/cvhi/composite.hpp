#pragma once

// Small dense convex programs of the form
//
//   minimize  1/2 x'Mx + b'x + sum_j max_i (G_j x + a_j)_i + sum_k w_k ||K_k x + k_k||
//   subject to  E x <= e,  ||x - c_l|| <= r_l
//
// with M symmetric positive definite. Every proximal map, projection and
// subproblem in the library reduces to this form.

#include <vector>

#include "cvhi/linalg.hpp"

namespace cvhi {

struct MaxAffineTerm {
  Mat G;
  Vec a;
};

struct NormTerm {
  Mat K;
  Vec k;
  double weight = 0.0;
};

struct BallConstraint {
  Vec center;
  double radius = 0.0;
};

class CompositeProgram {
 public:
  explicit CompositeProgram(int n);

  int dim() const { return n_; }

  Mat M;
  Vec b;
  std::vector<MaxAffineTerm> max_terms;
  Mat E;
  Vec e;
  std::vector<NormTerm> norm_terms;
  std::vector<BallConstraint> balls;

  void add_inequalities(const Mat& rows, const Vec& rhs);
  void add_max_term(Mat G, Vec a);

  // Objective without constraints.
  double objective(const Vec& x) const;
  // Largest constraint violation, 0 when feasible.
  double infeasibility(const Vec& x) const;

 private:
  int n_;
};

struct CompositeSettings {
  int max_iter = 20000;
  double tol = 1e-12;
  bool polish = true;
};

struct CompositeSolution {
  Vec x;
  double objective = 0.0;
  double infeasibility = 0.0;
  int iterations = 0;
  bool polished = false;
  bool converged = false;
};

// Dual accelerated proximal-gradient ascent. When the program has no norm
// or ball blocks, the active set read off the iterate is handed to an exact
// KKT solve, so kinks and faces are hit to rounding accuracy.
CompositeSolution solve_composite(const CompositeProgram& prog,
                                  const CompositeSettings& settings = {});

// Euclidean projection of z onto the probability simplex.
Vec project_simplex(const Vec& z);

}  // namespace cvhi
