#pragma once

#include <cstdint>
#include <vector>

#include "cvhi/problem.hpp"

namespace cvhi {

struct RandomDims {
  int nV = 1, nE = 1;
};

// Affine operators with symmetric P blocks (spectrum in [1, 2]) and coupling
// blocks of norm kappa * lambda_min(P); max-affine J and H with at most
// `pieces` pieces and x-gradients of norm at most 1; random boxes for C and D.
// Attaches the linear profiles the construction guarantees.
CoupledProblem random_instance(RandomDims dims, double kappa, int pieces, std::uint64_t seed);

// Member `seed` (1..50) of the seeded random suite: dims, coupling and piece
// count are drawn from the seed.
CoupledProblem suite_random_instance(int seed);

// Twelve 1-D/2-D instances with reference solutions in meta.reference.
std::vector<CoupledProblem> hand_built_suite();

// Instances that violate a hypothesis on purpose: a non-pseudomonotone
// operator, a non-coercive operator and a coupling-dominated profile.
std::vector<CoupledProblem> pathological_suite();

}  // namespace cvhi
