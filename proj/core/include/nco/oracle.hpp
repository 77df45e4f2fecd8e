#pragma once

#include <string>
#include <vector>

#include "nco/problem.hpp"

namespace nco {

enum class OracleMethod { kHeldKarp, kBruteForce };

struct OracleResult {
  double optimal_cost = 0.0;
  std::vector<int> optimal_tour;
  OracleMethod method = OracleMethod::kHeldKarp;
};

// Exact TSP optimum by bitmask dynamic programming, O(n^2 2^n). Capped at
// n <= 20 (the DP table for n=20 is ~170 MB). Throws ParameterError above.
OracleResult held_karp(const ProblemInstance& inst);

// Exhaustive permutation search, n <= 10. Reference oracle for held_karp.
OracleResult brute_force_tsp(const ProblemInstance& inst);

// Rotate/reflect a tour so it starts at node 0 and its second node has the
// lower index of the two neighbors. Canonical form makes costs of equal
// tours bit-comparable.
std::vector<int> canonical_tour(const std::vector<int>& tour);

// cost / optimal - 1
double gap_to(double cost, double optimal);

}  // namespace nco
