#include "nco/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>

#include "nco/errors.hpp"

namespace nco {

std::vector<int> canonical_tour(const std::vector<int>& tour) {
  const int n = static_cast<int>(tour.size());
  int zero_pos = 0;
  for (int i = 0; i < n; ++i) {
    if (tour[i] == 0) {
      zero_pos = i;
      break;
    }
  }
  std::vector<int> rot(n);
  for (int i = 0; i < n; ++i) rot[i] = tour[(zero_pos + i) % n];
  if (n > 2 && rot[1] > rot[n - 1]) {
    std::reverse(rot.begin() + 1, rot.end());
  }
  return rot;
}

double gap_to(double cost, double optimal) { return cost / optimal - 1.0; }

OracleResult held_karp(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::kTsp) throw ParameterError("held_karp: TSP instances only");
  const int n = inst.num_nodes();
  if (n > 20) {
    throw ParameterError("held_karp: n = " + std::to_string(n) +
                         " exceeds the exact-oracle cap of 20");
  }
  // dp[mask][j]: cheapest path 0 -> j visiting exactly the nodes in mask.
  const std::size_t nmask = std::size_t(1) << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(nmask * n, inf);
  std::vector<std::uint8_t> parent(nmask * n, 0);
  for (int j = 1; j < n; ++j) dp[((std::size_t(1) | (std::size_t(1) << j)) * n) + j] = inst.dist(0, j);

  for (std::size_t mask = 1; mask < nmask; ++mask) {
    if (!(mask & 1)) continue;
    for (int j = 1; j < n; ++j) {
      if (!(mask & (std::size_t(1) << j))) continue;
      const double cur = dp[mask * n + j];
      if (cur == inf) continue;
      for (int k = 1; k < n; ++k) {
        if (mask & (std::size_t(1) << k)) continue;
        const std::size_t next_mask = mask | (std::size_t(1) << k);
        const double cand = cur + inst.dist(j, k);
        if (cand < dp[next_mask * n + k]) {
          dp[next_mask * n + k] = cand;
          parent[next_mask * n + k] = static_cast<std::uint8_t>(j);
        }
      }
    }
  }

  const std::size_t full = nmask - 1;
  double best = inf;
  int best_j = 1;
  for (int j = 1; j < n; ++j) {
    const double cand = dp[full * n + j] + inst.dist(j, 0);
    if (cand < best) {
      best = cand;
      best_j = j;
    }
  }

  std::vector<int> tour;
  tour.reserve(n);
  std::size_t mask = full;
  int j = best_j;
  while (j != 0) {
    tour.push_back(j);
    const int pj = parent[mask * n + j];
    mask ^= std::size_t(1) << j;
    j = pj;
  }
  tour.push_back(0);
  std::reverse(tour.begin(), tour.end());

  OracleResult r;
  r.optimal_tour = canonical_tour(tour);
  r.optimal_cost = tour_length(r.optimal_tour, inst);
  r.method = OracleMethod::kHeldKarp;
  return r;
}

OracleResult brute_force_tsp(const ProblemInstance& inst) {
  if (inst.kind != ProblemKind::kTsp) throw ParameterError("brute_force: TSP instances only");
  const int n = inst.num_nodes();
  if (n > 10) {
    throw ParameterError("brute_force: n = " + std::to_string(n) + " exceeds the cap of 10");
  }
  std::vector<int> perm(n - 1);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<int> tour(n), best_tour;
  tour[0] = 0;
  double best = std::numeric_limits<double>::infinity();
  do {
    std::copy(perm.begin(), perm.end(), tour.begin() + 1);
    const double len = tour_length(tour, inst);
    if (len < best) {
      best = len;
      best_tour = tour;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  OracleResult r;
  r.optimal_tour = canonical_tour(best_tour);
  r.optimal_cost = tour_length(r.optimal_tour, inst);
  r.method = OracleMethod::kBruteForce;
  return r;
}

}  // namespace nco
