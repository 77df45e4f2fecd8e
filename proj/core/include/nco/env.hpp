#pragma once

#include <cstdint>
#include <vector>

#include "nco/problem.hpp"
#include "nco/tensor.hpp"

namespace nco {

// Construction-state machine for one rollout. TSP: visit every node once.
// CVRP: start at the depot, serve all customers subject to capacity, return
// to the depot; the vehicle may return to the depot mid-route to refill.
struct EnvState {
  std::vector<std::uint8_t> visited;  // per node; depot slot unused for CVRP
  int current = -1;                   // -1 before the first TSP move
  int remaining_capacity = 0;         // CVRP
  std::vector<int> route;             // actions taken so far
  bool done = false;
  int visited_count = 0;

  static EnvState initial(const ProblemInstance& inst);

  // Feasible actions. TSP: unvisited nodes (all nodes before the first move).
  // CVRP: unvisited customers whose demand fits, plus the depot unless the
  // vehicle is currently at it (bans zero-length depot loops). A done state
  // has an empty feasible set.
  std::vector<int> feasible_actions(const ProblemInstance& inst) const;
  bool is_feasible(int action, const ProblemInstance& inst) const;

  void apply(int action, const ProblemInstance& inst);
};

EnvState env_step(const EnvState& state, int action, const ProblemInstance& inst);

// Fill one mask row with the state's feasible set. For finished CVRP rollouts
// that ride along in a batch, the current node stays feasible so the softmax
// row is never empty; such rows contribute exactly zero log-prob and gradient.
void fill_mask_row(Mask& mask, int row, const EnvState& state, const ProblemInstance& inst);

}  // namespace nco
