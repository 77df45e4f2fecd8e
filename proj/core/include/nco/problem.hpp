#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nco/rng.hpp"

namespace nco {

enum class ProblemKind { kTsp, kCvrp };

std::string kind_name(ProblemKind k);
ProblemKind kind_from_name(const std::string& s);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// One CO instance. TSP: n plain nodes. CVRP: depot at index 0 plus customers,
// each customer with a demand; one shared vehicle capacity.
struct ProblemInstance {
  ProblemKind kind = ProblemKind::kTsp;
  std::vector<Point> coords;
  std::vector<int> demands;  // CVRP only; demands[0] == 0
  int capacity = 0;          // CVRP only
  std::string id;
  double scale_hint = 0.0;  // max raw coordinate extent (TSPLib/CVRPLib inputs)

  int num_nodes() const { return static_cast<int>(coords.size()); }
  int num_customers() const {
    return kind == ProblemKind::kCvrp ? num_nodes() - 1 : num_nodes();
  }
  double dist(int a, int b) const {
    const double dx = coords[a].x - coords[b].x;
    const double dy = coords[a].y - coords[b].y;
    return std::sqrt(dx * dx + dy * dy);
  }
  void validate() const;
};

// An action sequence with its summed log-probability and reward. The reward
// is the negative route length, recomputable from the actions alone.
struct Trajectory {
  std::vector<int> actions;
  double log_prob = 0.0;
  double reward = 0.0;
  int start_node = -1;
};

// Capacity by customer count, following the POMO-lineage convention.
int cvrp_capacity_for(int num_customers);

// Uniform instances on the unit square. CVRP demands are uniform integers in
// [1,9] with depot demand 0.
ProblemInstance sample_instance(ProblemKind kind, int n, Rng& rng);

// Negative total Euclidean length of a complete feasible solution. TSP tours
// close back to the first action; CVRP walks depot -> ... -> depot. Throws
// ContractError on incomplete or infeasible action sequences.
double reward_of(const std::vector<int>& actions, const ProblemInstance& inst);

// Route length without feasibility validation (oracles, hot loops).
double tour_length(const std::vector<int>& tour, const ProblemInstance& inst);

// The 8 dihedral transforms of unit-square coordinates (identity first).
// Demands and capacity are unchanged; tour costs are invariant.
std::array<ProblemInstance, 8> augment_8(const ProblemInstance& inst);
Point dihedral_transform(Point p, int which);

// Instance JSON export/import for reproducibility.
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);

}  // namespace nco
