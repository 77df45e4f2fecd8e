#include "nco/problem.hpp"

#include <cmath>
#include <set>

#include "nco/env.hpp"
#include "nco/errors.hpp"
#include "nlohmann/json.hpp"

namespace nco {

std::string kind_name(ProblemKind k) { return k == ProblemKind::kTsp ? "tsp" : "cvrp"; }

ProblemKind kind_from_name(const std::string& s) {
  if (s == "tsp") return ProblemKind::kTsp;
  if (s == "cvrp") return ProblemKind::kCvrp;
  throw ParameterError("unknown problem kind '" + s + "' (expected tsp or cvrp)");
}

void ProblemInstance::validate() const {
  if (kind == ProblemKind::kTsp) {
    if (num_nodes() < 3) {
      throw ParameterError("tsp instance needs n >= 3 nodes, got " +
                           std::to_string(num_nodes()));
    }
  } else {
    if (num_customers() < 2) {
      throw ParameterError("cvrp instance needs >= 2 customers plus depot, got " +
                           std::to_string(num_customers()));
    }
    if (capacity <= 0) throw ValidationError("cvrp capacity must be positive");
    if (static_cast<int>(demands.size()) != num_nodes()) {
      throw ValidationError("cvrp demands size " + std::to_string(demands.size()) +
                            " != node count " + std::to_string(num_nodes()));
    }
    if (demands[0] != 0) throw ValidationError("cvrp depot demand must be 0");
    for (int i = 1; i < num_nodes(); ++i) {
      if (demands[i] < 0) throw ValidationError("negative demand at node " + std::to_string(i));
      if (demands[i] > capacity) {
        throw ValidationError("demand " + std::to_string(demands[i]) + " at node " +
                              std::to_string(i) + " exceeds capacity " +
                              std::to_string(capacity));
      }
    }
  }
}

int cvrp_capacity_for(int num_customers) {
  if (num_customers <= 20) return 30;
  if (num_customers <= 50) return 40;
  return 50;
}

ProblemInstance sample_instance(ProblemKind kind, int n, Rng& rng) {
  if (n < 3 || n > 64) {
    throw ParameterError("instance size " + std::to_string(n) +
                         " out of supported range [3,64]");
  }
  ProblemInstance inst;
  inst.kind = kind;
  const int total = kind == ProblemKind::kCvrp ? n + 1 : n;
  inst.coords.reserve(total);
  for (int i = 0; i < total; ++i) {
    const double x = rng.next_double();
    const double y = rng.next_double();
    inst.coords.push_back({x, y});
  }
  if (kind == ProblemKind::kCvrp) {
    inst.capacity = cvrp_capacity_for(n);
    inst.demands.resize(total);
    inst.demands[0] = 0;
    for (int i = 1; i < total; ++i) inst.demands[i] = rng.next_int(1, 9);
  }
  inst.validate();
  return inst;
}

double tour_length(const std::vector<int>& tour, const ProblemInstance& inst) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) len += inst.dist(tour[i], tour[i + 1]);
  if (tour.size() > 1) len += inst.dist(tour.back(), tour.front());
  return len;
}

double reward_of(const std::vector<int>& actions, const ProblemInstance& inst) {
  if (actions.empty()) throw ContractError("reward: empty action sequence");
  if (inst.kind == ProblemKind::kTsp) {
    if (static_cast<int>(actions.size()) != inst.num_nodes()) {
      throw ContractError("reward: tsp solution visits " + std::to_string(actions.size()) +
                          " of " + std::to_string(inst.num_nodes()) + " nodes");
    }
    std::vector<std::uint8_t> seen(inst.num_nodes(), 0);
    for (int a : actions) {
      if (a < 0 || a >= inst.num_nodes() || seen[a]) {
        throw ContractError("reward: tsp solution is not a permutation");
      }
      seen[a] = 1;
    }
    return -tour_length(actions, inst);
  }
  // CVRP: replay through the environment to validate feasibility/completeness.
  EnvState state = EnvState::initial(inst);
  double len = 0.0;
  int prev = 0;  // depot
  for (int a : actions) {
    if (!state.is_feasible(a, inst)) {
      throw ContractError("reward: infeasible cvrp action " + std::to_string(a) +
                          " at position " + std::to_string(state.route.size()));
    }
    len += inst.dist(prev, a);
    state.apply(a, inst);
    prev = a;
  }
  if (!state.done) throw ContractError("reward: incomplete cvrp solution");
  return -len;
}

Point dihedral_transform(Point p, int which) {
  switch (which) {
    case 0: return {p.x, p.y};
    case 1: return {1.0 - p.x, p.y};
    case 2: return {p.x, 1.0 - p.y};
    case 3: return {1.0 - p.x, 1.0 - p.y};
    case 4: return {p.y, p.x};
    case 5: return {1.0 - p.y, p.x};
    case 6: return {p.y, 1.0 - p.x};
    default: return {1.0 - p.y, 1.0 - p.x};
  }
}

std::array<ProblemInstance, 8> augment_8(const ProblemInstance& inst) {
  std::array<ProblemInstance, 8> out;
  for (int k = 0; k < 8; ++k) {
    out[k] = inst;
    for (auto& p : out[k].coords) p = dihedral_transform(p, k);
    if (k > 0) out[k].id = inst.id.empty() ? "" : inst.id + "#aug" + std::to_string(k);
  }
  return out;
}

std::string instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j;
  j["id"] = inst.id;
  j["kind"] = kind_name(inst.kind);
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& p : inst.coords) coords.push_back({p.x, p.y});
  j["coords"] = std::move(coords);
  if (inst.kind == ProblemKind::kCvrp) {
    j["demands"] = inst.demands;
    j["capacity"] = inst.capacity;
  }
  if (inst.scale_hint != 0.0) j["scale_hint"] = inst.scale_hint;
  return j.dump();
}

ProblemInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance json: ") + e.what());
  }
  ProblemInstance inst;
  inst.kind = kind_from_name(j.at("kind").get<std::string>());
  inst.id = j.value("id", std::string());
  for (const auto& c : j.at("coords")) {
    inst.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
  }
  if (inst.kind == ProblemKind::kCvrp) {
    inst.demands = j.at("demands").get<std::vector<int>>();
    inst.capacity = j.at("capacity").get<int>();
  }
  inst.scale_hint = j.value("scale_hint", 0.0);
  inst.validate();
  return inst;
}

}  // namespace nco
