#include "nco/env.hpp"

#include "nco/errors.hpp"

namespace nco {

EnvState EnvState::initial(const ProblemInstance& inst) {
  EnvState s;
  s.visited.assign(inst.num_nodes(), 0);
  if (inst.kind == ProblemKind::kTsp) {
    s.current = -1;
  } else {
    s.current = 0;  // at the depot, nothing served yet
    s.remaining_capacity = inst.capacity;
  }
  return s;
}

bool EnvState::is_feasible(int action, const ProblemInstance& inst) const {
  if (done) return false;
  if (action < 0 || action >= inst.num_nodes()) return false;
  if (inst.kind == ProblemKind::kTsp) return !visited[action];
  if (action == 0) return current != 0;  // no depot loop right after a depot visit
  return !visited[action] && inst.demands[action] <= remaining_capacity;
}

std::vector<int> EnvState::feasible_actions(const ProblemInstance& inst) const {
  std::vector<int> out;
  for (int a = 0; a < inst.num_nodes(); ++a)
    if (is_feasible(a, inst)) out.push_back(a);
  return out;
}

void EnvState::apply(int action, const ProblemInstance& inst) {
  if (inst.kind == ProblemKind::kTsp) {
    visited[action] = 1;
    ++visited_count;
    current = action;
    route.push_back(action);
    done = visited_count == inst.num_nodes();
    return;
  }
  if (action == 0) {
    remaining_capacity = inst.capacity;
  } else {
    visited[action] = 1;
    ++visited_count;
    remaining_capacity -= inst.demands[action];
  }
  current = action;
  route.push_back(action);
  done = visited_count == inst.num_customers() && current == 0;
}

EnvState env_step(const EnvState& state, int action, const ProblemInstance& inst) {
  if (state.done) throw ContractError("env_step: state already done");
  if (!state.is_feasible(action, inst)) {
    std::string why;
    if (action < 0 || action >= inst.num_nodes()) {
      why = "index out of range";
    } else if (inst.kind == ProblemKind::kTsp) {
      why = "node already visited";
    } else if (action == 0) {
      why = "depot revisit immediately after a depot visit";
    } else if (state.visited[action]) {
      why = "customer already served";
    } else {
      why = "demand " + std::to_string(inst.demands[action]) + " exceeds remaining capacity " +
            std::to_string(state.remaining_capacity);
    }
    throw FeasibilityError("env_step: action " + std::to_string(action) + " infeasible: " + why);
  }
  EnvState next = state;
  next.apply(action, inst);
  return next;
}

void fill_mask_row(Mask& mask, int row, const EnvState& state, const ProblemInstance& inst) {
  const int n = inst.num_nodes();
  if (state.done) {
    for (int a = 0; a < n; ++a) mask.set(row, a, a == state.current);
    return;
  }
  for (int a = 0; a < n; ++a) mask.set(row, a, state.is_feasible(a, inst));
}

}  // namespace nco
