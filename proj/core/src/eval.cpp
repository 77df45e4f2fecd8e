#include "nco/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "nco/adam.hpp"
#include "nco/advantage.hpp"
#include "nco/oracle.hpp"
#include "nco/errors.hpp"

namespace nco {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

using PolicyF = Policy<float>;
using VarF = Tape<float>::Var;
using CtxVals = PolicyF::DecoderCtxVals;

// Encode once and snapshot the decoder context as plain values, so eval
// loops can re-register it as constants on short-lived tapes.
CtxVals snapshot_for(const PolicyF& pol, const ParamSet<float>& params,
                     const ProblemInstance& inst) {
  Tape<float> tape;
  auto pv = params.register_on(tape, /*grads=*/false);
  auto emb = pol.encode(tape, pv, inst);
  auto ctx = pol.build_ctx(tape, pv, emb);
  return pol.snapshot_ctx(tape, ctx);
}

struct StepProbs {
  Tensor<float> probs;
  Mask feasible;
};

StepProbs probs_for_states(const PolicyF& pol, Tape<float>& tape,
                           const std::vector<VarF>& pv, const PolicyF::DecoderCtx& ctx,
                           const ProblemInstance& inst, const std::vector<EnvState>& states,
                           const std::vector<int>& firsts) {
  const int rows = static_cast<int>(states.size());
  const int n = inst.num_nodes();
  Mask feasible(rows, n, 0);
  std::vector<int> current(rows);
  std::vector<float> cap;
  for (int r = 0; r < rows; ++r) {
    current[r] = states[r].current;
    fill_mask_row(feasible, r, states[r], inst);
  }
  VarF side_q;
  if (inst.kind == ProblemKind::kTsp) {
    side_q = pol.make_first_query(tape, pv, ctx, firsts);
  } else {
    cap.resize(rows);
    for (int r = 0; r < rows; ++r) {
      cap[r] = static_cast<float>(states[r].remaining_capacity) /
               static_cast<float>(inst.capacity);
    }
    side_q = pol.make_capacity_query(tape, pv, cap);
  }
  auto p = pol.decode_probs(tape, pv, ctx, current, side_q, feasible);
  return {tape.val(p), std::move(feasible)};
}

// Complete every state greedily (lowest index on ties) and return the full
// routes as solutions, cost validated by reward recomputation.
std::vector<Solution> greedy_complete(const PolicyF& pol, const ParamSet<float>& params,
                                      const CtxVals& vals, const ProblemInstance& inst,
                                      std::vector<EnvState> states,
                                      const std::vector<int>& firsts) {
  Tape<float> tape;
  auto pv = params.register_on(tape, /*grads=*/false);
  auto ctx = pol.ctx_from_vals(tape, vals);
  while (true) {
    bool all_done = true;
    for (const auto& s : states) {
      if (!s.done) {
        all_done = false;
        break;
      }
    }
    if (all_done) break;
    StepProbs sp = probs_for_states(pol, tape, pv, ctx, inst, states, firsts);
    for (std::size_t r = 0; r < states.size(); ++r) {
      if (states[r].done) continue;
      const int a = PolicyF::argmax_row(sp.probs, sp.feasible, static_cast<int>(r));
      states[r].apply(a, inst);
    }
  }
  std::vector<Solution> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    out.push_back({s.route, -reward_of(s.route, inst)});
  }
  return out;
}

Solution best_of(const std::vector<Trajectory>& trajs) {
  const Trajectory* best = &trajs[0];
  for (const auto& t : trajs) {
    if (-t.reward < -best->reward) best = &t;
  }
  return {best->actions, -best->reward};
}

}  // namespace

std::string strategy_name(EvalStrategy s) {
  switch (s) {
    case EvalStrategy::kGreedy: return "greedy";
    case EvalStrategy::kGreedyAug8: return "greedy_aug8";
    case EvalStrategy::kSampling: return "sampling";
    case EvalStrategy::kSgbs: return "sgbs";
    case EvalStrategy::kEas: return "eas";
    default: return "sgbs_eas";
  }
}

EvalStrategy strategy_from_name(const std::string& s) {
  if (s == "greedy") return EvalStrategy::kGreedy;
  if (s == "greedy_aug8") return EvalStrategy::kGreedyAug8;
  if (s == "sampling") return EvalStrategy::kSampling;
  if (s == "sgbs") return EvalStrategy::kSgbs;
  if (s == "eas") return EvalStrategy::kEas;
  if (s == "sgbs_eas") return EvalStrategy::kSgbsEas;
  throw ParameterError("unknown eval strategy '" + s + "'");
}

void EvalConfig::validate() const {
  if (k < 1) throw ParameterError("eval config: k must be >= 1");
  if (sgbs_beta < 1) throw ParameterError("eval config: sgbs_beta must be >= 1");
  if (sgbs_gamma < 2) throw ParameterError("eval config: sgbs_gamma must be >= 2");
  if (eas_iters_per_sgbs < 1) {
    throw ParameterError("eval config: eas_iters_per_sgbs must be >= 1");
  }
  if (eas_lr <= 0.0) throw ParameterError("eval config: eas_lr must be positive");
  if (!(eas_alpha > 1.0)) throw ParameterError("eval config: eas_alpha must be > 1");
}

int Evaluator::default_starts(const ProblemInstance& inst, int requested) const {
  const int max_starts =
      inst.kind == ProblemKind::kTsp ? inst.num_nodes() : inst.num_customers();
  if (requested <= 0) return max_starts;
  return std::min(requested, max_starts);
}

Solution Evaluator::greedy_multistart(const ProblemInstance& inst, int n_starts) const {
  Tape<float> tape;
  auto pv = policy_.params().register_on(tape, /*grads=*/false);
  const auto starts = PolicyF::select_start_nodes(inst, n_starts);
  auto roll = policy_.rollout(tape, pv, inst, starts, RolloutMode::kGreedy, nullptr);
  return best_of(roll.trajectories);
}

Solution Evaluator::greedy_aug8(const ProblemInstance& inst, int n_starts) const {
  Solution best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const ProblemInstance& aug : augment_8(inst)) {
    Solution s = greedy_multistart(aug, n_starts);
    const double cost_orig = -reward_of(s.actions, inst);  // input coordinates
    if (cost_orig < best.cost) best = {s.actions, cost_orig};
  }
  return best;
}

Evaluator::SamplingOut Evaluator::sampling(const ProblemInstance& inst, int k, int n_starts,
                                           Rng& rng) const {
  const auto starts = PolicyF::select_start_nodes(inst, n_starts);
  const CtxVals vals = snapshot_for(policy_, policy_.params(), inst);

  SamplingOut out;
  out.best.cost = std::numeric_limits<double>::infinity();
  out.running_best.reserve(k);
  int produced = 0;
  while (produced < k) {
    Tape<float> tape;
    auto pv = policy_.params().register_on(tape, /*grads=*/false);
    auto ctx = policy_.ctx_from_vals(tape, vals);
    auto roll =
        policy_.rollout_from_ctx(tape, pv, ctx, inst, starts, RolloutMode::kSampling, &rng);
    for (const auto& t : roll.trajectories) {
      if (produced >= k) break;
      const double cost = -t.reward;
      if (cost < out.best.cost) out.best = {t.actions, cost};
      out.running_best.push_back(out.best.cost);
      out.raw_costs.push_back(cost);
      ++produced;
    }
  }
  return out;
}

struct Evaluator::SgbsPassOut {
  Solution best;
  std::vector<Solution> beam;
  std::vector<Solution> candidates;
};

Evaluator::SgbsPassOut Evaluator::sgbs_with_params(const ParamSet<float>& params,
                                                   const ProblemInstance& inst, int beta,
                                                   int gamma) const {
  if (beta < 1 || gamma < 2) throw ParameterError("sgbs: need beta >= 1 and gamma >= 2");
  const CtxVals vals = snapshot_for(policy_, params, inst);
  const int root_start = PolicyF::select_start_nodes(inst, 1)[0];

  SgbsPassOut out;
  out.best.cost = std::numeric_limits<double>::infinity();
  auto offer = [&](const Solution& s) {
    out.candidates.push_back(s);
    if (s.cost < out.best.cost) out.best = s;
  };

  EnvState root = EnvState::initial(inst);
  root.apply(root_start, inst);
  std::vector<EnvState> beam{root};

  while (!beam.empty()) {
    // Finished entries are complete solutions; they leave the beam.
    std::vector<EnvState> active;
    for (auto& st : beam) {
      if (st.done) {
        Solution s{st.route, -reward_of(st.route, inst)};
        offer(s);
        out.beam.push_back(std::move(s));
      } else {
        active.push_back(std::move(st));
      }
    }
    if (active.empty()) break;

    // Expansion: top (gamma-1) feasible actions per entry by probability.
    Tape<float> tape;
    auto pv = params.register_on(tape, /*grads=*/false);
    auto ctx = policy_.ctx_from_vals(tape, vals);
    const std::vector<int> firsts(active.size(), root_start);
    StepProbs sp = probs_for_states(policy_, tape, pv, ctx, inst, active, firsts);

    std::vector<EnvState> children;
    for (std::size_t r = 0; r < active.size(); ++r) {
      std::vector<std::pair<float, int>> ranked;  // (-prob, action)
      for (int a = 0; a < inst.num_nodes(); ++a) {
        if (sp.feasible.at(static_cast<int>(r), a)) {
          ranked.emplace_back(-sp.probs.at(static_cast<int>(r), a), a);
        }
      }
      std::sort(ranked.begin(), ranked.end());
      const int take = std::min<int>(gamma - 1, static_cast<int>(ranked.size()));
      for (int t = 0; t < take; ++t) {
        EnvState child = active[r];
        child.apply(ranked[t].second, inst);
        children.push_back(std::move(child));
      }
    }
    if (children.empty()) break;

    // Score every child by its greedy-rollout completion.
    const std::vector<int> child_firsts(children.size(), root_start);
    std::vector<Solution> completions =
        greedy_complete(policy_, params, vals, inst, children, child_firsts);
    for (const auto& s : completions) offer(s);

    std::vector<int> order(children.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return completions[a].cost < completions[b].cost;
    });
    const int keep = std::min<int>(beta, static_cast<int>(order.size()));
    std::vector<EnvState> survivors;
    survivors.reserve(keep);
    for (int t = 0; t < keep; ++t) survivors.push_back(std::move(children[order[t]]));
    beam = std::move(survivors);
  }
  return out;
}

Evaluator::SgbsOut Evaluator::sgbs(const ProblemInstance& inst, int beta, int gamma) const {
  SgbsPassOut pass = sgbs_with_params(policy_.params(), inst, beta, gamma);
  return {std::move(pass.best), std::move(pass.beam), std::move(pass.candidates)};
}

Evaluator::EasOut Evaluator::eas_leader(const ProblemInstance& inst, int iters,
                                        double eas_alpha, double eas_lr, Rng& rng,
                                        int n_starts) const {
  EasOut out;
  out.adapted_params = policy_.params();  // private copy; checkpoint stays untouched
  out.adapted_params.set_trainable_prefix("dec.");
  if (iters <= 0) {
    out.best = greedy_multistart(inst, default_starts(inst, n_starts));
    out.adapted_params.set_all_trainable();
    return out;
  }

  const ParamSet<float> pre_eas = out.adapted_params;
  AdamState<float> adam = AdamState<float>::for_params(out.adapted_params);
  AdamConfig<float> adam_cfg;
  adam_cfg.lr = static_cast<float>(eas_lr);

  const auto starts = PolicyF::select_start_nodes(inst, default_starts(inst, n_starts));
  const int n_roll = static_cast<int>(starts.size());

  // The encoder is frozen, so its embedding is computed once; each iteration
  // rebuilds the decoder context from the live decoder weights.
  Tensor<float> emb_val;
  {
    Tape<float> tape;
    auto pv = out.adapted_params.register_on(tape, /*grads=*/false);
    emb_val = tape.val(policy_.encode(tape, pv, inst));
  }

  out.best.cost = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    Tape<float> tape;
    auto pv = out.adapted_params.register_on(tape, /*grads=*/true);
    auto ctx = policy_.build_ctx(tape, pv, tape.constant(emb_val));
    auto roll =
        policy_.rollout_from_ctx(tape, pv, ctx, inst, starts, RolloutMode::kSampling, &rng);

    std::vector<double> rewards(n_roll);
    for (int j = 0; j < n_roll; ++j) {
      rewards[j] = roll.trajectories[j].reward;
      const double cost = -rewards[j];
      if (cost < out.best.cost) {
        out.best = {roll.trajectories[j].actions, cost};
      }
    }
    try {
      AdvantageMatrix adv = compute_advantage_main(rewards, 1, n_roll, eas_alpha);
      auto loss = surrogate_loss<float>(tape, roll.total_logprob, adv.values, n_roll);
      if (!std::isfinite(tape.val(loss).data[0])) {
        throw ContractError("eas: non-finite loss");
      }
      tape.backward(loss);
      auto grads = out.adapted_params.collect_grads(tape, pv);
      adam_step(out.adapted_params, grads, adam, adam_cfg);
    } catch (const ContractError&) {
      out.adapted_params = pre_eas;
      out.reverted = true;
      out.incumbent_trace.push_back(out.best.cost);
      break;
    }
    out.incumbent_trace.push_back(out.best.cost);
  }
  out.adapted_params.set_all_trainable();
  return out;
}

Solution Evaluator::sgbs_eas(const ProblemInstance& inst, const EvalConfig& cfg,
                             Rng& rng) const {
  const auto t0 = Clock::now();
  // The unadapted greedy solution seeds the incumbent, so the interleaved
  // result can never be worse than plain greedy.
  Solution incumbent = greedy_multistart(inst, default_starts(inst, cfg.num_starts));

  ParamSet<float> params = policy_.params();
  params.set_trainable_prefix("dec.");
  const ParamSet<float> pre_eas = params;
  AdamState<float> adam = AdamState<float>::for_params(params);
  AdamConfig<float> adam_cfg;
  adam_cfg.lr = static_cast<float>(cfg.eas_lr);

  const auto starts =
      PolicyF::select_start_nodes(inst, default_starts(inst, cfg.num_starts));
  const int n_roll = static_cast<int>(starts.size());

  Tensor<float> emb_val;
  {
    Tape<float> tape;
    auto pv = params.register_on(tape, /*grads=*/false);
    emb_val = tape.val(policy_.encode(tape, pv, inst));
  }

  for (int it = 1; it <= cfg.k; ++it) {
    if (cfg.time_budget > 0.0 && seconds_since(t0) > cfg.time_budget) break;

    Tape<float> tape;
    auto pv = params.register_on(tape, /*grads=*/true);
    auto ctx = policy_.build_ctx(tape, pv, tape.constant(emb_val));
    auto roll =
        policy_.rollout_from_ctx(tape, pv, ctx, inst, starts, RolloutMode::kSampling, &rng);

    std::vector<double> rewards(n_roll);
    for (int j = 0; j < n_roll; ++j) {
      rewards[j] = roll.trajectories[j].reward;
      const double cost = -rewards[j];
      if (cost < incumbent.cost) incumbent = {roll.trajectories[j].actions, cost};
    }
    try {
      AdvantageMatrix adv = compute_advantage_main(rewards, 1, n_roll, cfg.eas_alpha);
      auto loss = surrogate_loss<float>(tape, roll.total_logprob, adv.values, n_roll);
      if (!std::isfinite(tape.val(loss).data[0])) {
        throw ContractError("sgbs_eas: non-finite loss");
      }
      tape.backward(loss);
      auto grads = params.collect_grads(tape, pv);
      adam_step(params, grads, adam, adam_cfg);
    } catch (const ContractError&) {
      params = pre_eas;
      break;
    }

    if (it % cfg.eas_iters_per_sgbs == 0) {
      SgbsPassOut pass = sgbs_with_params(params, inst, cfg.sgbs_beta, cfg.sgbs_gamma);
      if (pass.best.cost < incumbent.cost) incumbent = pass.best;
      // EAS sees the SGBS incumbent through the shared best-tracking above.
    }
  }
  return incumbent;
}

EvalResult Evaluator::evaluate(const std::vector<ProblemInstance>& instances,
                               const std::vector<std::optional<double>>& optima,
                               const EvalConfig& cfg) const {
  cfg.validate();
  const auto t0 = Clock::now();
  EvalResult res;
  res.strategy = cfg.strategy;

  std::vector<int> curve_points;
  for (int k = 1; k < cfg.k; k *= 2) curve_points.push_back(k);
  curve_points.push_back(cfg.k);

  std::vector<double> curve_acc(curve_points.size(), 0.0);
  double cost_acc = 0.0, gap_acc = 0.0;
  bool all_gaps = true;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const ProblemInstance& inst = instances[i];
    const int n_starts = default_starts(inst, cfg.num_starts);
    Rng rng = stream_for(cfg.seed, RngStream::kEval, static_cast<std::uint64_t>(i));

    InstanceEval row;
    row.id = inst.id.empty() ? "instance" + std::to_string(i) : inst.id;
    switch (cfg.strategy) {
      case EvalStrategy::kGreedy:
        row.best = greedy_multistart(inst, n_starts);
        break;
      case EvalStrategy::kGreedyAug8:
        row.best = greedy_aug8(inst, n_starts);
        break;
      case EvalStrategy::kSampling: {
        SamplingOut s = sampling(inst, cfg.k, n_starts, rng);
        row.best = std::move(s.best);
        for (std::size_t c = 0; c < curve_points.size(); ++c) {
          const double v = s.running_best[curve_points[c] - 1];
          row.k_curve.emplace_back(curve_points[c], v);
          curve_acc[c] += v;
        }
        double m = 0.0;
        for (double cst : s.raw_costs) m += cst;
        m /= static_cast<double>(s.raw_costs.size());
        double v = 0.0;
        for (double cst : s.raw_costs) v += (cst - m) * (cst - m);
        row.sample_mean = m;
        row.sample_var = v / static_cast<double>(s.raw_costs.size());
        break;
      }
      case EvalStrategy::kSgbs: {
        row.best = sgbs(inst, cfg.sgbs_beta, cfg.sgbs_gamma).best;
        break;
      }
      case EvalStrategy::kEas: {
        Rng eas_rng = stream_for(cfg.seed, RngStream::kEas, static_cast<std::uint64_t>(i));
        row.best =
            eas_leader(inst, cfg.k, cfg.eas_alpha, cfg.eas_lr, eas_rng, n_starts).best;
        break;
      }
      case EvalStrategy::kSgbsEas: {
        Rng eas_rng = stream_for(cfg.seed, RngStream::kEas, static_cast<std::uint64_t>(i));
        row.best = sgbs_eas(inst, cfg, eas_rng);
        break;
      }
    }

    cost_acc += row.best.cost;
    if (i < optima.size() && optima[i].has_value()) {
      row.gap = gap_to(row.best.cost, *optima[i]);
      gap_acc += *row.gap;
    } else {
      all_gaps = false;
    }
    res.per_instance.push_back(std::move(row));
  }

  const auto n = static_cast<double>(instances.size());
  res.mean_cost = n > 0 ? cost_acc / n : 0.0;
  if (all_gaps && n > 0) res.mean_gap = gap_acc / n;
  if (cfg.strategy == EvalStrategy::kSampling && n > 0) {
    for (std::size_t c = 0; c < curve_points.size(); ++c) {
      res.k_curve_mean.emplace_back(curve_points[c], curve_acc[c] / n);
    }
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

}  // namespace nco
