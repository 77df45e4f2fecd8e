#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nco/policy.hpp"
#include "nco/problem.hpp"
#include "nco/rng.hpp"

namespace nco {

enum class EvalStrategy { kGreedy, kGreedyAug8, kSampling, kSgbs, kEas, kSgbsEas };

std::string strategy_name(EvalStrategy s);
EvalStrategy strategy_from_name(const std::string& s);

struct EvalConfig {
  EvalStrategy strategy = EvalStrategy::kGreedyAug8;
  int k = 128;  // sample count (sampling) / total adaptation iterations (eas, sgbs_eas)
  int sgbs_beta = 4;
  int sgbs_gamma = 4;  // expansion factor (beta*(gamma-1) children per step)
  int eas_iters_per_sgbs = 20;
  double eas_alpha = 5.0;
  double eas_lr = 1e-3;
  double time_budget = 0.0;  // seconds per instance; 0 = unlimited
  int num_starts = 0;        // 0 = one start per node / customer
  std::uint64_t seed = 0;

  void validate() const;
};

struct Solution {
  std::vector<int> actions;
  double cost = 0.0;
};

struct InstanceEval {
  std::string id;
  Solution best;
  std::optional<double> gap;
  std::vector<std::pair<int, double>> k_curve;  // (k, running best cost) at powers of two
  double sample_mean = 0.0;  // mean of the K raw sampled costs (sampling only)
  double sample_var = 0.0;   // variance of the K raw sampled costs
};

struct EvalResult {
  EvalStrategy strategy = EvalStrategy::kGreedy;
  std::vector<InstanceEval> per_instance;
  double mean_cost = 0.0;
  std::optional<double> mean_gap;
  std::vector<std::pair<int, double>> k_curve_mean;  // (k, mean running best cost)
  double wall_seconds = 0.0;
};

// Inference-time strategies over a loaded policy. Per-instance adaptation
// (EAS) always works on a private parameter copy; the checkpoint parameters
// are never mutated.
class Evaluator {
 public:
  explicit Evaluator(const Policy<float>& policy) : policy_(policy) {}

  int default_starts(const ProblemInstance& inst, int requested) const;

  Solution greedy_multistart(const ProblemInstance& inst, int n_starts) const;

  // Best greedy rollout over the 8 dihedral transforms; cost reported in the
  // input instance's coordinates.
  Solution greedy_aug8(const ProblemInstance& inst, int n_starts) const;

  struct SamplingOut {
    Solution best;
    std::vector<double> running_best;  // after each of the K samples
    std::vector<double> raw_costs;     // the K sampled costs in draw order
  };
  // K sampled rollouts spread round-robin across the starts.
  SamplingOut sampling(const ProblemInstance& inst, int k, int n_starts, Rng& rng) const;

  struct SgbsOut {
    Solution best;
    std::vector<Solution> beam;        // the final beta completed solutions
    std::vector<Solution> candidates;  // every completion seen
  };
  // Simulation-guided beam search: width beta; each entry expands to its top
  // (gamma-1) actions by policy probability; each expansion is scored by a
  // greedy-rollout completion; the best beta children survive. The search
  // runs from the first start node, so (beta=1, gamma=2) is exactly the
  // single greedy rollout.
  SgbsOut sgbs(const ProblemInstance& inst, int beta, int gamma) const;

  struct EasOut {
    Solution best;
    ParamSet<float> adapted_params;
    std::vector<double> incumbent_trace;  // best cost after each iteration
    bool reverted = false;                // non-finite loss rolled the params back
  };
  // Test-time adaptation of the decoder parameters on one instance: each
  // iteration runs multi-start sampling rollouts, applies the main-phase
  // leader shaping at eas_alpha, and takes one Adam step. The incumbent is
  // the best sampled solution across iterations; iters = 0 falls back to the
  // unadapted greedy solution.
  EasOut eas_leader(const ProblemInstance& inst, int iters, double eas_alpha, double eas_lr,
                    Rng& rng, int n_starts) const;

  // Alternates EAS iterations with full SGBS passes (one pass after every
  // eas_iters_per_sgbs iterations) under a shared incumbent, which starts at
  // the unadapted greedy solution. The time budget is honored at iteration
  // granularity.
  Solution sgbs_eas(const ProblemInstance& inst, const EvalConfig& cfg, Rng& rng) const;

  EvalResult evaluate(const std::vector<ProblemInstance>& instances,
                      const std::vector<std::optional<double>>& optima,
                      const EvalConfig& cfg) const;

  const Policy<float>& policy() const { return policy_; }

 private:
  struct SgbsPassOut;
  SgbsPassOut sgbs_with_params(const ParamSet<float>& params, const ProblemInstance& inst,
                               int beta, int gamma) const;

  const Policy<float>& policy_;
};

}  // namespace nco
