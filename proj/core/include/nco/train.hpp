#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nco/adam.hpp"
#include "nco/advantage.hpp"
#include "nco/checkpoint.hpp"
#include "nco/config.hpp"
#include "nco/policy.hpp"
#include "nco/problem.hpp"
#include "nlohmann/json.hpp"

namespace nco {

struct TrainConfig {
  double alpha = 5.0;
  bool use_leader_reward = true;  // false = plain shared-baseline advantage R - b
  int batch_size = 32;
  int num_starts = 10;
  int steps_main = 2000;
  int steps_final = 200;
  double lr_main = 3e-4;
  double lr_final = 1.65e-4;  // 0.55 * lr_main, same ratio as the reference schedule
  std::vector<std::pair<int, double>> lr_schedule;  // final phase, phase-local steps
  std::uint64_t seed = 1;
  int report_interval = 50;
  int checkpoint_interval = 0;  // 0 = only at phase end
  int threads = 0;              // 0 = hardware concurrency
  bool deterministic = true;
  int probe_instances = 16;  // in-training greedy gap probe (exact oracle sizes only)
  std::uint64_t probe_seed = 9000;
  ProblemKind kind = ProblemKind::kTsp;
  int problem_size = 10;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_config(const Config& cfg);
};

struct PhaseReport {
  std::int64_t step = 0;
  double mean_reward = 0.0;
  std::optional<double> best_of_n_gap;  // greedy multi-start gap on the probe set
  double entropy_mean = 0.0;
  double leader_logprob_mean = 0.0;
  double max_logprob_mean = 0.0;
  double leader_lt_max_frac = 0.0;  // share of instances with leader lp < max lp
  double cost_mean = 0.0;           // mean over instances of mean sampled cost
  double cost_var = 0.0;            // mean over instances of sampled-cost variance

  nlohmann::json to_json() const;
};

using ReportSink = std::function<void(const PhaseReport&)>;
using CheckpointSink = std::function<void(const Checkpoint&, bool final_of_phase)>;

// Multi-start REINFORCE trainer with leader-shaped advantages. One optimizer
// step at a time; rollouts within a step run across worker threads with a
// fixed-order gradient reduction, so results are bit-reproducible for a
// given seed regardless of thread count.
class Trainer {
 public:
  Trainer(TrainConfig cfg, PolicyConfig policy_cfg);

  void init_fresh();
  void resume_from(const Checkpoint& ckpt);

  // Algorithm: T steps of sample -> multi-start sampling rollouts -> shaped
  // advantages -> surrogate loss -> Adam. Throws ContractError on a
  // non-finite loss after restoring the last good parameters.
  std::vector<PhaseReport> run_main_phase(const ReportSink& report_sink = nullptr,
                                          const CheckpointSink& ckpt_sink = nullptr);

  // Final phase: only the leader keeps gradient signal (the alpha = +inf
  // limit), at lr_final scaled by the lr_schedule.
  std::vector<PhaseReport> run_final_phase(const ReportSink& report_sink = nullptr,
                                           const CheckpointSink& ckpt_sink = nullptr);

  Checkpoint make_checkpoint_now() const;

  Policy<float>& policy() { return *policy_; }
  const Policy<float>& policy() const { return *policy_; }
  const TrainConfig& config() const { return cfg_; }
  std::int64_t global_step() const { return global_step_; }
  std::string phase() const { return phase_; }

 private:
  enum class Phase { kMain, kFinal };
  std::vector<PhaseReport> run_phase(Phase phase, int steps, const ReportSink& report_sink,
                                     const CheckpointSink& ckpt_sink);
  PhaseReport make_report(std::int64_t step, const std::vector<double>& rewards,
                          const std::vector<LeaderLogprob>& lls, double entropy_sum,
                          std::int64_t entropy_steps);
  void ensure_probe_set();

  TrainConfig cfg_;
  PolicyConfig policy_cfg_;
  std::unique_ptr<Policy<float>> policy_;
  AdamState<float> adam_;
  std::int64_t global_step_ = 0;
  std::string phase_ = "main";

  std::vector<ProblemInstance> probe_set_;
  std::vector<double> probe_optima_;
};

}  // namespace nco
