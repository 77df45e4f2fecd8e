#include "nco/train.hpp"

#include <cmath>
#include <thread>

#include "nco/oracle.hpp"

namespace nco {

void TrainConfig::validate() const {
  if (use_leader_reward && !(alpha > 1.0)) {
    throw ParameterError("train config: leader shaping requires alpha > 1 (got " +
                         std::to_string(alpha) + ")");
  }
  if (batch_size < 1) throw ParameterError("train config: batch_size must be >= 1");
  if (num_starts < 2) throw ParameterError("train config: num_starts must be >= 2");
  if (lr_main <= 0.0 || lr_final <= 0.0) {
    throw ParameterError("train config: learning rates must be positive");
  }
  if (steps_main < 0 || steps_final < 0) {
    throw ParameterError("train config: step counts must be non-negative");
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& [s, m] : lr_schedule) sched.push_back({s, m});
  return nlohmann::json{{"alpha", alpha},
                        {"use_leader_reward", use_leader_reward},
                        {"batch_size", batch_size},
                        {"num_starts", num_starts},
                        {"steps_main", steps_main},
                        {"steps_final", steps_final},
                        {"lr_main", lr_main},
                        {"lr_final", lr_final},
                        {"lr_schedule", sched},
                        {"seed", seed},
                        {"report_interval", report_interval},
                        {"checkpoint_interval", checkpoint_interval},
                        {"threads", threads},
                        {"deterministic", deterministic},
                        {"probe_instances", probe_instances},
                        {"probe_seed", probe_seed},
                        {"kind", kind_name(kind)},
                        {"problem_size", problem_size}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.use_leader_reward = j.at("use_leader_reward").get<bool>();
  c.batch_size = j.at("batch_size").get<int>();
  c.num_starts = j.at("num_starts").get<int>();
  c.steps_main = j.at("steps_main").get<int>();
  c.steps_final = j.at("steps_final").get<int>();
  c.lr_main = j.at("lr_main").get<double>();
  c.lr_final = j.at("lr_final").get<double>();
  for (const auto& e : j.at("lr_schedule")) {
    c.lr_schedule.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  c.report_interval = j.at("report_interval").get<int>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
  c.threads = j.at("threads").get<int>();
  c.deterministic = j.at("deterministic").get<bool>();
  c.probe_instances = j.at("probe_instances").get<int>();
  c.probe_seed = j.at("probe_seed").get<std::uint64_t>();
  c.kind = kind_from_name(j.at("kind").get<std::string>());
  c.problem_size = j.at("problem_size").get<int>();
  return c;
}

TrainConfig TrainConfig::from_config(const Config& cfg) {
  TrainConfig c;
  c.kind = kind_from_name(cfg.get_str("problem", "kind", "tsp"));
  c.problem_size = cfg.get_int("problem", "size", 10);
  c.use_leader_reward = cfg.get_bool("train", "use_leader_reward", true);
  if (c.use_leader_reward && !cfg.has("train", "alpha")) {
    throw ParseError("config: train.alpha is required for leader shaping (alpha > 1); set "
                     "train.use_leader_reward = false for the plain shared baseline");
  }
  c.alpha = cfg.get_double("train", "alpha", 5.0);
  c.batch_size = cfg.get_int("train", "batch_size", 32);
  c.num_starts = cfg.get_int("train", "num_starts", 10);
  c.steps_main = cfg.get_int("train", "steps_main", 2000);
  c.steps_final = cfg.get_int("train", "steps_final", 200);
  c.lr_main = cfg.get_double("train", "lr_main", 3e-4);
  c.lr_final = cfg.get_double("train", "lr_final", 0.55 * c.lr_main);
  c.lr_schedule = cfg.get_schedule("train", "lr_schedule");
  c.seed = static_cast<std::uint64_t>(cfg.get_int("train", "seed", 1));
  c.report_interval = cfg.get_int("train", "report_interval", 50);
  c.checkpoint_interval = cfg.get_int("train", "checkpoint_interval", 0);
  c.threads = cfg.get_int("train", "threads", 0);
  c.deterministic = cfg.get_bool("train", "deterministic", true);
  c.probe_instances = cfg.get_int("train", "probe_instances", 16);
  c.probe_seed = static_cast<std::uint64_t>(cfg.get_int("train", "probe_seed", 9000));
  c.validate();
  return c;
}

nlohmann::json PhaseReport::to_json() const {
  nlohmann::json j{{"step", step},
                   {"mean_reward", mean_reward},
                   {"entropy_mean", entropy_mean},
                   {"leader_logprob_mean", leader_logprob_mean},
                   {"max_logprob_mean", max_logprob_mean},
                   {"leader_lt_max_frac", leader_lt_max_frac},
                   {"cost_mean", cost_mean},
                   {"cost_var", cost_var}};
  if (best_of_n_gap.has_value()) {
    j["best_of_n_gap"] = *best_of_n_gap;
  } else {
    j["best_of_n_gap"] = nullptr;
  }
  return j;
}

Trainer::Trainer(TrainConfig cfg, PolicyConfig policy_cfg)
    : cfg_(cfg), policy_cfg_(policy_cfg) {
  cfg_.validate();
  policy_cfg_.validate();
  policy_ = std::make_unique<Policy<float>>(policy_cfg_, cfg_.kind);
}

void Trainer::init_fresh() {
  Rng rng = stream_for(cfg_.seed, RngStream::kInit);
  policy_->init_params(rng);
  adam_ = AdamState<float>::for_params(policy_->params());
  global_step_ = 0;
  phase_ = "main";
}

void Trainer::resume_from(const Checkpoint& ckpt) {
  restore_into(ckpt, *policy_, adam_);
  global_step_ = ckpt.header.at("step").get<std::int64_t>();
  phase_ = ckpt.header.value("phase", "main");
}

Checkpoint Trainer::make_checkpoint_now() const {
  nlohmann::json header;
  header["phase"] = phase_;
  header["step"] = global_step_;
  header["train"] = cfg_.to_json();
  header["problem"] = {{"kind", kind_name(cfg_.kind)}, {"size", cfg_.problem_size}};
  header["rng"] = {{"seed", cfg_.seed}, {"next_step", global_step_ + 1}};
  header["adam"] = {{"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}};
  return make_checkpoint(*policy_, adam_, std::move(header));
}

void Trainer::ensure_probe_set() {
  if (!probe_set_.empty() || cfg_.probe_instances <= 0) return;
  const bool oracle_ok = cfg_.kind == ProblemKind::kTsp && cfg_.problem_size <= 20;
  for (int i = 0; i < cfg_.probe_instances; ++i) {
    Rng rng = stream_for(cfg_.probe_seed, RngStream::kInstance, 0, static_cast<std::uint64_t>(i));
    ProblemInstance inst = sample_instance(cfg_.kind, cfg_.problem_size, rng);
    inst.id = "probe" + std::to_string(i);
    if (oracle_ok) probe_optima_.push_back(held_karp(inst).optimal_cost);
    probe_set_.push_back(std::move(inst));
  }
}

namespace {

struct InstanceOutcome {
  std::vector<double> rewards;          // N
  std::vector<Tensor<float>> grads;     // per parameter
  LeaderLogprob leader;
  double entropy_sum = 0.0;
  std::int64_t entropy_steps = 0;
  double loss = 0.0;
};

}  // namespace

std::vector<PhaseReport> Trainer::run_phase(Phase phase, int steps,
                                            const ReportSink& report_sink,
                                            const CheckpointSink& ckpt_sink) {
  ensure_probe_set();
  std::vector<PhaseReport> reports;
  const int B = cfg_.batch_size;
  const int N = cfg_.num_starts;
  int n_threads = cfg_.threads > 0 ? cfg_.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  if (n_threads > B) n_threads = B;

  AdamConfig<float> adam_cfg;
  const std::int64_t phase_start = global_step_;

  // Interval accumulators for the report rows.
  std::vector<double> acc_rewards;
  std::vector<LeaderLogprob> acc_leaders;
  double acc_entropy = 0.0;
  std::int64_t acc_entropy_steps = 0;

  for (int s = 0; s < steps; ++s) {
    const std::int64_t step = ++global_step_;
    const std::int64_t phase_step = step - phase_start;

    double lr = phase == Phase::kMain ? cfg_.lr_main : cfg_.lr_final;
    if (phase == Phase::kFinal) {
      for (const auto& [at, mult] : cfg_.lr_schedule) {
        if (phase_step >= at) lr = cfg_.lr_final * mult;
      }
    }
    adam_cfg.lr = static_cast<float>(lr);

    // Last-good snapshot: restored if this step produces non-finite numbers.
    ParamSet<float> params_before = policy_->params();
    AdamState<float> adam_before = adam_;

    std::vector<InstanceOutcome> outcomes(B);
    auto worker = [&](int w) {
      for (int i = w; i < B; i += n_threads) {
        Rng inst_rng = stream_for(cfg_.seed, RngStream::kInstance,
                                  static_cast<std::uint64_t>(step),
                                  static_cast<std::uint64_t>(i));
        ProblemInstance inst = sample_instance(cfg_.kind, cfg_.problem_size, inst_rng);
        const std::vector<int> starts = Policy<float>::select_start_nodes(inst, N);
        Rng roll_rng = stream_for(cfg_.seed, RngStream::kRollout,
                                  static_cast<std::uint64_t>(step),
                                  static_cast<std::uint64_t>(i));

        Tape<float> tape;
        auto pv = policy_->params().register_on(tape, /*grads=*/true);
        auto roll = policy_->rollout(tape, pv, inst, starts, RolloutMode::kSampling, &roll_rng);

        InstanceOutcome& out = outcomes[i];
        out.rewards.resize(N);
        for (int j = 0; j < N; ++j) out.rewards[j] = roll.trajectories[j].reward;

        AdvantageMatrix adv;
        if (phase == Phase::kFinal) {
          adv = compute_advantage_final(out.rewards, 1, N);
        } else if (cfg_.use_leader_reward) {
          adv = compute_advantage_main(out.rewards, 1, N, cfg_.alpha);
        } else {
          // Plain shared-baseline REINFORCE: advantage = R - b.
          adv.batch = 1;
          adv.n_starts = N;
          adv.leader_index.assign(1, 0);
          adv.values.resize(N);
          double mean = 0.0;
          for (double r : out.rewards) mean += r;
          mean /= N;
          for (int j = 0; j < N; ++j) adv.values[j] = out.rewards[j] - mean;
        }

        auto loss = surrogate_loss<float>(tape, roll.total_logprob, adv.values, B * N);
        out.loss = static_cast<double>(tape.val(loss).data[0]);
        tape.backward(loss);
        out.grads = policy_->params().collect_grads(tape, pv);
        out.leader = leader_logprob_telemetry(roll.trajectories);
        out.entropy_sum = roll.entropy_sum;
        out.entropy_steps = roll.entropy_steps;
      }
    };

    if (n_threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_threads);
      for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
      for (auto& t : pool) t.join();
    }

    try {
      double loss_total = 0.0;
      for (const auto& out : outcomes) loss_total += out.loss;
      if (!std::isfinite(loss_total)) {
        throw ContractError("train: non-finite loss at step " + std::to_string(step));
      }
      // Fixed-order reduction across instances, then one Adam step.
      std::vector<Tensor<float>> total = std::move(outcomes[0].grads);
      for (int i = 1; i < B; ++i) {
        for (std::size_t p = 0; p < total.size(); ++p) {
          const auto& g = outcomes[i].grads[p];
          for (std::size_t k = 0; k < g.data.size(); ++k) total[p].data[k] += g.data[k];
        }
      }
      adam_step(policy_->params(), total, adam_, adam_cfg);
    } catch (const ContractError&) {
      policy_->params() = params_before;
      adam_ = adam_before;
      throw;
    }

    for (const auto& out : outcomes) {
      acc_rewards.insert(acc_rewards.end(), out.rewards.begin(), out.rewards.end());
      acc_leaders.push_back(out.leader);
      acc_entropy += out.entropy_sum;
      acc_entropy_steps += out.entropy_steps;
    }

    const bool at_interval = cfg_.report_interval > 0 &&
                             (phase_step % cfg_.report_interval == 0 || s == steps - 1);
    if (at_interval) {
      PhaseReport rep = make_report(step, acc_rewards, acc_leaders, acc_entropy,
                                    acc_entropy_steps);
      reports.push_back(rep);
      if (report_sink) report_sink(rep);
      acc_rewards.clear();
      acc_leaders.clear();
      acc_entropy = 0.0;
      acc_entropy_steps = 0;
    }
    if (ckpt_sink && cfg_.checkpoint_interval > 0 &&
        phase_step % cfg_.checkpoint_interval == 0 && s != steps - 1) {
      ckpt_sink(make_checkpoint_now(), false);
    }
  }

  if (ckpt_sink) ckpt_sink(make_checkpoint_now(), true);
  return reports;
}

std::vector<PhaseReport> Trainer::run_main_phase(const ReportSink& report_sink,
                                                 const CheckpointSink& ckpt_sink) {
  phase_ = "main";
  return run_phase(Phase::kMain, cfg_.steps_main, report_sink, ckpt_sink);
}

std::vector<PhaseReport> Trainer::run_final_phase(const ReportSink& report_sink,
                                                  const CheckpointSink& ckpt_sink) {
  phase_ = "final";
  return run_phase(Phase::kFinal, cfg_.steps_final, report_sink, ckpt_sink);
}

PhaseReport Trainer::make_report(std::int64_t step, const std::vector<double>& rewards,
                                 const std::vector<LeaderLogprob>& lls, double entropy_sum,
                                 std::int64_t entropy_steps) {
  PhaseReport rep;
  rep.step = step;
  const int N = cfg_.num_starts;
  const std::size_t n_inst = lls.size();

  double sum = 0.0;
  for (double r : rewards) sum += r;
  rep.mean_reward = rewards.empty() ? 0.0 : sum / static_cast<double>(rewards.size());

  // Per-instance mean and variance of sampled costs, averaged over instances.
  double mu_acc = 0.0, var_acc = 0.0;
  for (std::size_t i = 0; i < n_inst; ++i) {
    double m = 0.0;
    for (int j = 0; j < N; ++j) m += -rewards[i * N + j];
    m /= N;
    double v = 0.0;
    for (int j = 0; j < N; ++j) {
      const double d = -rewards[i * N + j] - m;
      v += d * d;
    }
    v /= N;
    mu_acc += m;
    var_acc += v;
  }
  rep.cost_mean = n_inst ? mu_acc / static_cast<double>(n_inst) : 0.0;
  rep.cost_var = n_inst ? var_acc / static_cast<double>(n_inst) : 0.0;

  double ll = 0.0, ml = 0.0;
  std::size_t lt = 0;
  for (const auto& l : lls) {
    ll += l.leader_logprob;
    ml += l.max_logprob;
    if (l.leader_logprob < l.max_logprob) ++lt;
  }
  rep.leader_logprob_mean = n_inst ? ll / static_cast<double>(n_inst) : 0.0;
  rep.max_logprob_mean = n_inst ? ml / static_cast<double>(n_inst) : 0.0;
  rep.leader_lt_max_frac = n_inst ? static_cast<double>(lt) / static_cast<double>(n_inst) : 0.0;
  rep.entropy_mean = entropy_steps ? entropy_sum / static_cast<double>(entropy_steps) : 0.0;

  if (!probe_set_.empty() && !probe_optima_.empty()) {
    double gap_sum = 0.0;
    for (std::size_t i = 0; i < probe_set_.size(); ++i) {
      const ProblemInstance& inst = probe_set_[i];
      const auto starts = Policy<float>::select_start_nodes(
          inst, std::min(cfg_.num_starts, inst.kind == ProblemKind::kTsp
                                              ? inst.num_nodes()
                                              : inst.num_customers()));
      Tape<float> tape;
      auto pv = policy_->params().register_on(tape, /*grads=*/false);
      auto roll = policy_->rollout(tape, pv, inst, starts, RolloutMode::kGreedy, nullptr);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : roll.trajectories) best = std::min(best, -t.reward);
      gap_sum += gap_to(best, probe_optima_[i]);
    }
    rep.best_of_n_gap = gap_sum / static_cast<double>(probe_set_.size());
  }
  return rep;
}

}  // namespace nco
