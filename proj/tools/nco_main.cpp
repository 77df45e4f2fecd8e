// Command-line front end: train / finalize / eval / oracle / sweep.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nco/checkpoint.hpp"
#include "nco/config.hpp"
#include "nco/errors.hpp"
#include "nco/eval.hpp"
#include "nco/manifest.hpp"
#include "nco/oracle.hpp"
#include "nco/policy.hpp"
#include "nco/train.hpp"
#include "nco/tsplib.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using namespace nco;

namespace {

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("NCO_OUT_DIR")) return env;
  return "out";
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

PolicyConfig policy_from_config(const Config& cfg) {
  PolicyConfig p;
  p.embed_dim = cfg.get_int("policy", "embed_dim", 64);
  p.num_heads = cfg.get_int("policy", "num_heads", 4);
  p.num_encoder_layers = cfg.get_int("policy", "num_encoder_layers", 2);
  p.ff_dim = cfg.get_int("policy", "ff_dim", 128);
  p.logit_clip = cfg.get_double("policy", "logit_clip", 10.0);
  p.validate();
  return p;
}

// The resolved key-value view of a run, echoed into the manifest.
Config effective_config(const TrainConfig& t, const PolicyConfig& p) {
  Config cfg;
  cfg.set("problem", "kind", kind_name(t.kind));
  cfg.set("problem", "size", std::to_string(t.problem_size));
  cfg.set("policy", "embed_dim", std::to_string(p.embed_dim));
  cfg.set("policy", "num_heads", std::to_string(p.num_heads));
  cfg.set("policy", "num_encoder_layers", std::to_string(p.num_encoder_layers));
  cfg.set("policy", "ff_dim", std::to_string(p.ff_dim));
  cfg.set("policy", "logit_clip", std::to_string(p.logit_clip));
  cfg.set("train", "alpha", std::to_string(t.alpha));
  cfg.set("train", "use_leader_reward", t.use_leader_reward ? "true" : "false");
  cfg.set("train", "batch_size", std::to_string(t.batch_size));
  cfg.set("train", "num_starts", std::to_string(t.num_starts));
  cfg.set("train", "steps_main", std::to_string(t.steps_main));
  cfg.set("train", "steps_final", std::to_string(t.steps_final));
  cfg.set("train", "lr_main", std::to_string(t.lr_main));
  cfg.set("train", "lr_final", std::to_string(t.lr_final));
  std::string sched;
  for (const auto& [s, m] : t.lr_schedule) {
    if (!sched.empty()) sched += ",";
    sched += std::to_string(s) + ":" + std::to_string(m);
  }
  if (!sched.empty()) cfg.set("train", "lr_schedule", sched);
  cfg.set("train", "seed", std::to_string(t.seed));
  cfg.set("train", "report_interval", std::to_string(t.report_interval));
  cfg.set("train", "checkpoint_interval", std::to_string(t.checkpoint_interval));
  cfg.set("train", "threads", std::to_string(t.threads));
  cfg.set("train", "deterministic", t.deterministic ? "true" : "false");
  cfg.set("train", "probe_instances", std::to_string(t.probe_instances));
  cfg.set("train", "probe_seed", std::to_string(t.probe_seed));
  return cfg;
}

struct InstanceSet {
  std::vector<ProblemInstance> eval_instances;  // unit-square coordinates
  std::vector<ProblemInstance> raw_instances;   // original coordinates (tsplib/cvrplib)
  std::vector<std::optional<double>> optima;    // reference or exact optima
  bool rounded_metric = false;                  // gaps use the TSPLib integer metric
};

InstanceSet load_generated(ProblemKind kind, int size, int count, std::uint64_t seed,
                           bool with_oracle) {
  InstanceSet set;
  for (int i = 0; i < count; ++i) {
    Rng rng = stream_for(seed, RngStream::kInstance, 0, static_cast<std::uint64_t>(i));
    ProblemInstance inst = sample_instance(kind, size, rng);
    inst.id = "gen" + std::to_string(i);
    if (with_oracle && kind == ProblemKind::kTsp && inst.num_nodes() <= 20) {
      set.optima.push_back(held_karp(inst).optimal_cost);
    } else {
      set.optima.push_back(std::nullopt);
    }
    set.eval_instances.push_back(std::move(inst));
  }
  return set;
}

std::map<std::string, double> load_ref_optima(const std::string& path) {
  std::map<std::string, double> out;
  if (path.empty()) return out;
  auto j = nlohmann::json::parse(slurp(path));
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<double>();
  return out;
}

InstanceSet load_library_dir(const std::string& dir, bool cvrp, const std::string& ref_path) {
  InstanceSet set;
  set.rounded_metric = true;
  const auto ref = load_ref_optima(ref_path);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if ((cvrp && ext == ".vrp") || (!cvrp && ext == ".tsp")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ParameterError("no " + std::string(cvrp ? ".vrp" : ".tsp") + " files in '" + dir + "'");
  }
  for (const auto& f : files) {
    ProblemInstance raw =
        cvrp ? parse_cvrplib(slurp(f.string())) : parse_tsplib(slurp(f.string()));
    if (raw.id.empty()) raw.id = f.stem().string();
    auto it = ref.find(raw.id);
    set.optima.push_back(it == ref.end() ? std::nullopt : std::optional<double>(it->second));
    set.eval_instances.push_back(rescale_to_unit(raw));
    set.raw_instances.push_back(std::move(raw));
  }
  return set;
}

InstanceSet load_json_instances(const std::string& file) {
  InstanceSet set;
  std::istringstream in(slurp(file));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    ProblemInstance inst = instance_from_json(line);
    set.optima.push_back(inst.kind == ProblemKind::kTsp && inst.num_nodes() <= 20
                             ? std::optional<double>(held_karp(inst).optimal_cost)
                             : std::nullopt);
    set.eval_instances.push_back(std::move(inst));
  }
  if (set.eval_instances.empty()) throw ParseError("no instances in '" + file + "'");
  return set;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::string resume;
  int seed = -1;
  int threads = -1;
  bool deterministic = false;
};

int run_train(const TrainArgs& args) {
  Config file_cfg = Config::from_file(args.config_path);
  TrainConfig tcfg = TrainConfig::from_config(file_cfg);
  PolicyConfig pcfg = policy_from_config(file_cfg);
  if (args.seed >= 0) tcfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads >= 0) tcfg.threads = args.threads;
  if (args.deterministic) tcfg.deterministic = true;

  const std::string out_dir = resolve_out_dir(args.out_dir);
  fs::create_directories(out_dir);

  Trainer trainer(tcfg, pcfg);
  if (!args.resume.empty()) {
    trainer.resume_from(load_checkpoint(args.resume));
    std::cout << "resumed from step " << trainer.global_step() << "\n";
  } else {
    trainer.init_fresh();
  }

  RunManifest manifest(out_dir, "train");
  manifest.set_seed("train", tcfg.seed);
  manifest.set_effective_config(effective_config(tcfg, pcfg).to_text());

  std::ofstream reports(out_dir + "/reports_main.jsonl");
  auto report_sink = [&](const PhaseReport& r) {
    reports << r.to_json().dump() << "\n";
    std::cout << "step " << r.step << " mean_reward " << r.mean_reward;
    if (r.best_of_n_gap) std::cout << " probe_gap " << *r.best_of_n_gap;
    std::cout << std::endl;
  };
  auto ckpt_sink = [&](const Checkpoint& c, bool final_of_phase) {
    const std::string name = final_of_phase
                                 ? "checkpoint_main.ckpt"
                                 : "checkpoint_step" + std::to_string(c.step()) + ".ckpt";
    save_checkpoint(c, out_dir + "/" + name);
    if (!final_of_phase) manifest.add_file(name);
  };

  try {
    trainer.run_main_phase(report_sink, ckpt_sink);
  } catch (const ContractError& e) {
    // Non-finite loss: the trainer restored the last good state; keep it.
    reports.flush();
    save_checkpoint(trainer.make_checkpoint_now(), out_dir + "/checkpoint_abort.ckpt");
    std::cerr << "training aborted: " << e.what()
              << " (last good checkpoint written to checkpoint_abort.ckpt)\n";
    return 3;
  }
  reports.close();

  manifest.add_file("reports_main.jsonl");
  manifest.add_file("checkpoint_main.ckpt");
  manifest.write();
  std::cout << "wrote " << out_dir << "/checkpoint_main.ckpt\n";
  return 0;
}

// ---- finalize ----------------------------------------------------------------

struct FinalizeArgs {
  std::string checkpoint;
  std::string config_path;
  std::string out_dir;
  int seed = -1;
};

int run_finalize(const FinalizeArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (ckpt.phase() == "final") {
    std::cerr << "warning: checkpoint is already final-phase; re-finalizing\n";
  }
  TrainConfig tcfg = TrainConfig::from_json(ckpt.header.at("train"));
  PolicyConfig pcfg = policy_config_from_json(ckpt.header.at("policy"));
  if (!args.config_path.empty()) {
    Config file_cfg = Config::from_file(args.config_path);
    tcfg.steps_final = file_cfg.get_int("train", "steps_final", tcfg.steps_final);
    tcfg.lr_final = file_cfg.get_double("train", "lr_final", tcfg.lr_final);
    if (file_cfg.has("train", "lr_schedule")) {
      tcfg.lr_schedule = file_cfg.get_schedule("train", "lr_schedule");
    }
    tcfg.report_interval = file_cfg.get_int("train", "report_interval", tcfg.report_interval);
    tcfg.threads = file_cfg.get_int("train", "threads", tcfg.threads);
  }
  if (args.seed >= 0) tcfg.seed = static_cast<std::uint64_t>(args.seed);

  const std::string out_dir = resolve_out_dir(args.out_dir);
  fs::create_directories(out_dir);

  Trainer trainer(tcfg, pcfg);
  trainer.resume_from(ckpt);

  RunManifest manifest(out_dir, "finalize");
  manifest.set_seed("train", tcfg.seed);
  manifest.set_effective_config(effective_config(tcfg, pcfg).to_text());

  std::ofstream reports(out_dir + "/reports_final.jsonl");
  auto report_sink = [&](const PhaseReport& r) {
    reports << r.to_json().dump() << "\n";
    std::cout << "step " << r.step << " mean_reward " << r.mean_reward << " cost_var "
              << r.cost_var << std::endl;
  };
  try {
    trainer.run_final_phase(report_sink, nullptr);
  } catch (const ContractError& e) {
    reports.flush();
    save_checkpoint(trainer.make_checkpoint_now(), out_dir + "/checkpoint_abort.ckpt");
    std::cerr << "finalize aborted: " << e.what() << "\n";
    return 3;
  }
  reports.close();

  save_checkpoint(trainer.make_checkpoint_now(), out_dir + "/checkpoint_final.ckpt");
  manifest.add_file("reports_final.jsonl");
  manifest.add_file("checkpoint_final.ckpt");
  manifest.write();
  std::cout << "wrote " << out_dir << "/checkpoint_final.ckpt\n";
  return 0;
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string strategy = "greedy_aug8";
  std::string source = "generated";
  std::string dir;
  std::string file;
  std::string ref_optima;
  std::string out_dir;
  int count = 200;
  int size = 10;
  std::string kind = "tsp";
  int instance_seed = 4242;
  int k = 128;
  double alpha = -1.0;
  double eas_lr = -1.0;
  int sgbs_beta = -1, sgbs_gamma = -1, eas_iters = -1;
  int num_starts = 0;
  double time_budget = 0.0;
  int eval_seed = 0;
};

std::unique_ptr<Policy<float>> policy_from_checkpoint(const Checkpoint& ckpt,
                                                      TrainConfig* tcfg_out = nullptr) {
  TrainConfig tcfg = TrainConfig::from_json(ckpt.header.at("train"));
  PolicyConfig pcfg = policy_config_from_json(ckpt.header.at("policy"));
  auto policy = std::make_unique<Policy<float>>(pcfg, tcfg.kind);
  AdamState<float> adam;
  restore_into(ckpt, *policy, adam);
  if (tcfg_out) *tcfg_out = tcfg;
  return policy;
}

int run_eval(const EvalArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  TrainConfig tcfg;
  auto policy = policy_from_checkpoint(ckpt, &tcfg);

  EvalConfig ecfg;
  ecfg.strategy = strategy_from_name(args.strategy);
  ecfg.k = args.k;
  ecfg.num_starts = args.num_starts;
  ecfg.seed = static_cast<std::uint64_t>(args.eval_seed);
  ecfg.time_budget = args.time_budget;
  const bool cvrp_ckpt = tcfg.kind == ProblemKind::kCvrp;
  ecfg.sgbs_beta = args.sgbs_beta > 0 ? args.sgbs_beta : (cvrp_ckpt ? 4 : 10);
  ecfg.sgbs_gamma = args.sgbs_gamma > 0 ? args.sgbs_gamma : (cvrp_ckpt ? 4 : 10);
  ecfg.eas_iters_per_sgbs = args.eas_iters > 0 ? args.eas_iters : (cvrp_ckpt ? 3 : 20);
  ecfg.eas_alpha = args.alpha > 0 ? args.alpha : std::max(tcfg.alpha, 1.5);
  ecfg.eas_lr = args.eas_lr > 0 ? args.eas_lr : 1e-3;
  ecfg.validate();

  InstanceSet set;
  if (args.source == "generated") {
    set = load_generated(kind_from_name(args.kind), args.size, args.count,
                         static_cast<std::uint64_t>(args.instance_seed), true);
  } else if (args.source == "tsplib") {
    set = load_library_dir(args.dir, false, args.ref_optima);
  } else if (args.source == "cvrplib") {
    set = load_library_dir(args.dir, true, args.ref_optima);
  } else if (args.source == "json") {
    set = load_json_instances(args.file);
  } else {
    throw ParameterError("unknown --source '" + args.source + "'");
  }

  const std::string out_dir = resolve_out_dir(args.out_dir);
  fs::create_directories(out_dir);

  Evaluator ev(*policy);
  EvalResult res = ev.evaluate(set.eval_instances, set.optima, ecfg);

  // Per-instance rows; library sources report costs and gaps in raw
  // coordinates under the TSPLib integer-rounded metric.
  const std::string tag = strategy_name(ecfg.strategy);
  const std::string jsonl_name = "eval_" + tag + ".jsonl";
  std::ofstream jsonl(out_dir + "/" + jsonl_name);
  double gap_sum = 0.0, cost_sum = 0.0, mu_sum = 0.0, sigma_sum = 0.0;
  int gap_count = 0;
  for (std::size_t i = 0; i < res.per_instance.size(); ++i) {
    const auto& row = res.per_instance[i];
    nlohmann::json j;
    j["id"] = row.id;
    j["strategy"] = tag;
    double display_cost = row.best.cost;
    std::optional<double> display_gap = row.gap;
    if (set.rounded_metric) {
      const auto& raw = set.raw_instances[i];
      const auto rounded = raw.kind == ProblemKind::kTsp
                               ? tsplib_tour_cost(row.best.actions, raw)
                               : tsplib_route_cost(row.best.actions, raw);
      display_cost = static_cast<double>(rounded);
      display_gap = set.optima[i]
                        ? std::optional<double>(gap_to(display_cost, *set.optima[i]))
                        : std::nullopt;
    }
    j["cost"] = display_cost;
    if (display_gap) {
      j["gap"] = *display_gap;
      gap_sum += *display_gap;
      ++gap_count;
    } else {
      j["gap"] = nullptr;
    }
    j["actions"] = row.best.actions;
    if (!row.k_curve.empty()) {
      nlohmann::json kc = nlohmann::json::array();
      for (const auto& [kk, vv] : row.k_curve) kc.push_back({kk, vv});
      j["k_curve"] = std::move(kc);
      j["sample_mean"] = row.sample_mean;
      j["sample_var"] = row.sample_var;
      mu_sum += row.sample_mean;
      sigma_sum += row.sample_var;
    }
    jsonl << j.dump() << "\n";
    cost_sum += display_cost;
  }
  jsonl.close();

  const double n = static_cast<double>(res.per_instance.size());
  const bool is_sampling = ecfg.strategy == EvalStrategy::kSampling;
  const std::string csv_name = "eval_" + tag + "_summary.csv";
  {
    std::ofstream csv(out_dir + "/" + csv_name);
    csv << "strategy,instances,mean_cost,mean_gap,sample_mu,sample_sigma,wall_seconds\n";
    csv << tag << "," << res.per_instance.size() << "," << cost_sum / n << ",";
    if (gap_count == static_cast<int>(res.per_instance.size())) {
      csv << gap_sum / n;
    } else {
      csv << "n/a";
    }
    if (is_sampling) {
      csv << "," << mu_sum / n << "," << sigma_sum / n;
    } else {
      csv << ",n/a,n/a";
    }
    csv << "," << res.wall_seconds << "\n";
  }

  RunManifest manifest(out_dir, "eval");
  manifest.set_seed("eval", ecfg.seed);
  manifest.set_seed("instances", static_cast<std::uint64_t>(args.instance_seed));
  Config echo;
  echo.set("eval", "strategy", tag);
  echo.set("eval", "k", std::to_string(ecfg.k));
  echo.set("eval", "sgbs_beta", std::to_string(ecfg.sgbs_beta));
  echo.set("eval", "sgbs_gamma", std::to_string(ecfg.sgbs_gamma));
  echo.set("eval", "eas_iters_per_sgbs", std::to_string(ecfg.eas_iters_per_sgbs));
  echo.set("eval", "eas_alpha", std::to_string(ecfg.eas_alpha));
  echo.set("eval", "eas_lr", std::to_string(ecfg.eas_lr));
  echo.set("eval", "time_budget", std::to_string(ecfg.time_budget));
  echo.set("eval", "num_starts", std::to_string(ecfg.num_starts));
  manifest.set_effective_config(echo.to_text());
  manifest.add_file(jsonl_name);
  manifest.add_file(csv_name);

  if (!res.k_curve_mean.empty()) {
    const std::string kcsv_name = "kcurve_" + tag + ".csv";
    std::ofstream csv(out_dir + "/" + kcsv_name);
    csv << "k,mean_cost,mean_gap\n";
    for (std::size_t c = 0; c < res.k_curve_mean.size(); ++c) {
      const auto& [kk, vv] = res.k_curve_mean[c];
      csv << kk << "," << vv << ",";
      if (gap_count == static_cast<int>(res.per_instance.size()) && !set.rounded_metric) {
        double g = 0.0;
        for (std::size_t i = 0; i < res.per_instance.size(); ++i) {
          g += res.per_instance[i].k_curve[c].second / *set.optima[i] - 1.0;
        }
        csv << g / n;
      } else {
        csv << "n/a";
      }
      csv << "\n";
    }
    manifest.add_file(kcsv_name);
  }
  manifest.write();

  std::cout << "strategy " << tag << " instances " << res.per_instance.size() << " mean_cost "
            << cost_sum / n;
  if (gap_count == static_cast<int>(res.per_instance.size())) {
    std::cout << " mean_gap " << gap_sum / n;
  }
  std::cout << " wall_s " << res.wall_seconds << "\n";
  return 0;
}

// ---- oracle ------------------------------------------------------------------

struct OracleArgs {
  std::string source = "generated";
  std::string dir, file, out = "optima.json";
  int count = 50;
  int size = 10;
  int instance_seed = 4242;
};

int run_oracle(const OracleArgs& args) {
  InstanceSet set;
  if (args.source == "generated") {
    set = load_generated(ProblemKind::kTsp, args.size, args.count,
                         static_cast<std::uint64_t>(args.instance_seed), false);
  } else if (args.source == "tsplib") {
    set = load_library_dir(args.dir, false, "");
  } else if (args.source == "json") {
    set = load_json_instances(args.file);
  } else {
    throw ParameterError("unknown --source '" + args.source + "'");
  }

  nlohmann::json out = nlohmann::json::object();
  const auto& insts = set.raw_instances.empty() ? set.eval_instances : set.raw_instances;
  for (const auto& inst : insts) {
    if (inst.kind != ProblemKind::kTsp || inst.num_nodes() > 20) {
      std::cerr << "skipping " << inst.id << ": exact oracle capped at TSP n <= 20\n";
      continue;
    }
    auto r = held_karp(inst);
    out[inst.id] = {{"cost", r.optimal_cost}, {"tour", r.optimal_tour}};
  }
  std::ofstream f(args.out);
  if (!f) throw ParseError("cannot write '" + args.out + "'");
  f << out.dump(2) << "\n";
  std::cout << "wrote " << out.size() << " optima to " << args.out << "\n";
  return 0;
}

// ---- sweep -------------------------------------------------------------------

struct SweepArgs {
  std::string config_path;
  std::string out_dir;
  std::string alpha_list;
  std::string gamma_list;
  bool ablation = false;
  int seed = -1;
};

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

struct HeldOutRow {
  double mean_cost = 0.0;
  double mean_gap = 0.0;
  double mu = 0.0;     // mean sampled cost
  double sigma = 0.0;  // variance of sampled costs
};

// Greedy gap plus Table-6-style sampled mean/variance on a seeded held-out set.
HeldOutRow held_out_eval(const Policy<float>& policy, const TrainConfig& tcfg, int count,
                         std::uint64_t held_seed, bool with_sampling) {
  InstanceSet set = load_generated(tcfg.kind, tcfg.problem_size, count, held_seed, true);
  Evaluator ev(policy);
  HeldOutRow out;
  for (std::size_t i = 0; i < set.eval_instances.size(); ++i) {
    const auto& inst = set.eval_instances[i];
    const int ns = ev.default_starts(inst, tcfg.num_starts);
    auto sol = ev.greedy_multistart(inst, ns);
    out.mean_cost += sol.cost;
    if (set.optima[i]) out.mean_gap += gap_to(sol.cost, *set.optima[i]);
    if (with_sampling) {
      Rng rng = stream_for(held_seed, RngStream::kEval, i);
      Tape<float> tape;
      auto pv = policy.params().register_on(tape, false);
      auto roll = policy.rollout(tape, pv, inst, Policy<float>::select_start_nodes(inst, ns),
                                 RolloutMode::kSampling, &rng);
      double m = 0.0;
      for (const auto& t : roll.trajectories) m += -t.reward;
      m /= static_cast<double>(roll.trajectories.size());
      double v = 0.0;
      for (const auto& t : roll.trajectories) v += (-t.reward - m) * (-t.reward - m);
      v /= static_cast<double>(roll.trajectories.size());
      out.mu += m;
      out.sigma += v;
    }
  }
  const double n = static_cast<double>(set.eval_instances.size());
  out.mean_cost /= n;
  out.mean_gap /= n;
  out.mu /= n;
  out.sigma /= n;
  return out;
}

int run_sweep(const SweepArgs& args) {
  Config file_cfg = Config::from_file(args.config_path);
  TrainConfig base = TrainConfig::from_config(file_cfg);
  PolicyConfig pcfg = policy_from_config(file_cfg);
  if (args.seed >= 0) base.seed = static_cast<std::uint64_t>(args.seed);
  const std::string out_dir = resolve_out_dir(args.out_dir);
  fs::create_directories(out_dir);
  const int held_count = file_cfg.get_int("eval", "held_out_count", 100);
  const std::uint64_t held_seed =
      static_cast<std::uint64_t>(file_cfg.get_int("eval", "held_out_seed", 9100));

  RunManifest manifest(out_dir, "sweep");
  manifest.set_seed("train", base.seed);
  manifest.set_effective_config(effective_config(base, pcfg).to_text());

  if (!args.alpha_list.empty()) {
    const auto alphas = parse_list(args.alpha_list);
    if (alphas.size() < 2) throw ParameterError("sweep: need at least 2 alpha values");
    for (double a : alphas) {
      TrainConfig cfg = base;
      cfg.alpha = a;
      cfg.use_leader_reward = true;
      Trainer tr(cfg, pcfg);
      tr.init_fresh();
      std::ostringstream name;
      name << "sweep_alpha_" << a << ".csv";
      std::ofstream csv(out_dir + "/" + name.str());
      csv << "step,mean_reward,best_of_n_gap\n";
      tr.run_main_phase([&](const PhaseReport& r) {
        csv << r.step << "," << r.mean_reward << ","
            << (r.best_of_n_gap ? std::to_string(*r.best_of_n_gap) : "n/a") << "\n";
      });
      csv.close();
      manifest.add_file(name.str());
      std::cout << "alpha " << a << " done\n";
    }
    manifest.write();
    return 0;
  }

  if (!args.gamma_list.empty()) {
    const auto gammas = parse_list(args.gamma_list);
    if (gammas.size() < 2) throw ParameterError("sweep: need at least 2 gamma values");
    // One shared main phase, then a final phase per learning rate.
    Trainer main_tr(base, pcfg);
    main_tr.init_fresh();
    main_tr.run_main_phase();
    Checkpoint main_ckpt = main_tr.make_checkpoint_now();

    std::ofstream csv(out_dir + "/sweep_gamma.csv");
    csv << "gamma,cost_no_aug,gap,mu,sigma\n";
    auto row = held_out_eval(main_tr.policy(), base, held_count, held_seed, true);
    csv << "main_only," << row.mean_cost << "," << row.mean_gap << "," << row.mu << ","
        << row.sigma << "\n";
    for (double g : gammas) {
      TrainConfig cfg = base;
      cfg.lr_final = g;
      Trainer tr(cfg, pcfg);
      tr.resume_from(main_ckpt);
      tr.run_final_phase();
      auto r = held_out_eval(tr.policy(), base, held_count, held_seed, true);
      csv << g << "," << r.mean_cost << "," << r.mean_gap << "," << r.mu << "," << r.sigma
          << "\n";
      std::cout << "gamma " << g << " gap " << r.mean_gap << " sigma " << r.sigma << "\n";
    }
    csv.close();
    manifest.add_file("sweep_gamma.csv");
    manifest.write();
    return 0;
  }

  if (args.ablation) {
    // Four-way ablation: leader shaping in {both, final only, main only, neither}.
    TrainConfig lr_cfg = base;
    lr_cfg.use_leader_reward = true;
    TrainConfig pomo_cfg = base;
    pomo_cfg.use_leader_reward = false;

    Trainer lr_main(lr_cfg, pcfg);
    lr_main.init_fresh();
    lr_main.run_main_phase();
    Checkpoint lr_main_ckpt = lr_main.make_checkpoint_now();

    Trainer pomo_main(pomo_cfg, pcfg);
    pomo_main.init_fresh();
    pomo_main.run_main_phase();
    Checkpoint pomo_main_ckpt = pomo_main.make_checkpoint_now();

    Trainer lr_full(lr_cfg, pcfg);
    lr_full.resume_from(lr_main_ckpt);
    lr_full.run_final_phase();

    Trainer wo_main(pomo_cfg, pcfg);
    wo_main.resume_from(pomo_main_ckpt);
    wo_main.run_final_phase();

    struct AblationRow {
      const char* label;
      const Policy<float>* policy;
    };
    const AblationRow rows[] = {{"lr", &lr_full.policy()},
                                {"wo_main", &wo_main.policy()},
                                {"wo_final", &lr_main.policy()},
                                {"neither", &pomo_main.policy()}};
    std::ofstream csv(out_dir + "/ablation.csv");
    csv << "variant,mean_cost,mean_gap\n";
    for (const auto& r : rows) {
      auto he = held_out_eval(*r.policy, base, held_count, held_seed, false);
      csv << r.label << "," << he.mean_cost << "," << he.mean_gap << "\n";
      std::cout << r.label << " gap " << he.mean_gap << "\n";
    }
    csv.close();
    manifest.add_file("ablation.csv");
    manifest.write();
    return 0;
  }

  throw ParameterError("sweep: pass --alpha-list, --sweep-gamma, or --ablation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural combinatorial optimization toolkit: multi-start REINFORCE with "
               "leader-shaped advantages, exact oracles, and inference strategies"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Run the main training phase");
  train->add_option("--config", train_args.config_path, "config file")->required();
  train->add_option("--seed", train_args.seed, "override train.seed");
  train->add_option("--out-dir", train_args.out_dir, "output directory (or $NCO_OUT_DIR)");
  train->add_option("--threads", train_args.threads, "worker threads (0 = hardware)");
  train->add_option("--resume", train_args.resume, "checkpoint to resume from");
  train->add_flag("--deterministic", train_args.deterministic, "force deterministic mode");

  FinalizeArgs fin_args;
  auto* fin = app.add_subcommand("finalize", "Run the final training phase on a checkpoint");
  fin->add_option("--checkpoint", fin_args.checkpoint)->required();
  fin->add_option("--config", fin_args.config_path, "config overriding final-phase settings");
  fin->add_option("--seed", fin_args.seed);
  fin->add_option("--out-dir", fin_args.out_dir);

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint with an inference strategy");
  ev->add_option("--checkpoint", eval_args.checkpoint)->required();
  ev->add_option("--strategy", eval_args.strategy,
                 "greedy|greedy_aug8|sampling|sgbs|eas|sgbs_eas");
  ev->add_option("--source", eval_args.source, "generated|tsplib|cvrplib|json");
  ev->add_option("--dir", eval_args.dir, "library directory (tsplib/cvrplib)");
  ev->add_option("--file", eval_args.file, "instance JSONL file");
  ev->add_option("--ref-optima", eval_args.ref_optima, "reference optima JSON");
  ev->add_option("--count", eval_args.count, "generated instance count");
  ev->add_option("--size", eval_args.size, "generated instance size");
  ev->add_option("--kind", eval_args.kind, "generated instance kind (tsp|cvrp)");
  ev->add_option("--instance-seed", eval_args.instance_seed);
  ev->add_option("--K", eval_args.k, "samples / adaptation iterations");
  ev->add_option("--alpha", eval_args.alpha, "leader multiplier for test-time adaptation");
  ev->add_option("--eas-lr", eval_args.eas_lr);
  ev->add_option("--sgbs-beta", eval_args.sgbs_beta);
  ev->add_option("--sgbs-gamma", eval_args.sgbs_gamma);
  ev->add_option("--eas-iters-per-sgbs", eval_args.eas_iters);
  ev->add_option("--num-starts", eval_args.num_starts, "0 = one per node");
  ev->add_option("--time-budget", eval_args.time_budget, "seconds per instance");
  ev->add_option("--eval-seed", eval_args.eval_seed);
  ev->add_option("--out-dir", eval_args.out_dir);

  OracleArgs oracle_args;
  auto* orc = app.add_subcommand("oracle", "Write exact optima for small TSP instances");
  orc->add_option("--source", oracle_args.source, "generated|tsplib|json");
  orc->add_option("--dir", oracle_args.dir);
  orc->add_option("--file", oracle_args.file);
  orc->add_option("--count", oracle_args.count);
  orc->add_option("--size", oracle_args.size);
  orc->add_option("--instance-seed", oracle_args.instance_seed);
  orc->add_option("--out", oracle_args.out);

  SweepArgs sweep_args;
  auto* sw = app.add_subcommand("sweep", "Hyperparameter sweeps and the phase ablation");
  sw->add_option("--config", sweep_args.config_path)->required();
  sw->add_option("--alpha-list", sweep_args.alpha_list, "comma-separated alphas");
  sw->add_option("--sweep-gamma", sweep_args.gamma_list, "comma-separated final-phase lrs");
  sw->add_flag("--ablation", sweep_args.ablation, "four-way phase ablation");
  sw->add_option("--seed", sweep_args.seed);
  sw->add_option("--out-dir", sweep_args.out_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(train_args);
    if (*fin) return run_finalize(fin_args);
    if (*ev) return run_eval(eval_args);
    if (*orc) return run_oracle(oracle_args);
    if (*sw) return run_sweep(sweep_args);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
