#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nco/adam.hpp"
#include "nco/env.hpp"
#include "nco/errors.hpp"
#include "nco/params.hpp"
#include "nco/problem.hpp"
#include "nco/rng.hpp"
#include "nco/tape.hpp"

namespace nco {

struct PolicyConfig {
  int embed_dim = 64;
  int num_heads = 4;
  int num_encoder_layers = 2;
  int ff_dim = 128;
  double logit_clip = 10.0;

  void validate() const {
    if (embed_dim <= 0 || num_heads <= 0 || num_encoder_layers <= 0 || ff_dim <= 0) {
      throw ParameterError("policy config: all dimensions must be positive");
    }
    if (embed_dim % num_heads != 0) {
      throw ParameterError("policy config: embed_dim " + std::to_string(embed_dim) +
                           " not divisible by num_heads " + std::to_string(num_heads));
    }
    if (logit_clip <= 0.0) throw ParameterError("policy config: logit_clip must be positive");
  }

  bool operator==(const PolicyConfig&) const = default;
};

enum class RolloutMode { kGreedy, kSampling };

// Attention encoder-decoder over node embeddings. One shared encoding per
// instance; the decoder runs a batch of parallel rollouts (multi-start or
// beam entries) against precomputed keys/values. All math goes through the
// tape; inference registers parameters as constants so nothing is retained.
template <class T>
class Policy {
 public:
  using Var = typename Tape<T>::Var;

  Policy(PolicyConfig cfg, ProblemKind kind) : cfg_(cfg), kind_(kind) {
    cfg_.validate();
    build_param_layout();
  }

  const PolicyConfig& config() const { return cfg_; }
  ProblemKind kind() const { return kind_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  void init_params(Rng& rng) {
    for (int i = 0; i < params_.size(); ++i) {
      Tensor<T>& t = params_.tensor(i);
      const std::string& name = params_.name(i);
      if (name.ends_with(".b") || name.ends_with(".beta")) {
        std::fill(t.data.begin(), t.data.end(), T(0));
      } else if (name.ends_with(".gamma")) {
        std::fill(t.data.begin(), t.data.end(), T(1));
      } else {
        const int fan_in = t.shape[0];
        const int fan_out = t.shape.size() > 1 ? t.shape[1] : 1;
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& x : t.data) x = static_cast<T>(rng.next_symmetric(r));
      }
    }
  }

  // First N start indices: every node is a valid TSP start; CVRP diversity
  // comes from the forced first customer after the shared depot start.
  static std::vector<int> select_start_nodes(const ProblemInstance& inst, int n_starts) {
    if (n_starts < 1) throw ParameterError("select_start_nodes: N must be >= 1");
    std::vector<int> starts(n_starts);
    if (inst.kind == ProblemKind::kTsp) {
      if (n_starts > inst.num_nodes()) {
        throw ParameterError("select_start_nodes: N = " + std::to_string(n_starts) +
                             " exceeds node count " + std::to_string(inst.num_nodes()));
      }
      for (int j = 0; j < n_starts; ++j) starts[j] = j;
    } else {
      if (n_starts > inst.num_customers()) {
        throw ParameterError("select_start_nodes: N = " + std::to_string(n_starts) +
                             " exceeds customer count " + std::to_string(inst.num_customers()));
      }
      for (int j = 0; j < n_starts; ++j) starts[j] = j + 1;
    }
    return starts;
  }

  // ---- encoder ------------------------------------------------------------

  Var encode(Tape<T>& tape, const std::vector<Var>& pv, const ProblemInstance& inst) const {
    inst.validate();
    Var h;
    if (kind_ == ProblemKind::kTsp) {
      const int n = inst.num_nodes();
      Tensor<T> x({n, 2});
      for (int i = 0; i < n; ++i) {
        x.at(i, 0) = static_cast<T>(inst.coords[i].x);
        x.at(i, 1) = static_cast<T>(inst.coords[i].y);
      }
      h = tape.add_rowvec(tape.matmul(tape.constant(std::move(x)), pv[idx_.emb_w]),
                          pv[idx_.emb_b]);
    } else {
      Tensor<T> xd({1, 2});
      xd.at(0, 0) = static_cast<T>(inst.coords[0].x);
      xd.at(0, 1) = static_cast<T>(inst.coords[0].y);
      const int nc = inst.num_customers();
      Tensor<T> xc({nc, 3});
      for (int i = 0; i < nc; ++i) {
        xc.at(i, 0) = static_cast<T>(inst.coords[i + 1].x);
        xc.at(i, 1) = static_cast<T>(inst.coords[i + 1].y);
        xc.at(i, 2) = static_cast<T>(inst.demands[i + 1]) / static_cast<T>(inst.capacity);
      }
      Var hd = tape.add_rowvec(tape.matmul(tape.constant(std::move(xd)), pv[idx_.depot_w]),
                               pv[idx_.depot_b]);
      Var hc = tape.add_rowvec(tape.matmul(tape.constant(std::move(xc)), pv[idx_.cust_w]),
                               pv[idx_.cust_b]);
      h = tape.concat_rows(hd, hc);
    }

    const int n = inst.num_nodes();
    const Mask all = Mask::all(n, n);
    const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(head_dim()));
    for (const auto& L : idx_.layers) {
      Var attn;
      for (std::size_t hh = 0; hh < L.heads.size(); ++hh) {
        const auto& H = L.heads[hh];
        Var q = tape.matmul(h, pv[H.wq]);
        Var k = tape.matmul(h, pv[H.wk]);
        Var v = tape.matmul(h, pv[H.wv]);
        Var a = tape.masked_softmax(tape.scale(tape.matmul_nt(q, k), inv_sqrt_dk), all);
        Var proj = tape.matmul(tape.matmul(a, v), pv[H.wo]);
        attn = hh == 0 ? proj : tape.add(attn, proj);
      }
      h = tape.add(h, attn);
      h = tape.add_rowvec(tape.mul_rowvec(tape.layer_norm(h, kNormEps), pv[L.norm1_g]),
                          pv[L.norm1_b]);
      Var ff = tape.add_rowvec(tape.matmul(h, pv[L.ff_w1]), pv[L.ff_b1]);
      ff = tape.add_rowvec(tape.matmul(tape.relu(ff), pv[L.ff_w2]), pv[L.ff_b2]);
      h = tape.add(h, ff);
      h = tape.add_rowvec(tape.mul_rowvec(tape.layer_norm(h, kNormEps), pv[L.norm2_g]),
                          pv[L.norm2_b]);
    }
    return h;
  }

  // ---- decoder ------------------------------------------------------------

  struct DecoderCtx {
    Var emb;                // (n, d)
    std::vector<Var> keys;  // per head (n, dk)
    std::vector<Var> vals;  // per head (n, dk)
    Var logit_keys;         // (n, d)
    Var graph_q;            // (1, d): projected mean embedding
  };

  DecoderCtx build_ctx(Tape<T>& tape, const std::vector<Var>& pv, Var emb) const {
    DecoderCtx ctx;
    ctx.emb = emb;
    ctx.keys.reserve(idx_.dec_heads.size());
    ctx.vals.reserve(idx_.dec_heads.size());
    for (const auto& H : idx_.dec_heads) {
      ctx.keys.push_back(tape.matmul(emb, pv[H.wk]));
      ctx.vals.push_back(tape.matmul(emb, pv[H.wv]));
    }
    ctx.logit_keys = tape.matmul(emb, pv[idx_.wk_logit]);
    ctx.graph_q = tape.matmul(tape.mean_rows(emb), pv[idx_.wq_graph]);
    return ctx;
  }

  // Plain-value snapshot: lets eval loops re-register the context as
  // constants on short-lived tapes instead of re-encoding.
  struct DecoderCtxVals {
    Tensor<T> emb, logit_keys, graph_q;
    std::vector<Tensor<T>> keys, vals;
  };

  DecoderCtxVals snapshot_ctx(const Tape<T>& tape, const DecoderCtx& ctx) const {
    DecoderCtxVals v;
    v.emb = tape.val(ctx.emb);
    v.logit_keys = tape.val(ctx.logit_keys);
    v.graph_q = tape.val(ctx.graph_q);
    for (Var k : ctx.keys) v.keys.push_back(tape.val(k));
    for (Var k : ctx.vals) v.vals.push_back(tape.val(k));
    return v;
  }

  DecoderCtx ctx_from_vals(Tape<T>& tape, const DecoderCtxVals& v) const {
    DecoderCtx ctx;
    ctx.emb = tape.constant(v.emb);
    ctx.logit_keys = tape.constant(v.logit_keys);
    ctx.graph_q = tape.constant(v.graph_q);
    for (const auto& k : v.keys) ctx.keys.push_back(tape.constant(k));
    for (const auto& k : v.vals) ctx.vals.push_back(tape.constant(k));
    return ctx;
  }

  // Per-rollout constant part of the context query. TSP: projection of the
  // start-node embeddings. CVRP: none (capacity term varies per step).
  Var make_first_query(Tape<T>& tape, const std::vector<Var>& pv, const DecoderCtx& ctx,
                       const std::vector<int>& first) const {
    return tape.matmul(tape.select_rows(ctx.emb, first), pv[idx_.wq_first]);
  }

  Var make_capacity_query(Tape<T>& tape, const std::vector<Var>& pv,
                          const std::vector<T>& cap_frac) const {
    Tensor<T> c({static_cast<int>(cap_frac.size()), 1});
    c.data = cap_frac;
    return tape.matmul(tape.constant(std::move(c)), pv[idx_.w_cap]);
  }

  // Masked action distribution for a batch of rollouts at one step.
  // Logits pass through tanh clipping at +-logit_clip before masking.
  Var decode_probs(Tape<T>& tape, const std::vector<Var>& pv, const DecoderCtx& ctx,
                   const std::vector<int>& current, Var side_q, const Mask& feasible) const {
    Var q = tape.matmul(tape.select_rows(ctx.emb, current), pv[idx_.wq_last]);
    q = tape.add_rowvec(q, ctx.graph_q);
    if (side_q.valid()) q = tape.add(q, side_q);

    const T inv_sqrt_dk = T(1) / std::sqrt(static_cast<T>(head_dim()));
    Var glimpse;
    for (std::size_t hh = 0; hh < idx_.dec_heads.size(); ++hh) {
      const auto& H = idx_.dec_heads[hh];
      Var qh = tape.matmul(q, pv[H.wq]);
      Var compat = tape.scale(tape.matmul_nt(qh, ctx.keys[hh]), inv_sqrt_dk);
      Var attn = tape.masked_softmax(compat, feasible);
      Var gh = tape.matmul(tape.matmul(attn, ctx.vals[hh]), pv[H.wo]);
      glimpse = hh == 0 ? gh : tape.add(glimpse, gh);
    }

    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(cfg_.embed_dim));
    Var u = tape.scale(tape.matmul_nt(glimpse, ctx.logit_keys), inv_sqrt_d);
    u = tape.scale(tape.tanh_op(u), static_cast<T>(cfg_.logit_clip));
    return tape.masked_softmax(u, feasible);
  }

  // ---- rollout --------------------------------------------------------------

  struct RolloutResult {
    std::vector<Trajectory> trajectories;
    Var total_logprob;  // (N,1) on the tape
    double entropy_sum = 0.0;
    std::int64_t entropy_steps = 0;
  };

  // N parallel rollouts of one instance from the given start nodes. The
  // forced first move (TSP start node / CVRP first customer) contributes no
  // log-probability. Greedy ties break to the lowest node index.
  RolloutResult rollout(Tape<T>& tape, const std::vector<Var>& pv, const ProblemInstance& inst,
                        const std::vector<int>& starts, RolloutMode mode, Rng* rng) const {
    if (mode == RolloutMode::kSampling && rng == nullptr) {
      throw ContractError("rollout: sampling mode requires an rng");
    }
    Var emb = encode(tape, pv, inst);
    DecoderCtx ctx = build_ctx(tape, pv, emb);
    return rollout_from_ctx(tape, pv, ctx, inst, starts, mode, rng);
  }

  RolloutResult rollout_from_ctx(Tape<T>& tape, const std::vector<Var>& pv,
                                 const DecoderCtx& ctx, const ProblemInstance& inst,
                                 const std::vector<int>& starts, RolloutMode mode,
                                 Rng* rng) const {
    const int n_roll = static_cast<int>(starts.size());
    const int n = inst.num_nodes();

    std::vector<EnvState> states;
    states.reserve(n_roll);
    for (int start : starts) {
      EnvState s = EnvState::initial(inst);
      s.apply(start, inst);
      states.push_back(std::move(s));
    }

    Var side_q;
    if (kind_ == ProblemKind::kTsp) side_q = make_first_query(tape, pv, ctx, starts);

    RolloutResult out;
    out.total_logprob = tape.constant(Tensor<T>({n_roll, 1}, T(0)));

    std::vector<int> current(n_roll), chosen(n_roll);
    std::vector<T> cap_frac(kind_ == ProblemKind::kCvrp ? n_roll : 0);

    while (true) {
      bool all_done = true;
      for (const auto& s : states) {
        if (!s.done) {
          all_done = false;
          break;
        }
      }
      if (all_done) break;

      Mask feasible(n_roll, n, 0);
      for (int r = 0; r < n_roll; ++r) {
        current[r] = states[r].current;
        fill_mask_row(feasible, r, states[r], inst);
        if (kind_ == ProblemKind::kCvrp) {
          cap_frac[r] = static_cast<T>(states[r].remaining_capacity) /
                        static_cast<T>(inst.capacity);
        }
      }
      if (kind_ == ProblemKind::kCvrp) side_q = make_capacity_query(tape, pv, cap_frac);

      Var probs = decode_probs(tape, pv, ctx, current, side_q, feasible);
      const Tensor<T>& p = tape.val(probs);

      for (int r = 0; r < n_roll; ++r) {
        if (states[r].done) {
          chosen[r] = states[r].current;  // prob 1 row; zero log-prob, zero grad
          continue;
        }
        chosen[r] = mode == RolloutMode::kGreedy ? argmax_row(p, feasible, r)
                                                 : sample_row(p, feasible, r, *rng);
        out.entropy_sum += row_entropy(&p.data[static_cast<std::size_t>(r) * n], n);
        out.entropy_steps += 1;
      }

      Var lp = tape.log_op(tape.gather_cols(probs, chosen));
      out.total_logprob = tape.add(out.total_logprob, lp);

      for (int r = 0; r < n_roll; ++r) {
        if (!states[r].done) states[r].apply(chosen[r], inst);
      }
    }

    const Tensor<T>& lp = tape.val(out.total_logprob);
    out.trajectories.reserve(n_roll);
    for (int r = 0; r < n_roll; ++r) {
      Trajectory t;
      t.actions = states[r].route;
      t.start_node = starts[r];
      t.log_prob = static_cast<double>(lp.data[r]);
      t.reward = reward_of(t.actions, inst);
      out.trajectories.push_back(std::move(t));
    }
    return out;
  }

  int head_dim() const { return cfg_.embed_dim / cfg_.num_heads; }

  static int argmax_row(const Tensor<T>& p, const Mask& feasible, int row) {
    int best = -1;
    T best_p = T(-1);
    for (int j = 0; j < p.shape[1]; ++j) {
      if (!feasible.at(row, j)) continue;
      const T v = p.at(row, j);
      if (v > best_p) {
        best_p = v;
        best = j;
      }
    }
    return best;
  }

  static int sample_row(const Tensor<T>& p, const Mask& feasible, int row, Rng& rng) {
    T total = T(0);
    for (int j = 0; j < p.shape[1]; ++j)
      if (feasible.at(row, j)) total += p.at(row, j);
    const double u = rng.next_double() * static_cast<double>(total);
    double cum = 0.0;
    int last = -1;
    for (int j = 0; j < p.shape[1]; ++j) {
      if (!feasible.at(row, j)) continue;
      cum += static_cast<double>(p.at(row, j));
      last = j;
      if (cum > u) return j;
    }
    return last;
  }

  static constexpr T kNormEps = T(1e-5);

 private:
  struct HeadIdx {
    int wq = -1, wk = -1, wv = -1, wo = -1;
  };
  struct LayerIdx {
    std::vector<HeadIdx> heads;
    int norm1_g = -1, norm1_b = -1;
    int ff_w1 = -1, ff_b1 = -1, ff_w2 = -1, ff_b2 = -1;
    int norm2_g = -1, norm2_b = -1;
  };
  struct Layout {
    int emb_w = -1, emb_b = -1;                            // TSP input embed
    int depot_w = -1, depot_b = -1, cust_w = -1, cust_b = -1;  // CVRP input embeds
    std::vector<LayerIdx> layers;
    std::vector<HeadIdx> dec_heads;
    int wq_graph = -1, wq_last = -1, wq_first = -1, w_cap = -1, wk_logit = -1;
  };

  void build_param_layout() {
    const int d = cfg_.embed_dim;
    const int dk = head_dim();
    auto mat = [&](const std::string& name, int r, int c) {
      return params_.add(name, Tensor<T>({r, c}));
    };
    auto vec = [&](const std::string& name, int c) {
      return params_.add(name, Tensor<T>({1, c}));
    };

    if (kind_ == ProblemKind::kTsp) {
      idx_.emb_w = mat("enc.embed.w", 2, d);
      idx_.emb_b = vec("enc.embed.b", d);
    } else {
      idx_.depot_w = mat("enc.embed_depot.w", 2, d);
      idx_.depot_b = vec("enc.embed_depot.b", d);
      idx_.cust_w = mat("enc.embed_cust.w", 3, d);
      idx_.cust_b = vec("enc.embed_cust.b", d);
    }
    for (int l = 0; l < cfg_.num_encoder_layers; ++l) {
      LayerIdx L;
      const std::string base = "enc.layer" + std::to_string(l) + ".";
      for (int h = 0; h < cfg_.num_heads; ++h) {
        const std::string hb = base + "head" + std::to_string(h) + ".";
        HeadIdx H;
        H.wq = mat(hb + "wq", d, dk);
        H.wk = mat(hb + "wk", d, dk);
        H.wv = mat(hb + "wv", d, dk);
        H.wo = mat(hb + "wo", dk, d);
        L.heads.push_back(H);
      }
      L.norm1_g = vec(base + "norm1.gamma", d);
      L.norm1_b = vec(base + "norm1.beta", d);
      L.ff_w1 = mat(base + "ff.w1", d, cfg_.ff_dim);
      L.ff_b1 = vec(base + "ff.b1", cfg_.ff_dim);
      L.ff_w2 = mat(base + "ff.w2", cfg_.ff_dim, d);
      L.ff_b2 = vec(base + "ff.b2", d);
      L.norm2_g = vec(base + "norm2.gamma", d);
      L.norm2_b = vec(base + "norm2.beta", d);
      idx_.layers.push_back(std::move(L));
    }
    for (int h = 0; h < cfg_.num_heads; ++h) {
      const std::string hb = "dec.head" + std::to_string(h) + ".";
      HeadIdx H;
      H.wq = mat(hb + "wq", d, dk);
      H.wk = mat(hb + "wk", d, dk);
      H.wv = mat(hb + "wv", d, dk);
      H.wo = mat(hb + "wo", dk, d);
      idx_.dec_heads.push_back(H);
    }
    idx_.wq_graph = mat("dec.wq_graph", d, d);
    idx_.wq_last = mat("dec.wq_last", d, d);
    if (kind_ == ProblemKind::kTsp) {
      idx_.wq_first = mat("dec.wq_first", d, d);
    } else {
      idx_.w_cap = mat("dec.w_cap", 1, d);
    }
    idx_.wk_logit = mat("dec.wk_logit", d, d);
  }

  PolicyConfig cfg_;
  ProblemKind kind_;
  ParamSet<T> params_;
  Layout idx_;
};

// Telemetry for one rollout batch: log-prob of the best-reward trajectory vs
// the max log-prob over all trajectories of the instance.
struct LeaderLogprob {
  double leader_logprob = 0.0;
  double max_logprob = 0.0;
};

inline LeaderLogprob leader_logprob_telemetry(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw ContractError("leader_logprob_telemetry: empty batch");
  std::size_t leader = 0;
  double max_lp = trajs[0].log_prob;
  for (std::size_t j = 1; j < trajs.size(); ++j) {
    if (trajs[j].reward > trajs[leader].reward) leader = j;
    if (trajs[j].log_prob > max_lp) max_lp = trajs[j].log_prob;
  }
  return {trajs[leader].log_prob, max_lp};
}

}  // namespace nco
