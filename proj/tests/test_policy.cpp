#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "nco/policy.hpp"
#include "nco/rng.hpp"

using namespace nco;
using PolicyF = Policy<float>;

namespace {

PolicyConfig small_cfg() {
  PolicyConfig cfg;
  cfg.embed_dim = 32;
  cfg.num_heads = 4;
  cfg.num_encoder_layers = 2;
  cfg.ff_dim = 64;
  return cfg;
}

PolicyF make_policy(ProblemKind kind, std::uint64_t seed = 123) {
  PolicyF pol(small_cfg(), kind);
  Rng rng(seed);
  pol.init_params(rng);
  return pol;
}

Tensor<float> encode_plain(const PolicyF& pol, const ProblemInstance& inst) {
  Tape<float> tape;
  auto pv = pol.params().register_on(tape, false);
  return tape.val(pol.encode(tape, pv, inst));
}

}  // namespace

TEST_CASE("policy config invariants") {
  PolicyConfig bad;
  bad.embed_dim = 30;
  bad.num_heads = 4;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  PolicyConfig neg;
  neg.ff_dim = -1;
  CHECK_THROWS_AS(neg.validate(), ParameterError);
}

TEST_CASE("encode: output shape and duplicate-node symmetry") {
  auto pol = make_policy(ProblemKind::kTsp);
  Rng rng(5);
  auto inst = sample_instance(ProblemKind::kTsp, 7, rng);
  inst.coords[3] = inst.coords[5];  // duplicates
  auto emb = encode_plain(pol, inst);
  REQUIRE(emb.shape == std::vector<int>{7, 32});
  for (int j = 0; j < 32; ++j) {
    CHECK(emb.at(3, j) == doctest::Approx(emb.at(5, j)).epsilon(1e-6));
  }
}

TEST_CASE("encode: permutation equivariance") {
  auto pol = make_policy(ProblemKind::kTsp);
  Rng rng(6);
  auto inst = sample_instance(ProblemKind::kTsp, 8, rng);
  const std::vector<int> perm = {3, 1, 7, 0, 5, 2, 6, 4};
  ProblemInstance permuted = inst;
  for (int i = 0; i < 8; ++i) permuted.coords[i] = inst.coords[perm[i]];

  auto base = encode_plain(pol, inst);
  auto shuf = encode_plain(pol, permuted);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 32; ++j) {
      CHECK(shuf.at(i, j) == doctest::Approx(base.at(perm[i], j)).epsilon(1e-5));
    }
  }
}

TEST_CASE("select_start_nodes contracts") {
  Rng rng(9);
  auto tsp = sample_instance(ProblemKind::kTsp, 10, rng);
  auto starts = PolicyF::select_start_nodes(tsp, 10);
  for (int j = 0; j < 10; ++j) CHECK(starts[j] == j);
  CHECK_THROWS_AS(PolicyF::select_start_nodes(tsp, 11), ParameterError);

  auto cvrp = sample_instance(ProblemKind::kCvrp, 20, rng);
  auto cstarts = PolicyF::select_start_nodes(cvrp, 20);
  CHECK(cstarts.front() == 1);
  CHECK(cstarts.back() == 20);
}

TEST_CASE("decode: single feasible action gets probability 1") {
  auto pol = make_policy(ProblemKind::kTsp);
  Rng rng(8);
  auto inst = sample_instance(ProblemKind::kTsp, 5, rng);
  Tape<float> tape;
  auto pv = pol.params().register_on(tape, false);
  auto ctx = pol.build_ctx(tape, pv, pol.encode(tape, pv, inst));
  Mask feas(1, 5, 0);
  feas.set(0, 2, true);
  auto side = pol.make_first_query(tape, pv, ctx, {0});
  auto probs = tape.val(pol.decode_probs(tape, pv, ctx, {0}, side, feas));
  CHECK(probs.at(0, 2) == 1.0f);
  for (int j : {0, 1, 3, 4}) CHECK(probs.at(0, j) == 0.0f);
}

TEST_CASE("decode: probabilities sum to 1, zeros on masked, entropy bound") {
  auto pol = make_policy(ProblemKind::kTsp);
  Rng rng(12);
  auto inst = sample_instance(ProblemKind::kTsp, 9, rng);
  Tape<float> tape;
  auto pv = pol.params().register_on(tape, false);
  auto ctx = pol.build_ctx(tape, pv, pol.encode(tape, pv, inst));
  Mask feas(2, 9, 0);
  for (int j = 0; j < 9; ++j) {
    const bool on = j % 2 == 0;
    feas.set(0, j, on);
    feas.set(1, j, !on);
  }
  auto side = pol.make_first_query(tape, pv, ctx, {0, 1});
  auto probs = tape.val(pol.decode_probs(tape, pv, ctx, {0, 1}, side, feas));
  for (int r = 0; r < 2; ++r) {
    double sum = 0.0, entropy = 0.0;
    int count = 0;
    for (int j = 0; j < 9; ++j) {
      if (!feas.at(r, j)) {
        CHECK(probs.at(r, j) == 0.0f);
      } else {
        sum += probs.at(r, j);
        ++count;
        if (probs.at(r, j) > 0) entropy -= probs.at(r, j) * std::log(probs.at(r, j));
      }
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(entropy <= std::log(static_cast<double>(count)) + 1e-9);
  }
}

TEST_CASE("rollout: greedy determinism and distinct starts") {
  for (ProblemKind kind : {ProblemKind::kTsp, ProblemKind::kCvrp}) {
    auto pol = make_policy(kind);
    Rng rng(33);
    auto inst = sample_instance(kind, 8, rng);
    const auto starts = PolicyF::select_start_nodes(inst, 8);

    Tape<float> t1, t2;
    auto pv1 = pol.params().register_on(t1, false);
    auto pv2 = pol.params().register_on(t2, false);
    auto r1 = pol.rollout(t1, pv1, inst, starts, RolloutMode::kGreedy, nullptr);
    auto r2 = pol.rollout(t2, pv2, inst, starts, RolloutMode::kGreedy, nullptr);
    std::set<int> seen;
    for (std::size_t j = 0; j < starts.size(); ++j) {
      CHECK(r1.trajectories[j].actions == r2.trajectories[j].actions);
      seen.insert(r1.trajectories[j].start_node);
    }
    CHECK(seen.size() == starts.size());
  }
}

TEST_CASE("rollout: sampling reproducible under the same seed") {
  auto pol = make_policy(ProblemKind::kTsp);
  Rng irng(44);
  auto inst = sample_instance(ProblemKind::kTsp, 10, irng);
  const auto starts = PolicyF::select_start_nodes(inst, 10);

  Tape<float> t1, t2;
  auto pv1 = pol.params().register_on(t1, false);
  auto pv2 = pol.params().register_on(t2, false);
  Rng s1(99), s2(99);
  auto r1 = pol.rollout(t1, pv1, inst, starts, RolloutMode::kSampling, &s1);
  auto r2 = pol.rollout(t2, pv2, inst, starts, RolloutMode::kSampling, &s2);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    CHECK(r1.trajectories[j].actions == r2.trajectories[j].actions);
    CHECK(r1.trajectories[j].log_prob == r2.trajectories[j].log_prob);
  }
}

TEST_CASE("rollout: log-prob matches replayed per-step probabilities") {
  for (ProblemKind kind : {ProblemKind::kTsp, ProblemKind::kCvrp}) {
    auto pol = make_policy(kind, 321);
    Rng irng(55);
    auto inst = sample_instance(kind, 7, irng);
    const auto starts = PolicyF::select_start_nodes(inst, 4);

    Tape<float> tape;
    auto pv = pol.params().register_on(tape, false);
    Rng srng(7);
    auto roll = pol.rollout(tape, pv, inst, starts, RolloutMode::kSampling, &srng);

    // Replay: step the env along the recorded actions, asking the policy for
    // the probability of each chosen action (one rollout at a time).
    for (std::size_t j = 0; j < starts.size(); ++j) {
      const Trajectory& traj = roll.trajectories[j];
      Tape<float> rt;
      auto rpv = pol.params().register_on(rt, false);
      auto ctx = pol.build_ctx(rt, rpv, pol.encode(rt, rpv, inst));
      EnvState st = EnvState::initial(inst);
      st.apply(traj.actions[0], inst);
      double logp = 0.0;
      for (std::size_t a = 1; a < traj.actions.size(); ++a) {
        Mask feas(1, inst.num_nodes(), 0);
        fill_mask_row(feas, 0, st, inst);
        Tape<float>::Var side;
        if (kind == ProblemKind::kTsp) {
          side = pol.make_first_query(rt, rpv, ctx, {traj.start_node});
        } else {
          side = pol.make_capacity_query(
              rt, rpv,
              {static_cast<float>(st.remaining_capacity) / static_cast<float>(inst.capacity)});
        }
        auto probs = rt.val(pol.decode_probs(rt, rpv, ctx, {st.current}, side, feas));
        logp += std::log(static_cast<double>(probs.at(0, traj.actions[a])));
        st.apply(traj.actions[a], inst);
      }
      CHECK(std::exp(logp) == doctest::Approx(std::exp(traj.log_prob)).epsilon(1e-5));
    }
  }
}

TEST_CASE("leader log-prob telemetry") {
  std::vector<Trajectory> ts(3);
  ts[0].reward = -3.0;
  ts[0].log_prob = -5.0;
  ts[1].reward = -2.0;  // leader
  ts[1].log_prob = -7.0;
  ts[2].reward = -4.0;
  ts[2].log_prob = -1.0;  // max log-prob
  auto ll = leader_logprob_telemetry(ts);
  CHECK(ll.leader_logprob == -7.0);
  CHECK(ll.max_logprob == -1.0);

  std::vector<Trajectory> one(1);
  one[0].reward = -1.0;
  one[0].log_prob = -2.5;
  auto l1 = leader_logprob_telemetry(one);
  CHECK(l1.leader_logprob == l1.max_logprob);  // N=1

  // log-probs are never positive
  CHECK(ll.leader_logprob <= 0.0);
  CHECK(ll.max_logprob <= 0.0);
}
