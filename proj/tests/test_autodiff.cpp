#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nco/adam.hpp"
#include "nco/rng.hpp"
#include "nco/tape.hpp"
#include "nco/tensor.hpp"
#include "test_util.hpp"

using namespace nco;
using nco::testing::check_gradients;
using nco::testing::random_tensor;
using VarD = Tape<double>::Var;

TEST_CASE("tensor shape/data invariant") {
  Tensor<float> t({2, 3});
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>{1.f, 2.f}), ShapeError);
}

TEST_CASE("matmul shape errors carry both shapes") {
  Tensor<float> a({2, 3}), b({4, 2});
  try {
    k_matmul_nn(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2,3)") != std::string::npos);
    CHECK(msg.find("(4,2)") != std::string::npos);
  }
}

TEST_CASE("masked softmax basics") {
  Tensor<float> uniform({1, 3}, std::vector<float>{1.f, 1.f, 1.f});
  Mask all = Mask::all(1, 3);
  auto y = k_masked_softmax(uniform, all);
  for (int j = 0; j < 3; ++j) CHECK(y.data[j] == doctest::Approx(1.0 / 3).epsilon(1e-6));

  Tensor<float> x({1, 3}, std::vector<float>{5.f, 0.f, 0.f});
  Mask single(1, 3, 0);
  single.set(0, 0, true);
  auto z = k_masked_softmax(x, single);
  CHECK(z.data[0] == 1.0f);
  CHECK(z.data[1] == 0.0f);
  CHECK(z.data[2] == 0.0f);

  Mask none(1, 3, 0);
  CHECK_THROWS_AS(k_masked_softmax(x, none), FeasibilityError);
}

TEST_CASE("log softmax chosen-index sum matches per-step accumulation") {
  // Two computation orders for a trajectory log-prob over random logits.
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int steps = 5, n = 8;
    double direct = 0.0, accumulated = 0.0;
    for (int s = 0; s < steps; ++s) {
      std::vector<double> z(n);
      for (auto& v : z) v = rng.next_symmetric(4.0);
      const int pick = rng.next_int(0, n - 1);

      Tensor<double> logits({1, n}, z);
      auto probs = k_masked_softmax(logits, Mask::all(1, n));
      direct += std::log(probs.data[pick]);

      // log softmax via the identity z_i - log sum exp(z)
      double mx = *std::max_element(z.begin(), z.end());
      double lse = 0.0;
      for (double v : z) lse += std::exp(v - mx);
      accumulated += z[pick] - (mx + std::log(lse));
    }
    CHECK(direct == doctest::Approx(accumulated).epsilon(1e-6));
  }
}

TEST_CASE("backward: quadratic, constants, stale tape") {
  Tape<double> tape;
  Tensor<double> w({1, 2}, std::vector<double>{1.0, 2.0});
  w.requires_grad = true;
  auto wv = tape.leaf(w);
  auto loss = tape.sum(tape.mul(wv, wv));
  tape.backward(loss);
  auto g = tape.grad(wv);
  CHECK(g.data[0] == doctest::Approx(2.0));
  CHECK(g.data[1] == doctest::Approx(4.0));
  CHECK_THROWS_AS(tape.backward(loss), ContractError);  // stale tape

  // constant loss: untouched parameters keep zero gradients
  Tape<double> tape2;
  Tensor<double> p({2, 2}, 1.0);
  p.requires_grad = true;
  auto pv = tape2.leaf(p);
  auto c = tape2.constant(Tensor<double>({1, 1}, 3.0));
  tape2.backward(c);
  auto gp = tape2.grad(pv);
  for (double x : gp.data) CHECK(x == 0.0);
}

TEST_CASE("backward requires scalar loss") {
  Tape<double> tape;
  auto v = tape.constant(Tensor<double>({2, 2}, 1.0));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

// Every primitive against central finite differences, 64-bit, >= 100 trials
// across random shapes; max relative error < 1e-4.
TEST_CASE("gradient check: all primitives vs finite differences") {
  Rng rng(7);
  double worst = 0.0;
  int trials = 0;

  auto weighted = [&](Tape<double>& t, VarD x) {
    // random fixed cotangent so the full Jacobian is exercised
    Tensor<double> w(t.val(x).shape);
    Rng wr(1234 + trials);
    for (auto& v : w.data) v = wr.next_symmetric(1.0);
    return t.sum(t.mul(x, t.constant(std::move(w))));
  };

  for (int trial = 0; trial < 12; ++trial) {
    const int m = 2 + rng.next_int(0, 2);
    const int k = 2 + rng.next_int(0, 2);
    const int n = 2 + rng.next_int(0, 2);

    // matmul / matmul_nt
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.matmul(in[0], in[1]));
          },
          {random_tensor({m, k}, rng), random_tensor({k, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.matmul_nt(in[0], in[1]));
          },
          {random_tensor({m, k}, rng), random_tensor({n, k}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    // add / add_rowvec / mul / mul_rowvec / scale
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.add(t.mul(in[0], in[1]), in[0]));
          },
          {random_tensor({m, n}, rng), random_tensor({m, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.mul_rowvec(t.add_rowvec(in[0], in[1]), in[2]));
          },
          {random_tensor({m, n}, rng), random_tensor({1, n}, rng),
           random_tensor({1, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    // tanh / relu / scale
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.tanh_op(t.scale(in[0], 1.7)));
          },
          {random_tensor({m, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      // keep inputs away from the relu kink so central differences are valid
      Tensor<double> x = random_tensor({m, n}, rng);
      for (auto& v : x.data) {
        if (std::abs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
      }
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.relu(in[0]));
          },
          {x});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    // log (positive inputs)
    {
      Tensor<double> x = random_tensor({m, n}, rng);
      for (auto& v : x.data) v = std::abs(v) + 0.5;
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.log_op(in[0]));
          },
          {x});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    // masked softmax with a random mask (>= 1 feasible per row)
    {
      Mask mask(m, n, 0);
      Rng mr(99 + trial);
      for (int i = 0; i < m; ++i) {
        int count = 0;
        for (int j = 0; j < n; ++j) {
          const bool on = mr.next_double() < 0.6;
          mask.set(i, j, on);
          count += on;
        }
        if (count == 0) mask.set(i, mr.next_int(0, n - 1), true);
      }
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.masked_softmax(in[0], mask));
          },
          {random_tensor({m, n}, rng, 2.0)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    // reductions, gathers, layer norm, concat
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return t.mean(t.mean_rows(in[0]));
          },
          {random_tensor({m, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      std::vector<int> idx = {0, m - 1, 0};
      std::vector<int> cols;
      Rng cr(5 + trial);
      for (int i = 0; i < 3; ++i) cols.push_back(cr.next_int(0, n - 1));
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.gather_cols(t.select_rows(in[0], idx), cols));
          },
          {random_tensor({m, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.layer_norm(in[0], 1e-5));
          },
          {random_tensor({m, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
    {
      auto r = check_gradients(
          [&](Tape<double>& t, const std::vector<VarD>& in) {
            return weighted(t, t.concat_rows(in[0], in[1]));
          },
          {random_tensor({m, n}, rng), random_tensor({k, n}, rng)});
      worst = std::max(worst, r.max_rel_err);
      trials += r.checked;
    }
  }
  CHECK(trials >= 100);
  CHECK(worst < 1e-4);
}

TEST_CASE("two-layer net gradient vs finite differences") {
  Rng rng(11);
  auto w1 = random_tensor({4, 6}, rng);
  auto b1 = random_tensor({1, 6}, rng);
  auto w2 = random_tensor({6, 3}, rng);
  auto x = random_tensor({5, 4}, rng);
  auto build = [&](Tape<double>& t, const std::vector<VarD>& in) {
    auto h = t.tanh_op(t.add_rowvec(t.matmul(t.constant(x), in[0]), in[1]));
    return t.sum(t.matmul(h, in[2]));
  };
  auto r = check_gradients(build, {w1, b1, w2}, 1e-4);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("masked softmax backward never leaks into masked positions") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3, n = 6;
    Mask mask(m, n, 0);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) mask.set(i, j, rng.next_double() < 0.5);
      mask.set(i, rng.next_int(0, n - 1), true);
    }
    Tape<double> tape;
    Tensor<double> x = random_tensor({m, n}, rng, 3.0);
    x.requires_grad = true;
    auto xv = tape.leaf(x);
    auto y = tape.masked_softmax(xv, mask);
    Tensor<double> w({m, n});
    for (auto& v : w.data) v = rng.next_symmetric(1.0);
    tape.backward(tape.sum(tape.mul(y, tape.constant(std::move(w)))));
    auto g = tape.grad(xv);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!mask.at(i, j)) CHECK(g.at(i, j) == 0.0);  // exact zero
      }
    }
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamSet<float> ps;
  ps.add("w", Tensor<float>({2, 2}, 0.5f));
  auto st = AdamState<float>::for_params(ps);
  AdamConfig<float> cfg;
  std::vector<Tensor<float>> grads{Tensor<float>({2, 2}, 0.0f)};
  adam_step(ps, grads, st, cfg);
  for (float v : ps.tensor(0).data) CHECK(v == 0.5f);
  CHECK(st.step_count == 1);
}

TEST_CASE("adam: first step moves by exactly the learning rate") {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>({1, 1}, 0.0));
  auto st = AdamState<double>::for_params(ps);
  AdamConfig<double> cfg;
  cfg.lr = 1e-3;
  std::vector<Tensor<double>> grads{Tensor<double>({1, 1}, 1.0)};
  adam_step(ps, grads, st, cfg);
  // descent direction, magnitude lr/(1+eps)
  CHECK(ps.tensor(0).data[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: first-step delta invariant to positive loss rescaling") {
  // Scaling all advantages by c > 0 scales gradients by c but leaves the
  // first Adam update unchanged (sign-preserving normalization).
  Rng rng(17);
  for (double c : {2.0, 10.0, 1000.0}) {
    ParamSet<double> a, b;
    a.add("w", Tensor<double>({2, 3}, 0.1));
    b.add("w", Tensor<double>({2, 3}, 0.1));
    auto sa = AdamState<double>::for_params(a);
    auto sb = AdamState<double>::for_params(b);
    AdamConfig<double> cfg;
    cfg.lr = 1e-3;
    Tensor<double> g({2, 3});
    for (auto& v : g.data) v = rng.next_symmetric(1.0) + 0.01;
    Tensor<double> gc = g;
    for (auto& v : gc.data) v *= c;
    adam_step(a, {g}, sa, cfg);
    adam_step(b, {gc}, sb, cfg);
    for (std::size_t i = 0; i < a.tensor(0).data.size(); ++i) {
      CHECK(a.tensor(0).data[i] == doctest::Approx(b.tensor(0).data[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("adam: non-finite gradient aborts naming the parameter") {
  ParamSet<float> ps;
  ps.add("enc.w", Tensor<float>({1, 2}, 0.f));
  auto st = AdamState<float>::for_params(ps);
  AdamConfig<float> cfg;
  Tensor<float> g({1, 2});
  g.data[1] = std::numeric_limits<float>::quiet_NaN();
  try {
    adam_step(ps, {g}, st, cfg);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("enc.w") != std::string::npos);
  }
}
