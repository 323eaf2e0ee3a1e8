#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "oracles.hpp"
#include "pads/rl.hpp"

using namespace pads;

namespace {

PolicyNetwork small_policy(Rng& rng, int state = 6, int bins = 3, int hidden = 8, bool value = true) {
  return PolicyNetwork(PolicyConfig{state, bins, hidden, value}, rng);
}

std::vector<double> random_state(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(n);
  for (auto& v : s) v = u(rng);
  return s;
}

std::vector<Trit> random_action(int k, Rng& rng) {
  std::vector<Trit> a(k);
  for (auto& t : a) t = static_cast<Trit>(uniform_index(rng, 3));
  return a;
}

// Larger output weights than the default init so gradients are not tiny.
void scramble(PolicyNetwork& p, Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  for (double& v : p.mutable_params()) v = g(rng);
}

double min_abs_pre(const PolicyNetwork::Output& o) {
  double m = INFINITY;
  for (const auto& p : o.cache.pre) m = std::min(m, p.cwiseAbs().minCoeff());
  return m;
}

PolicyNetwork with_params(const PolicyNetwork& p, const std::vector<double>& x) {
  PolicyNetwork q = p;
  auto dst = q.mutable_params();
  std::copy(x.begin(), x.end(), dst.begin());
  return q;
}

}  // namespace

TEST_CASE("reward sign") {
  CHECK(compute_reward(1.30, 1.10) == 1);
  CHECK(compute_reward(1.0, 1.0) == 0);
  CHECK(compute_reward(0.90, 1.00) == -1);
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const int r = compute_reward(u(rng), u(rng));
    CHECK((r == -1 || r == 0 || r == 1));
  }
}

TEST_CASE("policy forward") {
  DenseNet zero({5, 4, 4, 3 * 2 + 1});
  const PolicyNetwork p(zero, 2, true);
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto out = p.forward(s);
  const Matrix lp = log_softmax_rows(out.logits);
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 3; ++j) CHECK(std::exp(lp(k, j)) == doctest::Approx(1.0 / 3));
  }
  Rng rng(2);
  const auto q = small_policy(rng);
  const auto s2 = random_state(6, rng);
  CHECK(q.forward(s2).logits == q.forward(s2).logits);
  CHECK(q.forward(s2).value == q.forward(s2).value);
}

TEST_CASE("log-prob equals the manual per-head softmax; heads sum to one") {
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix logits(4, 3);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
    const auto a = random_action(4, rng);
    double manual = 0.0;
    for (int k = 0; k < 4; ++k) {
      double z = 0.0, total = 0.0;
      for (int j = 0; j < 3; ++j) total += std::exp(logits(k, j));
      z = std::exp(logits(k, static_cast<int>(a[k]))) / total;
      manual += std::log(z);
      double head = 0.0;
      for (int j = 0; j < 3; ++j) head += std::exp(log_softmax_rows(logits)(k, j));
      CHECK(head == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::abs(action_log_prob(logits, a) - manual) < 1e-9);
  }
}

TEST_CASE("sample_action frequencies") {
  Rng rng(4);
  Matrix uniform = Matrix::Zero(2, 3);
  std::vector<long> counts(9, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto s = sample_action(uniform, ActionMultipliers{}, rng);
    ++counts[static_cast<int>(s.action.trits[0]) * 3 + static_cast<int>(s.action.trits[1])];
    CHECK(s.log_prob == doctest::Approx(2.0 * std::log(1.0 / 3)));
  }
  for (long c : counts) CHECK(std::abs(c / 1e5 - 1.0 / 9) < 0.01);

  Matrix dominant = Matrix::Zero(3, 3);
  dominant.col(1).setConstant(1e3);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_action(dominant, ActionMultipliers{}, rng);
    for (double m : s.action.values()) CHECK(m == 1.0);
  }
}

TEST_CASE("policy and value gradients match finite differences") {
  Rng rng(5);
  int done = 0;
  for (int attempt = 0; done < 60 && attempt < 500; ++attempt) {
    auto p = small_policy(rng, 4 + attempt % 3, 2 + attempt % 3, 5 + attempt % 4);
    scramble(p, rng);
    const auto s = random_state(p.state_dim(), rng);
    const auto a = random_action(p.bins(), rng);
    const auto out = p.forward(s);
    if (min_abs_pre(out) < 1e-3) continue;
    const std::vector<double> x0(p.params().begin(), p.params().end());

    const auto g_logp = p.backward(out, action_log_prob_grad(out.logits, a), 0.0);
    auto f_logp = [&](const std::vector<double>& x) { return action_log_prob(with_params(p, x).forward(s).logits, a); };
    CHECK(oracle::max_relative_error(g_logp, oracle::numeric_gradient(f_logp, x0)) < 1e-4);

    const auto g_value = p.backward(out, Matrix::Zero(p.bins(), 3), 1.0);
    auto f_value = [&](const std::vector<double>& x) { return with_params(p, x).forward(s).value; };
    CHECK(oracle::max_relative_error(g_value, oracle::numeric_gradient(f_value, x0)) < 1e-4);
    ++done;
  }
  CHECK(done >= 50);
}

TEST_CASE("update-rule gradients match finite differences of their losses") {
  Rng rng(6);
  int done = 0;
  for (int attempt = 0; done < 30 && attempt < 500; ++attempt) {
    auto p = small_policy(rng, 5, 3, 6);
    scramble(p, rng);
    PolicyTransition t;
    t.state = random_state(5, rng);
    t.action = random_action(3, rng);
    t.reward = attempt % 2 ? 1 : -1;
    const auto out = p.forward(t.state);
    if (min_abs_pre(out) < 1e-3) continue;
    const std::vector<double> x0(p.params().begin(), p.params().end());
    const double logp0 = action_log_prob(out.logits, t.action);

    // REINFORCE with a baseline
    const double b = 0.3;
    const auto gr = reinforce_gradient(p, t, b);
    auto f_r = [&](const std::vector<double>& x) {
      return -(t.reward - b) * action_log_prob(with_params(p, x).forward(t.state).logits, t.action);
    };
    CHECK(oracle::max_relative_error(gr.grad, oracle::numeric_gradient(f_r, x0)) < 1e-4);

    // A2C with the advantage held fixed
    const double cv = 0.5;
    const auto ga = a2c_gradient(p, t, cv);
    const double adv = t.reward - out.value;
    auto f_a = [&](const std::vector<double>& x) {
      const auto o = with_params(p, x).forward(t.state);
      return -adv * action_log_prob(o.logits, t.action) + cv * (o.value - t.reward) * (o.value - t.reward);
    };
    CHECK(oracle::max_relative_error(ga.grad, oracle::numeric_gradient(f_a, x0)) < 1e-4);

    // PPO away from the clip boundary
    t.old_log_prob = logp0 - 0.05 * (attempt % 3 == 0 ? 1.0 : -1.0);
    const double eps = 0.2;
    const auto gp = ppo_gradient(p, t, eps, cv);
    if (std::abs(gp.ratio - (1 + eps)) < 1e-3 || std::abs(gp.ratio - (1 - eps)) < 1e-3) continue;
    auto f_p = [&](const std::vector<double>& x) {
      const auto o = with_params(p, x).forward(t.state);
      const double rho = std::exp(action_log_prob(o.logits, t.action) - t.old_log_prob);
      return -std::min(rho * adv, std::clamp(rho, 1 - eps, 1 + eps) * adv) +
             cv * (o.value - t.reward) * (o.value - t.reward);
    };
    CHECK(oracle::max_relative_error(gp.grad, oracle::numeric_gradient(f_p, x0)) < 1e-4);
    ++done;
  }
  CHECK(done >= 20);
}

TEST_CASE("advantage edge cases") {
  Rng rng(7);
  auto p = small_policy(rng, 4, 2, 5, false);
  PolicyTransition t{random_state(4, rng), random_action(2, rng), 0.0, 1};
  for (double v : reinforce_gradient(p, t, 1.0).grad) CHECK(v == 0.0);

  // r = +1, b = 0: the update direction is +grad log pi (loss gradient is its negative)
  const auto out = p.forward(t.state);
  const auto glp = p.backward(out, action_log_prob_grad(out.logits, t.action), 0.0);
  const auto g = reinforce_gradient(p, t, 0.0).grad;
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(-glp[i]));

  // V(s) == r: zero A2C gradient. Force the value by setting the value-head bias.
  auto q = small_policy(rng, 4, 2, 5, true);
  // Last layer: W (out x in, row-major) then the bias; the value is the last output.
  const auto& sizes = q.net().sizes();
  const std::size_t in = static_cast<std::size_t>(sizes[sizes.size() - 2]);
  const std::size_t out_n = static_cast<std::size_t>(sizes.back());
  const std::size_t w_start = q.param_count() - out_n - out_n * in;
  for (std::size_t j = 0; j < in; ++j) q.mutable_params()[w_start + (out_n - 1) * in + j] = 0.0;
  q.mutable_params()[q.param_count() - 1] = 1.0;
  REQUIRE(q.forward(t.state).value == 1.0);
  const auto ga = a2c_gradient(q, t, 0.5);
  CHECK(ga.value_loss == 0.0);
  for (double v : ga.grad) CHECK(v == 0.0);
}

TEST_CASE("ppo clip zeroes the policy gradient") {
  Rng rng(8);
  auto p = small_policy(rng, 5, 3, 6, false);
  scramble(p, rng);
  PolicyTransition t{random_state(5, rng), random_action(3, rng), 0.0, 1};
  const double logp = action_log_prob(p.forward(t.state).logits, t.action);

  t.old_log_prob = logp - std::log(1.5);  // rho = 1.5, A = +1 > 0
  auto g = ppo_gradient(p, t, 0.2, 0.0);
  CHECK(g.ratio == doctest::Approx(1.5));
  CHECK(g.clipped);
  CHECK(g.objective == doctest::Approx(1.2));
  for (double v : g.grad) CHECK(v == 0.0);

  t.reward = -1;
  t.old_log_prob = logp - std::log(0.5);  // rho = 0.5, A < 0
  g = ppo_gradient(p, t, 0.2, 0.0);
  CHECK(g.clipped);
  for (double v : g.grad) CHECK(v == 0.0);

  // rho below 1 - eps with A > 0 is not clipped
  t.reward = 1;
  g = ppo_gradient(p, t, 0.2, 0.0);
  CHECK_FALSE(g.clipped);
}

TEST_CASE("ppo surrogate equals the direct formula") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = small_policy(rng, 4, 2, 5, trial % 2 == 0);
    scramble(p, rng);
    PolicyTransition t{random_state(4, rng), random_action(2, rng), 0.0, uniform_index(rng, 3) - 1};
    const auto out = p.forward(t.state);
    t.old_log_prob = action_log_prob(out.logits, t.action) + std::uniform_real_distribution<double>(-0.6, 0.6)(rng);
    const double base = 0.25;
    const auto g = ppo_gradient(p, t, 0.2, 0.5, base);
    const double adv = p.has_value_head() ? t.reward - out.value : t.reward - base;
    const double rho = std::exp(action_log_prob(out.logits, t.action) - t.old_log_prob);
    const double direct = std::min(rho * adv, std::clamp(rho, 0.8, 1.2) * adv);
    CHECK(std::abs(g.objective - direct) < 1e-9);
  }
}

TEST_CASE("ppo with unbounded epsilon and theta_old = theta equals A2C bitwise") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto base = small_policy(rng, 6, 4, 8, true);
    scramble(base, rng);
    PolicyNetwork a = base, b = base;
    Adam oa(a.param_count(), AdamConfig{1e-3}), ob(b.param_count(), AdamConfig{1e-3});
    std::vector<PolicyTransition> ts{{random_state(6, rng), random_action(4, rng), 0.0, trial % 2 ? 1 : -1}};
    a2c_update(a, oa, ts, 0.5);
    double baseline = 0.0;
    ppo_update(b, base, ob, ts, std::numeric_limits<double>::infinity(), 0.5, baseline, std::nullopt);
    for (std::size_t i = 0; i < a.param_count(); ++i) CHECK(a.params()[i] == b.params()[i]);
  }
}

TEST_CASE("value head regresses a constant reward") {
  Rng rng(11);
  auto p = small_policy(rng, 4, 2, 16, true);
  Adam opt(p.param_count(), AdamConfig{1e-2});
  const auto s = random_state(4, rng);
  Rng act(12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<PolicyTransition> ts{{s, sample_action(p.forward(s).logits, {}, act).action.trits, 0.0, 1}};
    a2c_update(p, opt, ts, 0.5);
  }
  CHECK(std::abs(p.forward(s).value - 1.0) < 1e-2);
}

TEST_CASE("learner refreshes the old policy on schedule and tracks the EMA") {
  Rng rng(13);
  RlConfig cfg;
  cfg.algorithm = RlAlgorithm::kPpoEma;
  cfg.old_policy_every = 3;
  cfg.lr = 1e-2;
  PolicyLearner learner(cfg, small_policy(rng, 4, 2, 6, false));
  const auto s = random_state(4, rng);
  for (int i = 1; i <= 6; ++i) {
    PolicyTransition t{s, random_action(2, rng), 0.0, 1};
    learner.update(t);
    const bool synced = std::equal(learner.policy().params().begin(), learner.policy().params().end(),
                                   learner.old_policy().params().begin());
    CHECK(synced == (i % 3 == 0));
  }
  CHECK(learner.baseline() == doctest::Approx(1.0 - std::pow(0.9, 6)));

  cfg.algorithm = RlAlgorithm::kA2c;
  CHECK_THROWS(PolicyLearner(cfg, small_policy(rng, 4, 2, 6, false)));
}

TEST_CASE("policy checkpoint round-trip") {
  Rng rng(14);
  const auto p = small_policy(rng, 7, 3, 9, true);
  const auto path = (std::filesystem::temp_directory_path() / "pads_policy_rt.json").string();
  p.save(path);
  const auto q = PolicyNetwork::load(path);
  CHECK(q.bins() == 3);
  CHECK(q.has_value_head());
  for (std::size_t i = 0; i < p.param_count(); ++i) CHECK(q.params()[i] == p.params()[i]);
  const auto s = random_state(7, rng);
  CHECK(q.forward(s).logits == p.forward(s).logits);
  std::filesystem::remove(path);
}

TEST_CASE("state layout") {
  StateConfig cfg{{2, 8, 16, 32}, 20, true, 30};
  CHECK(state_dim(cfg) == 175);
  RunningTracks tracks(cfg.running_averages, cfg.history);
  MetricSnapshot m{0, 0.5, 0.6, 0.7, 0.4, 1.0, 1.6};
  tracks.update(m);
  SamplingPmf pmf{0.1, 1.4, std::vector<double>(30, 1.0 / 30)};
  const auto s = build_state(tracks, pmf, 0.25, cfg);
  REQUIRE(static_cast<int>(s.size()) == 175);
  CHECK(s.back() == 0.25);
  CHECK(s[4] == doctest::Approx(0.5));  // intra halved
  CHECK(s[s.size() - 2] == doctest::Approx(1.0));  // p_k * K
  StateConfig small{{2}, 0, false, 4};
  CHECK(state_dim(small) == 4 + 4 + 1);
}
