#include "pads/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pads {

// ---- training state -----------------------------------------------------

int features_per_snapshot(bool recall_all) { return recall_all ? 6 : 4; }

std::vector<double> snapshot_features(const MetricSnapshot& s, bool recall_all) {
  if (recall_all) return {s.r1, s.r2, s.r4, s.nmi, 0.5 * s.intra, 0.5 * s.inter};
  return {s.r1, s.nmi, 0.5 * s.intra, 0.5 * s.inter};
}

int state_dim(const StateConfig& c) {
  const int f = features_per_snapshot(c.recall_all);
  return f * static_cast<int>(c.running_averages.size()) + f * c.history + c.bins + 1;
}

std::vector<double> build_state(const RunningTracks& tracks, const SamplingPmf& previous_pmf,
                                double progress, const StateConfig& config) {
  if (previous_pmf.bins() != config.bins) throw std::invalid_argument("state: pmf bin count mismatch");
  if (!(progress >= 0.0 && progress <= 1.0)) throw std::invalid_argument("state: progress outside [0, 1]");
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(state_dim(config)));
  auto append = [&](const MetricSnapshot& m) {
    for (double v : snapshot_features(m, config.recall_all)) s.push_back(v);
  };
  for (int len : config.running_averages) append(tracks.average(len));
  if (config.history > 0) {
    if (tracks.history() < config.history) throw std::invalid_argument("state: tracks keep too little history");
    const auto hist = tracks.history_window();
    for (auto it = hist.end() - config.history; it != hist.end(); ++it) append(*it);
  }
  for (double p : previous_pmf.p) s.push_back(p * config.bins);
  s.push_back(progress);
  return s;
}

// ---- policy network -----------------------------------------------------

namespace {

int policy_outputs(int bins, bool value_head) { return 3 * bins + (value_head ? 1 : 0); }

}  // namespace

PolicyNetwork::PolicyNetwork(const PolicyConfig& c, Rng& rng)
    : net_({c.state_dim, c.hidden, c.hidden, policy_outputs(c.bins, c.value_head)}),
      bins_(c.bins),
      value_head_(c.value_head) {
  if (c.bins < 1 || c.state_dim < 1) throw std::invalid_argument("invalid policy shape");
  // Small output layer so the initial policy is close to uniform per head.
  net_.init(rng, 0.01);
}

PolicyNetwork::PolicyNetwork(DenseNet net, int bins, bool value_head)
    : net_(std::move(net)), bins_(bins), value_head_(value_head) {
  if (net_.output_dim() != policy_outputs(bins, value_head)) {
    throw std::invalid_argument("policy output layer does not match bin count");
  }
}

PolicyNetwork::Output PolicyNetwork::forward(std::span<const double> state) const {
  if (static_cast<int>(state.size()) != net_.input_dim()) {
    throw std::invalid_argument("state has " + std::to_string(state.size()) +
                                " features, policy expects " + std::to_string(net_.input_dim()));
  }
  Matrix x(1, static_cast<Eigen::Index>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = state[i];
  Output out;
  const Matrix y = net_.forward(x, &out.cache);
  out.logits.resize(bins_, 3);
  for (int k = 0; k < bins_; ++k) {
    for (int j = 0; j < 3; ++j) out.logits(k, j) = y(0, 3 * k + j);
  }
  out.value = value_head_ ? y(0, 3 * bins_) : 0.0;
  return out;
}

std::vector<double> PolicyNetwork::backward(const Output& out, const Matrix& d_logits,
                                            double d_value) const {
  if (d_logits.rows() != bins_ || d_logits.cols() != 3) throw std::invalid_argument("logit gradient shape");
  Matrix d_out = Matrix::Zero(1, net_.output_dim());
  for (int k = 0; k < bins_; ++k) {
    for (int j = 0; j < 3; ++j) d_out(0, 3 * k + j) = d_logits(k, j);
  }
  if (value_head_) d_out(0, 3 * bins_) = d_value;
  return net_.backward(out.cache, d_out);
}

nlohmann::json PolicyNetwork::to_json() const {
  nlohmann::json j = net_.to_json();
  j["kind"] = "policy";
  j["bins"] = bins_;
  j["value_head"] = value_head_;
  return j;
}

PolicyNetwork PolicyNetwork::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "policy") throw std::runtime_error("checkpoint is not a policy");
  return PolicyNetwork(DenseNet::from_json(j), j.at("bins").get<int>(), j.at("value_head").get<bool>());
}

void PolicyNetwork::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump() << '\n';
}

PolicyNetwork PolicyNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return from_json(nlohmann::json::parse(in));
}

// ---- action distribution ------------------------------------------------

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index k = 0; k < logits.rows(); ++k) {
    const double top = logits.row(k).maxCoeff();
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) z += std::exp(logits(k, j) - top);
    const double lz = top + std::log(z);
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out(k, j) = logits(k, j) - lz;
  }
  return out;
}

double action_log_prob(const Matrix& logits, std::span<const Trit> action) {
  if (static_cast<Eigen::Index>(action.size()) != logits.rows()) throw std::invalid_argument("action size mismatch");
  const Matrix lp = log_softmax_rows(logits);
  double total = 0.0;
  for (std::size_t k = 0; k < action.size(); ++k) {
    total += lp(static_cast<Eigen::Index>(k), static_cast<int>(action[k]));
  }
  return total;
}

Matrix action_log_prob_grad(const Matrix& logits, std::span<const Trit> action) {
  if (static_cast<Eigen::Index>(action.size()) != logits.rows()) throw std::invalid_argument("action size mismatch");
  Matrix g = -log_softmax_rows(logits).array().exp().matrix();
  for (std::size_t k = 0; k < action.size(); ++k) {
    g(static_cast<Eigen::Index>(k), static_cast<int>(action[k])) += 1.0;
  }
  return g;
}

SampledAction sample_action(const Matrix& logits, const ActionMultipliers& multipliers, Rng& rng) {
  const Matrix lp = log_softmax_rows(logits);
  SampledAction out;
  out.action.multipliers = multipliers;
  out.action.trits.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index k = 0; k < logits.rows(); ++k) {
    const double probs[3] = {std::exp(lp(k, 0)), std::exp(lp(k, 1)), std::exp(lp(k, 2))};
    const int j = sample_categorical(probs, rng);
    out.action.trits.push_back(static_cast<Trit>(j));
    out.log_prob += lp(k, j);
  }
  return out;
}

int compute_reward(double e_new, double e_old) {
  if (e_new > e_old) return 1;
  if (e_new < e_old) return -1;
  return 0;
}

// ---- gradients ----------------------------------------------------------

bool uses_value_head(RlAlgorithm a) { return a == RlAlgorithm::kA2c || a == RlAlgorithm::kPpoA2c; }
bool uses_ema_baseline(RlAlgorithm a) { return a == RlAlgorithm::kReinforceEma || a == RlAlgorithm::kPpoEma; }
bool uses_ppo(RlAlgorithm a) { return a == RlAlgorithm::kPpoEma || a == RlAlgorithm::kPpoA2c; }

namespace {

// Loss gradient for  -coef_on_logp * log pi(a|s)  (+ value term with dL/dV = d_value).
std::vector<double> combine(const PolicyNetwork& policy, const PolicyNetwork::Output& out,
                            std::span<const Trit> action, double logp_scale, double d_value) {
  const Matrix d_logits = -logp_scale * action_log_prob_grad(out.logits, action);
  return policy.backward(out, d_logits, d_value);
}

}  // namespace

PolicyGradient reinforce_gradient(const PolicyNetwork& policy, const PolicyTransition& t,
                                  double baseline) {
  const auto out = policy.forward(t.state);
  PolicyGradient g;
  g.advantage = static_cast<double>(t.reward) - baseline;
  g.objective = g.advantage * action_log_prob(out.logits, t.action);
  g.grad = combine(policy, out, t.action, g.advantage, 0.0);
  return g;
}

PolicyGradient a2c_gradient(const PolicyNetwork& policy, const PolicyTransition& t, double value_coef) {
  if (!policy.has_value_head()) throw std::invalid_argument("A2C needs a value head");
  const auto out = policy.forward(t.state);
  PolicyGradient g;
  const double r = static_cast<double>(t.reward);
  g.advantage = r - out.value;
  g.objective = g.advantage * action_log_prob(out.logits, t.action);
  g.value_loss = (out.value - r) * (out.value - r);
  g.grad = combine(policy, out, t.action, g.advantage, value_coef * 2.0 * (out.value - r));
  return g;
}

PolicyGradient ppo_gradient(const PolicyNetwork& policy, const PolicyTransition& t, double epsilon,
                            double value_coef, double baseline) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ppo epsilon must be > 0");
  const auto out = policy.forward(t.state);
  PolicyGradient g;
  const double r = static_cast<double>(t.reward);
  const bool critic = policy.has_value_head();
  g.advantage = critic ? r - out.value : r - baseline;
  const double logp = action_log_prob(out.logits, t.action);
  g.ratio = std::exp(logp - t.old_log_prob);
  const double unclipped = g.ratio * g.advantage;
  const double clipped = std::clamp(g.ratio, 1.0 - epsilon, 1.0 + epsilon) * g.advantage;
  g.clipped = clipped < unclipped;
  g.objective = std::min(unclipped, clipped);
  // d(rho)/d(theta) = rho * d(log pi)/d(theta)
  const double logp_scale = g.clipped ? 0.0 : g.ratio * g.advantage;
  double d_value = 0.0;
  if (critic) {
    g.value_loss = (out.value - r) * (out.value - r);
    d_value = value_coef * 2.0 * (out.value - r);
  }
  g.grad = combine(policy, out, t.action, logp_scale, d_value);
  return g;
}

namespace {

void accumulate(std::vector<double>& total, const std::vector<double>& g) {
  if (total.empty()) total.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) total[i] += g[i];
}

void finish_step(PolicyNetwork& policy, Adam& optimizer, std::vector<double>& grad, std::size_t n) {
  for (double& v : grad) v /= static_cast<double>(n);
  optimizer.step(policy.mutable_params(), grad);
}

void update_baseline(double& baseline, std::span<const PolicyTransition> ts, std::optional<double> decay) {
  if (!decay) return;
  for (const auto& t : ts) baseline = *decay * baseline + (1.0 - *decay) * t.reward;
}

}  // namespace

std::vector<double> reinforce_update(PolicyNetwork& policy, Adam& optimizer,
                                     std::span<const PolicyTransition> transitions, double& baseline,
                                     std::optional<double> ema_decay) {
  if (transitions.empty()) throw std::invalid_argument("update needs at least one transition");
  std::vector<double> grad;
  for (const auto& t : transitions) accumulate(grad, reinforce_gradient(policy, t, ema_decay ? baseline : 0.0).grad);
  finish_step(policy, optimizer, grad, transitions.size());
  update_baseline(baseline, transitions, ema_decay);
  return grad;
}

std::vector<double> a2c_update(PolicyNetwork& policy, Adam& optimizer,
                               std::span<const PolicyTransition> transitions, double value_coef) {
  if (transitions.empty()) throw std::invalid_argument("update needs at least one transition");
  std::vector<double> grad;
  for (const auto& t : transitions) accumulate(grad, a2c_gradient(policy, t, value_coef).grad);
  finish_step(policy, optimizer, grad, transitions.size());
  return grad;
}

std::vector<double> ppo_update(PolicyNetwork& policy, const PolicyNetwork& old_policy, Adam& optimizer,
                               std::span<PolicyTransition> transitions, double epsilon,
                               double value_coef, double& baseline, std::optional<double> ema_decay) {
  if (transitions.empty()) throw std::invalid_argument("update needs at least one transition");
  std::vector<double> grad;
  for (auto& t : transitions) {
    t.old_log_prob = action_log_prob(old_policy.forward(t.state).logits, t.action);
    accumulate(grad, ppo_gradient(policy, t, epsilon, value_coef, ema_decay ? baseline : 0.0).grad);
  }
  finish_step(policy, optimizer, grad, transitions.size());
  update_baseline(baseline, transitions, ema_decay);
  return grad;
}

// ---- PolicyLearner ------------------------------------------------------

PolicyLearner::PolicyLearner(const RlConfig& config, PolicyNetwork policy)
    : config_(config),
      policy_(std::move(policy)),
      old_policy_(policy_),
      optimizer_(policy_.param_count(), AdamConfig{config.lr}) {
  if (uses_value_head(config.algorithm) && !policy_.has_value_head()) {
    throw std::invalid_argument("algorithm needs a policy with a value head");
  }
  if (config.old_policy_every < 1) throw std::invalid_argument("rl.old_policy_every must be >= 1");
}

SampledAction PolicyLearner::act(std::span<const double> state, const ActionMultipliers& m, Rng& rng) const {
  return sample_action(policy_.forward(state).logits, m, rng);
}

PolicyGradient PolicyLearner::update(PolicyTransition& t) {
  const std::optional<double> decay =
      uses_ema_baseline(config_.algorithm) ? std::optional<double>(config_.ema_decay) : std::nullopt;
  if (policy_.has_value_head()) t.value = policy_.forward(t.state).value;

  PolicyGradient g;
  switch (config_.algorithm) {
    case RlAlgorithm::kReinforce:
    case RlAlgorithm::kReinforceEma:
      g = reinforce_gradient(policy_, t, decay ? baseline_ : 0.0);
      break;
    case RlAlgorithm::kA2c:
      g = a2c_gradient(policy_, t, config_.value_coef);
      break;
    case RlAlgorithm::kPpoEma:
    case RlAlgorithm::kPpoA2c:
      t.old_log_prob = action_log_prob(old_policy_.forward(t.state).logits, t.action);
      g = ppo_gradient(policy_, t, config_.ppo_epsilon, config_.value_coef, decay ? baseline_ : 0.0);
      break;
  }
  optimizer_.step(policy_.mutable_params(), g.grad);
  if (decay) baseline_ = *decay * baseline_ + (1.0 - *decay) * t.reward;
  ++updates_;
  if (updates_ % config_.old_policy_every == 0) old_policy_ = policy_;
  return g;
}

}  // namespace pads
