#pragma once

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pads/dense.hpp"
#include "pads/metrics.hpp"
#include "pads/model.hpp"
#include "pads/samplers.hpp"

namespace pads {

// ---- training state -----------------------------------------------------

struct StateConfig {
  std::vector<int> running_averages{2, 8, 16, 32};
  int history = 20;
  bool recall_all = true;  // R@1,R@2,R@4 when set, only R@1 otherwise
  int bins = 30;
};

// Per-snapshot features: recalls, NMI, intra/2, inter/2 (distances halved into [0, 1]).
std::vector<double> snapshot_features(const MetricSnapshot& s, bool recall_all);
int features_per_snapshot(bool recall_all);

// Layout, in order:
//   running averages, one feature block per configured length
//   raw history of the last `history` snapshots, oldest first
//   previous PMF, each p_k scaled by K (so a uniform PMF reads as all ones)
//   training progress in [0, 1]
int state_dim(const StateConfig& config);
std::vector<double> build_state(const RunningTracks& tracks, const SamplingPmf& previous_pmf,
                                double progress, const StateConfig& config);

// ---- policy -------------------------------------------------------------

struct PolicyConfig {
  int state_dim = 0;
  int bins = 30;
  int hidden = 128;
  bool value_head = true;
};

// Two hidden ReLU layers, then K three-way heads (decrease / maintain / increase)
// and an optional scalar value estimate, all produced by one linear output layer.
class PolicyNetwork {
 public:
  struct Output {
    Matrix logits;  // K x 3
    double value = 0.0;
    DenseNet::Cache cache;
  };

  PolicyNetwork() = default;
  PolicyNetwork(const PolicyConfig& config, Rng& rng);
  PolicyNetwork(DenseNet net, int bins, bool value_head);

  Output forward(std::span<const double> state) const;
  // Gradient of sum(d_logits .* logits) + d_value * value over the parameters.
  std::vector<double> backward(const Output& out, const Matrix& d_logits, double d_value) const;

  std::span<const double> params() const { return net_.params(); }
  std::span<double> mutable_params() { return net_.params(); }
  std::size_t param_count() const { return net_.param_count(); }
  int bins() const { return bins_; }
  int state_dim() const { return net_.input_dim(); }
  bool has_value_head() const { return value_head_; }
  const DenseNet& net() const { return net_; }

  nlohmann::json to_json() const;
  static PolicyNetwork from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static PolicyNetwork load(const std::string& path);

 private:
  DenseNet net_;
  int bins_ = 0;
  bool value_head_ = false;
};

// Row-wise log-softmax of a K x 3 logit matrix.
Matrix log_softmax_rows(const Matrix& logits);

// Sum over heads of log softmax(logits_k)[a_k].
double action_log_prob(const Matrix& logits, std::span<const Trit> action);

// d/dlogits of action_log_prob: one_hot(a_k) - softmax(logits_k), per head.
Matrix action_log_prob_grad(const Matrix& logits, std::span<const Trit> action);

struct SampledAction {
  ActionVector action;
  double log_prob = 0.0;
};

// Each head sampled independently from its softmax.
SampledAction sample_action(const Matrix& logits, const ActionMultipliers& multipliers, Rng& rng);

// sign(e_new - e_old) with an exact tie mapping to 0.
int compute_reward(double e_new, double e_old);

struct PolicyTransition {
  std::vector<double> state;
  std::vector<Trit> action;
  double log_prob = 0.0;      // at sampling time
  int reward = 0;
  double value = 0.0;         // V(s) at update time, when a value head exists
  double old_log_prob = 0.0;  // log pi_old(a|s), PPO only
};

// ---- updates ------------------------------------------------------------

enum class RlAlgorithm { kReinforce, kReinforceEma, kA2c, kPpoEma, kPpoA2c };

struct RlConfig {
  RlAlgorithm algorithm = RlAlgorithm::kPpoA2c;
  double lr = 1e-4;
  int hidden = 128;
  double ema_decay = 0.9;
  double value_coef = 0.5;
  double ppo_epsilon = 0.2;
  int old_policy_every = 5;
};

bool uses_value_head(RlAlgorithm a);
bool uses_ema_baseline(RlAlgorithm a);
bool uses_ppo(RlAlgorithm a);

// Gradient of the loss being minimized plus the scalars it was built from.
struct PolicyGradient {
  std::vector<double> grad;
  double objective = 0.0;   // policy term being maximized (log-prob x advantage, or PPO surrogate)
  double value_loss = 0.0;  // (V - r)^2, zero without a value head
  double advantage = 0.0;
  double ratio = 1.0;
  bool clipped = false;     // PPO clip branch selected (zero policy gradient)
};

// Loss -(r - baseline) * log pi(a|s).
PolicyGradient reinforce_gradient(const PolicyNetwork& policy, const PolicyTransition& t,
                                  double baseline);

// Loss -A * log pi(a|s) + c_v (V(s) - r)^2 with A = r - V(s) held constant.
PolicyGradient a2c_gradient(const PolicyNetwork& policy, const PolicyTransition& t,
                            double value_coef);

// Loss -min(rho A, clip(rho, 1-eps, 1+eps) A) [+ c_v (V(s) - r)^2], rho = exp(log pi - t.old_log_prob).
// With a value head A = r - V(s); without one A = r - baseline.
PolicyGradient ppo_gradient(const PolicyNetwork& policy, const PolicyTransition& t, double epsilon,
                            double value_coef, double baseline = 0.0);

// Mean-over-transitions updates; each applies one optimizer step and returns
// the gradient it used.
std::vector<double> reinforce_update(PolicyNetwork& policy, Adam& optimizer,
                                     std::span<const PolicyTransition> transitions, double& baseline,
                                     std::optional<double> ema_decay);
std::vector<double> a2c_update(PolicyNetwork& policy, Adam& optimizer,
                               std::span<const PolicyTransition> transitions, double value_coef);
std::vector<double> ppo_update(PolicyNetwork& policy, const PolicyNetwork& old_policy, Adam& optimizer,
                               std::span<PolicyTransition> transitions, double epsilon,
                               double value_coef, double& baseline, std::optional<double> ema_decay);

// Policy, old-policy snapshot, optimizer and baseline for one run.
class PolicyLearner {
 public:
  PolicyLearner(const RlConfig& config, PolicyNetwork policy);

  // One update from a single-step episode; fills in value / old_log_prob.
  PolicyGradient update(PolicyTransition& t);

  SampledAction act(std::span<const double> state, const ActionMultipliers& m, Rng& rng) const;

  const PolicyNetwork& policy() const { return policy_; }
  const PolicyNetwork& old_policy() const { return old_policy_; }
  double baseline() const { return baseline_; }
  int updates() const { return updates_; }

 private:
  RlConfig config_;
  PolicyNetwork policy_;
  PolicyNetwork old_policy_;
  Adam optimizer_;
  double baseline_ = 0.0;
  int updates_ = 0;
};

}  // namespace pads
