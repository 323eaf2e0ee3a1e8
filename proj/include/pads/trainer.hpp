#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pads/data.hpp"
#include "pads/metrics.hpp"
#include "pads/model.hpp"
#include "pads/rl.hpp"
#include "pads/samplers.hpp"

namespace pads {

enum class SamplerKind { kRandom, kSemihard, kDistweighted, kCurriculumLinear, kCurriculumNonlinear, kPads };
enum class TransferMode { kNone, kFixedPolicy, kFixedFinalPmf };
enum class SplitMode { kPerClass, kByClass };

struct RunConfig {
  std::uint64_t seed = 0;

  // dataset
  std::string data_source = "synthetic";  // "synthetic" or "file"
  std::string data_path;
  SyntheticSpec synthetic;
  double val_fraction = 0.15;
  SplitMode split_mode = SplitMode::kPerClass;

  // learner
  EmbeddingModelConfig model;  // input_dim is taken from the dataset
  double lr = 1e-3;
  LossConfig loss;
  double beta_lr = 1e-3;

  // sampling
  SamplerKind sampler = SamplerKind::kPads;
  double dist_lambda = 0.0;  // <= 0: cap at 4x the median inverse density
  bool self_regularization = false;
  int batch_classes = 4;
  int batch_per_class = 4;

  // schedule
  int m = 30;
  long iterations = 4500;

  // adaptive distribution
  double lambda_min = 0.1;
  double lambda_max = 1.4;
  int k = 30;
  PmfInit pmf_init;
  ActionMultipliers multipliers;
  CurriculumConfig curriculum;

  // teacher
  RlConfig rl;
  std::vector<int> running_averages{2, 8, 16, 32};
  int history = 20;
  bool recall_all = true;

  TransferMode transfer = TransferMode::kNone;
  std::string transfer_policy_path;
  std::string transfer_pmf_path;

  bool log_transitions = false;
  int kmeans_iterations = 300;

  int episodes() const { return static_cast<int>((iterations + m - 1) / m); }
  bool uses_pmf() const;
  bool uses_policy() const;
  StateConfig state_config() const;

  // Every violated constraint, one message each. Empty when valid.
  std::vector<std::string> validate() const;
  // Non-fatal remarks, e.g. multipliers whose mean is not 1.
  std::vector<std::string> lint() const;
};

struct DataSplit {
  LabeledDataset train;
  LabeledDataset val;
  std::vector<int> train_rows;
  std::vector<int> val_rows;
};

// per-class: round(fraction * n_c) validation rows from every class (at least
// one, leaving at least two for training). by-class: whole classes held out,
// at least two of them. Throws std::invalid_argument when infeasible.
DataSplit split_validation(const LabeledDataset& data, double fraction, SplitMode mode, std::uint64_t seed);

struct EpisodeReport {
  int episode = 0;
  MetricSnapshot metrics;
  int reward = 0;
  std::optional<SamplingPmf> pmf;  // distribution used during the episode
  int steps = 0;
  double mean_loss = 0.0;
  int fallbacks = 0;
  double seconds = 0.0;
  // teacher bookkeeping (pads with a learning or replayed policy)
  std::optional<std::vector<Trit>> action;
  double log_prob = 0.0;
  double value = 0.0;
};

// One training run, advanced one episode at a time.
class Trainer {
 public:
  Trainer(RunConfig config, const LabeledDataset& data);

  bool done() const { return completed_iterations_ >= config_.iterations; }
  EpisodeReport run_episode();

  const RunConfig& config() const { return config_; }
  const EmbeddingModel& model() const { return model_; }
  const SamplingPmf& pmf() const { return pmf_; }
  const std::optional<PolicyLearner>& learner() const { return learner_; }
  const MetricSnapshot& initial_metrics() const { return initial_; }
  const DataSplit& split() const { return split_; }
  long completed_iterations() const { return completed_iterations_; }
  int total_fallbacks() const { return total_fallbacks_; }

  // Embeds the validation set and returns its metric snapshot.
  MetricSnapshot evaluate_validation() const;
  double progress() const;

 private:
  // One DML iteration; returns (loss, fallbacks).
  std::pair<double, int> train_step();
  int sample_negative(int anchor, int positive, const Matrix& dist, const std::vector<int>& labels);

  RunConfig config_;
  DataSplit split_;
  EmbeddingModel model_;
  Adam optimizer_;
  std::vector<double> class_beta_;
  Adam beta_optimizer_;

  SamplingPmf pmf_;
  std::optional<PolicyLearner> learner_;
  bool policy_learns_ = false;
  RunningTracks tracks_;
  std::vector<double> state_;

  Rng batch_rng_;
  Rng negative_rng_;
  Rng action_rng_;
  std::uint64_t cluster_seed_;

  MetricSnapshot initial_;
  double previous_target_ = 0.0;
  long completed_iterations_ = 0;
  int episode_ = 0;
  int total_fallbacks_ = 0;
};

struct TrainSummary {
  std::vector<EpisodeReport> episodes;
  MetricSnapshot initial;
  MetricSnapshot final_metrics;
  int fallbacks = 0;
  std::vector<std::string> warnings;
};

// Loads or generates the configured dataset.
LabeledDataset load_run_data(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

// Runs to completion. With a non-empty `run_dir` the artifacts are written there:
// metrics.csv, pmf.jsonl (pmf-based samplers), transitions.jsonl (when enabled),
// config.resolved, model.json, policy.json (pads) and summary.json.
TrainSummary train(const RunConfig& config, const std::string& run_dir);
TrainSummary train(const RunConfig& config, const LabeledDataset& data, const std::string& run_dir);

}  // namespace pads
