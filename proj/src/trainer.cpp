#include "pads/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pads/config.hpp"

namespace pads {

// ---- RunConfig ----------------------------------------------------------

bool RunConfig::uses_pmf() const {
  return sampler == SamplerKind::kPads || sampler == SamplerKind::kCurriculumLinear ||
         sampler == SamplerKind::kCurriculumNonlinear;
}

bool RunConfig::uses_policy() const {
  return sampler == SamplerKind::kPads && transfer != TransferMode::kFixedFinalPmf;
}

StateConfig RunConfig::state_config() const { return StateConfig{running_averages, history, recall_all, k}; }

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> p;
  auto check = [&p](bool ok, const std::string& msg) {
    if (!ok) p.push_back(msg);
  };
  check(data_source == "synthetic" || data_source == "file", "data.source must be 'synthetic' or 'file'");
  check(data_source != "file" || !data_path.empty(), "data.path is required when data.source=file");
  if (data_source == "synthetic") {
    check(synthetic.classes >= 1 && synthetic.per_class >= 1 && synthetic.input_dim >= 1,
          "data.classes, data.per_class and data.input_dim must be >= 1");
    check(synthetic.within_std >= 0.0, "data.within_std must be >= 0");
  }
  check(val_fraction > 0.0 && val_fraction <= 0.5, "split.val_fraction must lie in (0, 0.5]");
  check(model.hidden >= 1 && model.hidden_layers >= 0, "model.hidden must be >= 1 and model.hidden_layers >= 0");
  check(model.embedding_dim >= 3, "model.embedding_dim must be >= 3");
  check(lr >= 0.0, "model.lr must be >= 0");
  check(loss.gamma > 0.0, "loss.gamma must be > 0");
  check(loss.kind != LossKind::kMargin || loss.beta_margin > 0.0, "loss.beta_margin must be > 0");
  check(beta_lr >= 0.0, "loss.beta_lr must be >= 0");
  check(dist_lambda >= 0.0, "sampler.lambda must be >= 0 (0 selects the median-based cap)");
  check(batch_classes >= 2, "batch.classes must be >= 2");
  check(batch_per_class >= 2, "batch.per_class must be >= 2");
  check(m >= 1, "train.m must be >= 1");
  check(iterations >= 1, "train.iterations must be >= 1");
  check(lambda_min >= 0.0 && lambda_min < lambda_max && lambda_max <= 2.0,
        "pmf interval must satisfy 0 <= pmf.lambda_min < pmf.lambda_max <= 2");
  check(k >= 2, "pmf.k must be >= 2");
  check(pmf_init.epsilon >= 0.0, "pmf.init_epsilon must be >= 0");
  check(pmf_init.kind != PmfInitKind::kUniformRange || pmf_init.range_lo < pmf_init.range_hi,
        "pmf.init_a must be < pmf.init_b");
  check(pmf_init.kind != PmfInitKind::kGaussian || pmf_init.sigma > 0.0, "pmf.init_sigma must be > 0");
  check(multipliers.alpha > 0.0 && multipliers.alpha < 1.0, "pmf.alpha must lie in (0, 1)");
  check(multipliers.beta > 1.0, "pmf.beta must be > 1");
  if (sampler == SamplerKind::kCurriculumLinear) {
    check(curriculum.window > 0.0 && curriculum.start >= lambda_min &&
              curriculum.start + curriculum.window <= lambda_max + 1e-12,
          "curriculum window [start, start + window] must lie inside the pmf interval");
  }
  check(rl.lr >= 0.0, "rl.lr must be >= 0");
  check(rl.hidden >= 1, "rl.hidden must be >= 1");
  check(rl.ema_decay >= 0.0 && rl.ema_decay < 1.0, "rl.ema_decay must lie in [0, 1)");
  check(rl.value_coef >= 0.0, "rl.value_coef must be >= 0");
  check(rl.old_policy_every >= 1, "rl.old_policy_every must be >= 1");
  check(rl.ppo_epsilon > 0.0, "ppo.epsilon must be > 0");
  check(!running_averages.empty(), "state.running_averages must not be empty");
  for (int l : running_averages) check(l >= 1, "state.running_averages entries must be >= 1");
  check(history >= 0, "state.history must be >= 0");
  check(kmeans_iterations >= 1, "eval.kmeans_iterations must be >= 1");
  if (transfer != TransferMode::kNone) check(sampler == SamplerKind::kPads, "transfer modes require sampler.kind=pads");
  check(transfer != TransferMode::kFixedPolicy || !transfer_policy_path.empty(),
        "transfer.policy_path is required for transfer.mode=fixed-policy");
  return p;
}

std::vector<std::string> RunConfig::lint() const {
  std::vector<std::string> out;
  if (sampler == SamplerKind::kPads && !multipliers.mean_is_one()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "pmf.alpha=%g, pmf.beta=%g: (alpha + beta) / 2 = %g, not 1",
                  multipliers.alpha, multipliers.beta, 0.5 * (multipliers.alpha + multipliers.beta));
    out.emplace_back(buf);
  }
  return out;
}

// ---- validation split ---------------------------------------------------

DataSplit split_validation(const LabeledDataset& data, double fraction, SplitMode mode, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw std::invalid_argument("validation fraction must lie in (0, 0.5]");
  Rng rng = make_rng(seed, Stream::kSplit);
  DataSplit s;
  if (mode == SplitMode::kPerClass) {
    for (int c = 0; c < data.classes(); ++c) {
      auto rows = data.class_rows[static_cast<std::size_t>(c)];
      const int n = static_cast<int>(rows.size());
      if (n < 2) throw std::invalid_argument("class " + std::to_string(c) + " has fewer than 2 samples");
      const int n_val = std::clamp(static_cast<int>(std::lround(fraction * n)), 1, n - 1);
      std::shuffle(rows.begin(), rows.end(), rng);
      s.val_rows.insert(s.val_rows.end(), rows.begin(), rows.begin() + n_val);
      s.train_rows.insert(s.train_rows.end(), rows.begin() + n_val, rows.end());
    }
  } else {
    const int c_total = data.classes();
    const int c_val = std::max(2, static_cast<int>(std::lround(fraction * c_total)));
    if (c_total - c_val < 2) throw std::invalid_argument("by-class split needs at least 4 classes");
    std::vector<int> classes(static_cast<std::size_t>(c_total));
    for (int c = 0; c < c_total; ++c) classes[static_cast<std::size_t>(c)] = c;
    std::shuffle(classes.begin(), classes.end(), rng);
    for (int i = 0; i < c_total; ++i) {
      const auto& rows = data.class_rows[static_cast<std::size_t>(classes[static_cast<std::size_t>(i)])];
      auto& dst = i < c_val ? s.val_rows : s.train_rows;
      dst.insert(dst.end(), rows.begin(), rows.end());
    }
  }
  std::sort(s.train_rows.begin(), s.train_rows.end());
  std::sort(s.val_rows.begin(), s.val_rows.end());
  s.train = data.subset(s.train_rows);
  s.val = data.subset(s.val_rows);
  return s;
}

// ---- Trainer ------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
  return out;
}

SamplingPmf load_pmf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read pmf " + path);
  std::string line, last;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) last = line;
  }
  if (last.empty()) throw std::runtime_error(path + ": no pmf snapshot");
  return SamplingPmf::from_json(nlohmann::json::parse(last));
}

}  // namespace

Trainer::Trainer(RunConfig config, const LabeledDataset& data)
    : config_(std::move(config)), tracks_(config_.running_averages, config_.history) {
  if (auto problems = config_.validate(); !problems.empty()) throw std::invalid_argument(join(problems));

  split_ = split_validation(data, config_.val_fraction, config_.split_mode, config_.synthetic.seed);
  if (split_.val.size() <= 4) throw std::invalid_argument("validation set needs more than 4 samples for Recall@4");
  int eligible = 0;
  for (const auto& rows : split_.train.class_rows) {
    if (static_cast<int>(rows.size()) >= config_.batch_per_class) ++eligible;
  }
  if (eligible < config_.batch_classes) {
    throw std::invalid_argument("batch composition needs " + std::to_string(config_.batch_classes) +
                                " training classes with >= " + std::to_string(config_.batch_per_class) +
                                " samples, found " + std::to_string(eligible));
  }

  config_.model.input_dim = data.input_dim();
  Rng init_rng = make_rng(config_.seed, Stream::kModelInit);
  model_ = EmbeddingModel(config_.model, init_rng);
  optimizer_ = Adam(model_.param_count(), AdamConfig{config_.lr});
  if (config_.loss.kind == LossKind::kMargin && config_.loss.learn_beta) {
    class_beta_.assign(static_cast<std::size_t>(data.classes()), config_.loss.beta_margin);
    beta_optimizer_ = Adam(class_beta_.size(), AdamConfig{config_.beta_lr});
  }

  batch_rng_ = make_rng(config_.seed, Stream::kBatch);
  negative_rng_ = make_rng(config_.seed, Stream::kNegatives);
  action_rng_ = make_rng(config_.seed, Stream::kPolicyActions);
  cluster_seed_ = mix_seed(config_.seed, static_cast<std::uint64_t>(Stream::kClustering));

  switch (config_.sampler) {
    case SamplerKind::kPads:
      if (config_.transfer == TransferMode::kFixedFinalPmf && !config_.transfer_pmf_path.empty()) {
        pmf_ = load_pmf(config_.transfer_pmf_path);
        if (pmf_.bins() != config_.k) throw std::invalid_argument("loaded pmf bin count differs from pmf.k");
      } else {
        pmf_ = init_pmf(config_.lambda_min, config_.lambda_max, config_.k, config_.pmf_init);
      }
      break;
    case SamplerKind::kCurriculumLinear:
    case SamplerKind::kCurriculumNonlinear:
      pmf_ = curriculum_pmf(0.0,
                            config_.sampler == SamplerKind::kCurriculumLinear ? CurriculumKind::kLinear
                                                                                : CurriculumKind::kNonlinear,
                            config_.curriculum, config_.lambda_min, config_.lambda_max, config_.k,
                            model_.embedding_dim());
      break;
    default:
      break;
  }

  initial_ = evaluate_validation();
  tracks_.update(initial_);
  previous_target_ = initial_.target();

  if (config_.uses_policy()) {
    const StateConfig sc = config_.state_config();
    PolicyNetwork policy;
    if (config_.transfer == TransferMode::kFixedPolicy) {
      policy = PolicyNetwork::load(config_.transfer_policy_path);
      if (policy.state_dim() != state_dim(sc) || policy.bins() != config_.k) {
        throw std::invalid_argument("loaded policy does not match the configured state layout");
      }
    } else {
      Rng policy_rng = make_rng(config_.seed, Stream::kPolicyInit);
      policy = PolicyNetwork(PolicyConfig{state_dim(sc), config_.k, config_.rl.hidden,
                                          uses_value_head(config_.rl.algorithm)},
                             policy_rng);
    }
    RlConfig rl = config_.rl;
    // A replayed policy is never updated, so its head layout only has to support acting.
    if (config_.transfer == TransferMode::kFixedPolicy && !policy.has_value_head()) rl.algorithm = RlAlgorithm::kReinforce;
    learner_.emplace(rl, std::move(policy));
    policy_learns_ = config_.transfer == TransferMode::kNone;
    state_ = build_state(tracks_, pmf_, 0.0, sc);
  }
}

double Trainer::progress() const {
  return std::min(1.0, static_cast<double>(completed_iterations_) / static_cast<double>(config_.iterations));
}

MetricSnapshot Trainer::evaluate_validation() const {
  const EmbeddingBatch batch = model_.forward(split_.val.features, split_.val.labels);
  return evaluate(batch, cluster_seed_, config_.kmeans_iterations);
}

int Trainer::sample_negative(int anchor, int positive, const Matrix& dist, const std::vector<int>& labels) {
  const int b = static_cast<int>(labels.size());
  const bool self_reg = config_.self_regularization && config_.sampler == SamplerKind::kPads;
  std::vector<int> cand;
  std::vector<double> d;
  for (int j = 0; j < b; ++j) {
    const bool same = labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(anchor)];
    if (j == anchor || (same && (!self_reg || j == positive))) continue;
    cand.push_back(j);
    d.push_back(dist(anchor, j));
  }
  NegativeChoice choice;
  switch (config_.sampler) {
    case SamplerKind::kRandom:
      choice = sample_negative_random(cand, negative_rng_);
      break;
    case SamplerKind::kSemihard:
      choice = sample_negative_semihard(dist(anchor, positive), cand, d);
      break;
    case SamplerKind::kDistweighted:
      choice = sample_negative_distweighted(
          cand, d, model_.embedding_dim(),
          config_.dist_lambda > 0.0 ? std::optional<double>(config_.dist_lambda) : std::nullopt, negative_rng_);
      break;
    case SamplerKind::kCurriculumLinear:
    case SamplerKind::kCurriculumNonlinear:
    case SamplerKind::kPads:
      choice = sample_negative_adaptive(pmf_, cand, d, negative_rng_);
      break;
  }
  if (choice.fallback) ++total_fallbacks_;
  return choice.index;
}

std::pair<double, int> Trainer::train_step() {
  const int p = config_.batch_classes;
  const int q = config_.batch_per_class;
  const int fallbacks_before = total_fallbacks_;

  std::vector<int> classes;
  for (int c = 0; c < static_cast<int>(split_.train.class_rows.size()); ++c) {
    if (static_cast<int>(split_.train.class_rows[static_cast<std::size_t>(c)].size()) >= q) classes.push_back(c);
  }
  std::vector<int> rows;
  for (int i = 0; i < p; ++i) {
    const int j = i + uniform_index(batch_rng_, static_cast<int>(classes.size()) - i);
    std::swap(classes[static_cast<std::size_t>(i)], classes[static_cast<std::size_t>(j)]);
    auto members = split_.train.class_rows[static_cast<std::size_t>(classes[static_cast<std::size_t>(i)])];
    for (int s = 0; s < q; ++s) {
      const int t = s + uniform_index(batch_rng_, static_cast<int>(members.size()) - s);
      std::swap(members[static_cast<std::size_t>(s)], members[static_cast<std::size_t>(t)]);
      rows.push_back(members[static_cast<std::size_t>(s)]);
    }
  }

  const int b = static_cast<int>(rows.size());
  Matrix inputs(b, split_.train.input_dim());
  std::vector<int> labels(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    inputs.row(i) = split_.train.features.row(rows[static_cast<std::size_t>(i)]);
    labels[static_cast<std::size_t>(i)] = split_.train.labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  }

  EmbeddingModel::Cache cache;
  const Matrix emb = model_.embed(inputs, &cache);
  const Matrix dist = pairwise_distances(emb);

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(b));
  for (int a = 0; a < b; ++a) {
    // batch rows are grouped by class, q per class
    const int group = (a / q) * q;
    int pos = group + uniform_index(batch_rng_, q - 1);
    if (pos >= a) ++pos;
    triplets.push_back({a, pos, sample_negative(a, pos, dist, labels)});
  }

  const LossGradient g = backward(model_, cache, labels, triplets, config_.loss, class_beta_);
  if (!std::isfinite(g.loss)) throw std::runtime_error("non-finite loss at iteration " + std::to_string(completed_iterations_));
  optimizer_.step(model_.mutable_params(), g.params);
  if (!class_beta_.empty()) beta_optimizer_.step(class_beta_, g.beta);
  return {g.loss, total_fallbacks_ - fallbacks_before};
}

EpisodeReport Trainer::run_episode() {
  if (done()) throw std::logic_error("training already finished");
  const auto start = std::chrono::steady_clock::now();
  ++episode_;
  EpisodeReport rep;
  rep.episode = episode_;

  const std::vector<double> state_before = state_;
  std::optional<SampledAction> act;
  if (learner_) {
    act = learner_->act(state_before, config_.multipliers, action_rng_);
    pmf_ = apply_action(pmf_, act->action);
    rep.action = act->action.trits;
    rep.log_prob = act->log_prob;
  } else if (config_.sampler == SamplerKind::kCurriculumLinear || config_.sampler == SamplerKind::kCurriculumNonlinear) {
    pmf_ = curriculum_pmf(progress(),
                          config_.sampler == SamplerKind::kCurriculumLinear ? CurriculumKind::kLinear
                                                                              : CurriculumKind::kNonlinear,
                          config_.curriculum, config_.lambda_min, config_.lambda_max, config_.k,
                          model_.embedding_dim());
  }
  if (config_.uses_pmf()) rep.pmf = pmf_;

  const long steps = std::min<long>(config_.m, config_.iterations - completed_iterations_);
  double loss_sum = 0.0;
  for (long i = 0; i < steps; ++i) {
    const auto [loss, fallbacks] = train_step();
    loss_sum += loss;
    rep.fallbacks += fallbacks;
    ++completed_iterations_;
  }
  rep.steps = static_cast<int>(steps);
  rep.mean_loss = loss_sum / static_cast<double>(steps);

  rep.metrics = evaluate_validation();
  rep.metrics.episode = episode_;
  rep.reward = compute_reward(rep.metrics.target(), previous_target_);
  previous_target_ = rep.metrics.target();
  tracks_.update(rep.metrics);

  if (learner_) {
    if (policy_learns_) {
      PolicyTransition t{state_before, act->action.trits, act->log_prob, rep.reward};
      learner_->update(t);
      rep.value = t.value;
    } else if (learner_->policy().has_value_head()) {
      rep.value = learner_->policy().forward(state_before).value;
    }
    state_ = build_state(tracks_, pmf_, progress(), config_.state_config());
  }

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---- train --------------------------------------------------------------

LabeledDataset load_run_data(const RunConfig& config, std::vector<std::string>* warnings) {
  if (config.data_source == "file") return load_dataset(config.data_path, warnings);
  return generate_synthetic(config.synthetic);
}

namespace {

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json snapshot_json(const MetricSnapshot& s) {
  return {{"episode", s.episode}, {"r1", s.r1},       {"r2", s.r2},      {"r4", s.r4},
          {"nmi", s.nmi},         {"intra", s.intra}, {"inter", s.inter}};
}

}  // namespace

TrainSummary train(const RunConfig& config, const std::string& run_dir) {
  std::vector<std::string> warnings;
  const LabeledDataset data = load_run_data(config, &warnings);
  TrainSummary s = train(config, data, run_dir);
  s.warnings.insert(s.warnings.begin(), warnings.begin(), warnings.end());
  return s;
}

TrainSummary train(const RunConfig& config, const LabeledDataset& data, const std::string& run_dir) {
  namespace fs = std::filesystem;
  Trainer trainer(config, data);
  TrainSummary summary;
  summary.initial = trainer.initial_metrics();
  summary.warnings = config.lint();

  const bool write = !run_dir.empty();
  const fs::path dir(run_dir);
  if (write) {
    fs::create_directories(dir);
    write_text_atomic(dir / "config.resolved", resolved_config(trainer.config()));
  }

  std::ostringstream metrics, pmfs, transitions;
  metrics << metrics_csv_header() << '\n';
  while (!trainer.done()) {
    EpisodeReport rep = trainer.run_episode();
    metrics << metrics_csv_row(rep.metrics, rep.reward) << '\n';
    if (rep.pmf) pmfs << rep.pmf->to_json(rep.episode).dump() << '\n';
    if (rep.action) {
      std::vector<int> a;
      for (Trit t : *rep.action) a.push_back(static_cast<int>(t));
      transitions << nlohmann::json{{"episode", rep.episode}, {"reward", rep.reward}, {"logprob", rep.log_prob},
                                    {"value", rep.value}, {"action", a}}
                         .dump()
                  << '\n';
    }
    summary.episodes.push_back(std::move(rep));
  }
  summary.final_metrics = summary.episodes.back().metrics;
  summary.fallbacks = trainer.total_fallbacks();
  if (summary.fallbacks > 0) {
    summary.warnings.push_back(std::to_string(summary.fallbacks) +
                               " negative draws fell back to uniform choice (no candidate in a nonempty bin)");
  }

  if (write) {
    write_text_atomic(dir / "metrics.csv", metrics.str());
    if (config.uses_pmf()) write_text_atomic(dir / "pmf.jsonl", pmfs.str());
    if (config.log_transitions && trainer.learner()) write_text_atomic(dir / "transitions.jsonl", transitions.str());
    trainer.model().save((dir / "model.json").string());
    if (trainer.learner()) trainer.learner()->policy().save((dir / "policy.json").string());
    nlohmann::json j{{"sampler", to_string(config.sampler)},
                     {"episodes", summary.episodes.size()},
                     {"iterations", trainer.completed_iterations()},
                     {"initial", snapshot_json(summary.initial)},
                     {"final", snapshot_json(summary.final_metrics)},
                     {"fallbacks", summary.fallbacks},
                     {"warnings", summary.warnings}};
    write_text_atomic(dir / "summary.json", j.dump(2) + "\n");
  }
  return summary;
}

}  // namespace pads
