#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pads/dense.hpp"
#include "pads/geometry.hpp"

namespace pads {

struct EmbeddingModelConfig {
  int input_dim = 20;
  int hidden = 64;
  int hidden_layers = 2;
  int embedding_dim = 32;
};

// MLP backbone followed by row-wise L2 normalization.
class EmbeddingModel {
 public:
  struct Cache {
    DenseNet::Cache net;
    Matrix raw;
    Vector norms;
    Matrix embeddings;
    std::uint64_t version = 0;
  };

  EmbeddingModel() = default;
  EmbeddingModel(const EmbeddingModelConfig& config, Rng& rng);
  explicit EmbeddingModel(DenseNet net);

  // Throws std::invalid_argument on an input width mismatch.
  Matrix embed(const Matrix& inputs, Cache* cache = nullptr) const;
  EmbeddingBatch forward(const Matrix& inputs, std::vector<int> labels,
                         Cache* cache = nullptr) const;

  // Parameter gradient of sum(d_embeddings .* embeddings). Throws std::logic_error
  // when the cache was produced before the parameters last changed.
  std::vector<double> backward(const Cache& cache, const Matrix& d_embeddings) const;

  std::span<const double> params() const { return net_.params(); }
  // Any write access invalidates outstanding caches.
  std::span<double> mutable_params() {
    ++version_;
    return net_.params();
  }
  std::size_t param_count() const { return net_.param_count(); }
  int input_dim() const { return net_.input_dim(); }
  int embedding_dim() const { return net_.output_dim(); }
  const DenseNet& net() const { return net_; }

  void save(const std::string& path) const;
  static EmbeddingModel load(const std::string& path);

 private:
  DenseNet net_;
  std::uint64_t version_ = 1;
};

// ---- losses -------------------------------------------------------------

enum class LossKind { kTriplet, kMargin };

struct LossConfig {
  LossKind kind = LossKind::kTriplet;
  double gamma = 0.2;
  double beta_margin = 1.2;
  bool learn_beta = false;  // per-class boundary, margin loss only

  void validate() const;
};

// max(0, d_ap^2 - d_an^2 + gamma)
double triplet_loss(double d_ap, double d_an, double gamma);

// max(0, gamma + d_ap - beta) + max(0, gamma - d_an + beta)
double margin_loss(double d_ap, double d_an, double gamma, double beta);

struct Triplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;
};

struct BatchLoss {
  double loss = 0.0;      // mean over triplets
  int active = 0;         // triplets with at least one active hinge
  Matrix d_embeddings;    // gradient of the mean loss w.r.t. the embedding rows
  std::vector<double> d_beta;  // per-class boundary gradient (learn_beta only)
};

// `class_beta` holds one boundary per class when learn_beta is set and is
// indexed by the anchor's label; otherwise it is ignored.
BatchLoss batch_loss(const Matrix& embeddings, std::span<const int> labels,
                     std::span<const Triplet> triplets, const LossConfig& config,
                     std::span<const double> class_beta = {});

struct LossGradient {
  double loss = 0.0;
  int active = 0;
  std::vector<double> params;
  std::vector<double> beta;
};

// Mean batch loss and its gradient over the model parameters.
LossGradient backward(const EmbeddingModel& model, const EmbeddingModel::Cache& cache,
                      std::span<const int> labels, std::span<const Triplet> triplets,
                      const LossConfig& config, std::span<const double> class_beta = {});

// ---- optimizer ----------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig config);

  // Throws std::runtime_error on a non-finite gradient and leaves params untouched.
  void step(std::span<double> params, std::span<const double> grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace pads
