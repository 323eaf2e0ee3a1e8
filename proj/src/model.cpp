#include "pads/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pads {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;
using VectorMap = Eigen::Map<Eigen::RowVectorXd>;

}  // namespace

// ---- DenseNet -----------------------------------------------------------

DenseNet::DenseNet(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs at least one layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("layer width must be >= 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void DenseNet::init(Rng& rng, double output_scale) {
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const double bound = std::sqrt(6.0 / sizes_[l]) * (l + 1 == layers ? output_scale : 1.0);
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t w_end = bias_offset(l);
    for (std::size_t i = weight_offset(l); i < w_end; ++i) params_[i] = dist(rng);
    for (int i = 0; i < sizes_[l + 1]; ++i) params_[w_end + i] = 0.0;
  }
}

Matrix DenseNet::forward(const Matrix& x, Cache* cache) const {
  if (x.cols() != sizes_.front()) {
    throw std::invalid_argument("input width " + std::to_string(x.cols()) + " != expected " +
                                std::to_string(sizes_.front()));
  }
  const std::size_t layers = sizes_.size() - 1;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix a = x;
  for (std::size_t l = 0; l < layers; ++l) {
    ConstMatrixMap w(params_.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    ConstVectorMap b(params_.data() + bias_offset(l), sizes_[l + 1]);
    Matrix z = a * w.transpose();
    z.rowwise() += b;
    if (cache) cache->inputs.push_back(a);
    if (l + 1 == layers) return z;
    if (cache) cache->pre.push_back(z);
    a = z.cwiseMax(0.0);
  }
  return a;
}

std::vector<double> DenseNet::backward(const Cache& cache, const Matrix& d_out,
                                       Matrix* d_input) const {
  const std::size_t layers = sizes_.size() - 1;
  if (cache.inputs.size() != layers) throw std::logic_error("cache does not match network");
  std::vector<double> grad(params_.size(), 0.0);
  Matrix dz = d_out;
  for (std::size_t l = layers; l-- > 0;) {
    MatrixMap gw(grad.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    VectorMap gb(grad.data() + bias_offset(l), sizes_[l + 1]);
    gw.noalias() = dz.transpose() * cache.inputs[l];
    gb = dz.colwise().sum();
    if (l == 0 && d_input == nullptr) break;
    ConstMatrixMap w(params_.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Matrix da = dz * w;
    if (l == 0) {
      *d_input = std::move(da);
      break;
    }
    dz = da.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grad;
}

nlohmann::json DenseNet::to_json() const {
  return {{"format", "pads-dense-v1"}, {"sizes", sizes_}, {"params", params_}};
}

DenseNet DenseNet::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pads-dense-v1") throw std::runtime_error("unknown checkpoint format");
  DenseNet net(j.at("sizes").get<std::vector<int>>());
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.param_count()) {
    throw std::runtime_error("checkpoint has " + std::to_string(params.size()) +
                             " parameters, layer shapes need " + std::to_string(net.param_count()));
  }
  net.params_ = std::move(params);
  return net;
}

// ---- EmbeddingModel -----------------------------------------------------

namespace {

std::vector<int> backbone_sizes(const EmbeddingModelConfig& c) {
  if (c.input_dim < 1 || c.hidden < 1 || c.hidden_layers < 0 || c.embedding_dim < 2) {
    throw std::invalid_argument("invalid embedding model shape");
  }
  std::vector<int> sizes{c.input_dim};
  for (int i = 0; i < c.hidden_layers; ++i) sizes.push_back(c.hidden);
  sizes.push_back(c.embedding_dim);
  return sizes;
}

}  // namespace

EmbeddingModel::EmbeddingModel(const EmbeddingModelConfig& config, Rng& rng)
    : net_(backbone_sizes(config)) {
  net_.init(rng);
}

EmbeddingModel::EmbeddingModel(DenseNet net) : net_(std::move(net)) {
  if (net_.output_dim() < 2) throw std::invalid_argument("embedding dimension must be >= 2");
}

Matrix EmbeddingModel::embed(const Matrix& inputs, Cache* cache) const {
  DenseNet::Cache local;
  Matrix raw = net_.forward(inputs, cache ? &cache->net : &local);
  Vector norms = raw.rowwise().norm();
  Matrix out = raw;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (!(norms(i) > 0.0) || !std::isfinite(norms(i))) throw std::domain_error("degenerate embedding");
    out.row(i) /= norms(i);
  }
  if (cache) {
    cache->raw = std::move(raw);
    cache->norms = std::move(norms);
    cache->embeddings = out;
    cache->version = version_;
  }
  return out;
}

EmbeddingBatch EmbeddingModel::forward(const Matrix& inputs, std::vector<int> labels,
                                       Cache* cache) const {
  return EmbeddingBatch{embed(inputs, cache), std::move(labels)};
}

std::vector<double> EmbeddingModel::backward(const Cache& cache, const Matrix& d_embeddings) const {
  if (cache.version != version_) throw std::logic_error("stale forward cache");
  if (d_embeddings.rows() != cache.embeddings.rows() ||
      d_embeddings.cols() != cache.embeddings.cols()) {
    throw std::invalid_argument("embedding gradient shape mismatch");
  }
  // y = z / |z|  =>  dL/dz = (g - y <y, g>) / |z|
  Matrix d_raw(d_embeddings.rows(), d_embeddings.cols());
  for (Eigen::Index i = 0; i < d_raw.rows(); ++i) {
    const auto y = cache.embeddings.row(i);
    const auto g = d_embeddings.row(i);
    d_raw.row(i) = (g - y * y.dot(g)) / cache.norms(i);
  }
  return net_.backward(cache.net, d_raw);
}

void EmbeddingModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  nlohmann::json j = net_.to_json();
  j["kind"] = "embedding-model";
  out << j.dump() << '\n';
}

EmbeddingModel EmbeddingModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const auto j = nlohmann::json::parse(in);
  if (j.value("kind", "") != "embedding-model") throw std::runtime_error(path + " is not an embedding model");
  return EmbeddingModel(DenseNet::from_json(j));
}

// ---- losses -------------------------------------------------------------

void LossConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("loss.gamma must be > 0");
  if (kind == LossKind::kMargin && !(beta_margin > 0.0)) {
    throw std::invalid_argument("loss.beta_margin must be > 0");
  }
}

double triplet_loss(double d_ap, double d_an, double gamma) {
  return std::max(0.0, d_ap * d_ap - d_an * d_an + gamma);
}

double margin_loss(double d_ap, double d_an, double gamma, double beta) {
  return std::max(0.0, gamma + d_ap - beta) + std::max(0.0, gamma - d_an + beta);
}

BatchLoss batch_loss(const Matrix& embeddings, std::span<const int> labels,
                     std::span<const Triplet> triplets, const LossConfig& config,
                     std::span<const double> class_beta) {
  BatchLoss out;
  out.d_embeddings = Matrix::Zero(embeddings.rows(), embeddings.cols());
  const bool per_class = config.kind == LossKind::kMargin && config.learn_beta;
  if (per_class) out.d_beta.assign(class_beta.size(), 0.0);
  if (triplets.empty()) return out;
  const double scale = 1.0 / static_cast<double>(triplets.size());

  for (const Triplet& t : triplets) {
    const Eigen::RowVectorXd ap = embeddings.row(t.anchor) - embeddings.row(t.positive);
    const Eigen::RowVectorXd an = embeddings.row(t.anchor) - embeddings.row(t.negative);
    bool active = false;
    if (config.kind == LossKind::kTriplet) {
      const double value = ap.squaredNorm() - an.squaredNorm() + config.gamma;
      if (value > 0.0) {
        active = true;
        out.loss += value * scale;
        // d/dx_a = 2(x_a - x_p) - 2(x_a - x_n)
        out.d_embeddings.row(t.anchor) += 2.0 * scale * (ap - an);
        out.d_embeddings.row(t.positive) -= 2.0 * scale * ap;
        out.d_embeddings.row(t.negative) += 2.0 * scale * an;
      }
    } else {
      const int cls = labels[static_cast<std::size_t>(t.anchor)];
      const double beta = per_class ? class_beta[static_cast<std::size_t>(cls)] : config.beta_margin;
      const double d_ap = ap.norm();
      const double d_an = an.norm();
      const double pos = config.gamma + d_ap - beta;
      const double neg = config.gamma - d_an + beta;
      if (pos > 0.0) {
        active = true;
        out.loss += pos * scale;
        if (d_ap > 0.0) {
          const Eigen::RowVectorXd g = (scale / d_ap) * ap;
          out.d_embeddings.row(t.anchor) += g;
          out.d_embeddings.row(t.positive) -= g;
        }
        if (per_class) out.d_beta[static_cast<std::size_t>(cls)] -= scale;
      }
      if (neg > 0.0) {
        active = true;
        out.loss += neg * scale;
        if (d_an > 0.0) {
          const Eigen::RowVectorXd g = (scale / d_an) * an;
          out.d_embeddings.row(t.anchor) -= g;
          out.d_embeddings.row(t.negative) += g;
        }
        if (per_class) out.d_beta[static_cast<std::size_t>(cls)] += scale;
      }
    }
    if (active) ++out.active;
  }
  return out;
}

LossGradient backward(const EmbeddingModel& model, const EmbeddingModel::Cache& cache,
                      std::span<const int> labels, std::span<const Triplet> triplets,
                      const LossConfig& config, std::span<const double> class_beta) {
  BatchLoss bl = batch_loss(cache.embeddings, labels, triplets, config, class_beta);
  LossGradient out;
  out.loss = bl.loss;
  out.active = bl.active;
  out.params = model.backward(cache, bl.d_embeddings);
  out.beta = std::move(bl.d_beta);
  return out;
}

// ---- Adam ---------------------------------------------------------------

Adam::Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
  if (!(config.lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("optimizer shape mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

}  // namespace pads
