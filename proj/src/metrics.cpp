#include "pads/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "pads/random.hpp"

namespace pads {

std::vector<double> recall_at_k(const Matrix& distances, std::span<const int> labels,
                                std::span<const int> ks) {
  const int n = static_cast<int>(distances.rows());
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("recall: label count mismatch");
  int k_max = 0;
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("recall: k must be >= 1");
    if (k >= n) throw std::invalid_argument("recall: k=" + std::to_string(k) + " needs more than " +
                                            std::to_string(n) + " points");
    k_max = std::max(k_max, k);
  }
  std::vector<int> hits(ks.size(), 0);
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) order.emplace_back(distances(i, j), j);
    }
    std::partial_sort(order.begin(), order.begin() + k_max, order.end());
    // rank of the first same-class neighbour
    int first_hit = std::numeric_limits<int>::max();
    for (int r = 0; r < k_max; ++r) {
      if (labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)].second)] == labels[static_cast<std::size_t>(i)]) {
        first_hit = r;
        break;
      }
    }
    for (std::size_t q = 0; q < ks.size(); ++q) {
      if (first_hit < ks[q]) ++hits[q];
    }
  }
  std::vector<double> out(ks.size());
  for (std::size_t q = 0; q < ks.size(); ++q) out[q] = static_cast<double>(hits[q]) / n;
  return out;
}

std::vector<double> recall_at_k(const EmbeddingBatch& batch, std::span<const int> ks) {
  return recall_at_k(pairwise_distances(batch), batch.labels, ks);
}

std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= k <= N");
  Rng rng(seed);

  auto sq = [&](int i, const Eigen::RowVectorXd& c) { return (points.row(i) - c).squaredNorm(); };

  Matrix centers(k, points.cols());
  centers.row(0) = points.row(uniform_index(rng, n));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, sq(i, centers.row(j)));
      d2[static_cast<std::size_t>(i)] = best;
    }
    double total = 0.0;
    for (double v : d2) total += v;
    const int pick = total > 0.0 ? sample_categorical(d2, rng) : uniform_index(rng, n);
    centers.row(c) = points.row(pick);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq(i, centers.row(0));
      for (int c = 1; c < k; ++c) {
        const double d = sq(i, centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = sq(i, centers.row(assign[static_cast<std::size_t>(i)]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers.row(c) = points.row(far);
      assign[static_cast<std::size_t>(far)] = c;
    }
  }
  return assign;
}

double nmi_from_assignments(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("nmi: partitions must be same nonzero size");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
  }
  const double denom = 0.5 * (ha + hb);
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

int count_classes(std::span<const int> labels) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

double nmi(const EmbeddingBatch& batch, int n_clusters, std::uint64_t seed, int max_iterations) {
  if (n_clusters < 1 || n_clusters > batch.size()) throw std::invalid_argument("nmi: need 1 <= clusters <= N");
  const auto clusters = kmeans(batch.vectors, n_clusters, seed, max_iterations);
  return nmi_from_assignments(clusters, batch.labels);
}

ClassDistanceStats class_distance_stats(const Matrix& distances, std::span<const int> labels) {
  const int n = static_cast<int>(distances.rows());
  double intra = 0.0, inter = 0.0;
  long n_intra = 0, n_inter = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += distances(i, j);
        ++n_intra;
      } else {
        inter += distances(i, j);
        ++n_inter;
      }
    }
  }
  ClassDistanceStats s;
  s.intra_defined = n_intra > 0;
  s.inter_defined = n_inter > 0;
  s.intra = n_intra > 0 ? intra / static_cast<double>(n_intra) : 0.0;
  s.inter = n_inter > 0 ? inter / static_cast<double>(n_inter) : 0.0;
  return s;
}

ClassDistanceStats class_distance_stats(const EmbeddingBatch& batch) {
  return class_distance_stats(pairwise_distances(batch), batch.labels);
}

MetricSnapshot evaluate(const EmbeddingBatch& batch, std::uint64_t cluster_seed, int kmeans_iterations) {
  const Matrix dist = pairwise_distances(batch);
  static constexpr int kKs[] = {1, 2, 4};
  const auto rec = recall_at_k(dist, batch.labels, kKs);
  const auto stats = class_distance_stats(dist, batch.labels);
  MetricSnapshot s;
  s.r1 = rec[0];
  s.r2 = rec[1];
  s.r4 = rec[2];
  s.nmi = nmi(batch, count_classes(batch.labels), cluster_seed, kmeans_iterations);
  s.intra = stats.intra;
  s.inter = stats.inter;
  return s;
}

// ---- RunningTracks ------------------------------------------------------

RunningTracks::RunningTracks(std::vector<int> lengths, int history)
    : lengths_(std::move(lengths)), history_(history) {
  if (lengths_.empty()) throw std::invalid_argument("running average lengths must not be empty");
  for (int l : lengths_) {
    if (l < 1) throw std::invalid_argument("running average length must be >= 1");
  }
  if (history_ < 0) throw std::invalid_argument("history length must be >= 0");
  capacity_ = std::max(*std::max_element(lengths_.begin(), lengths_.end()), history_);
}

void RunningTracks::update(const MetricSnapshot& snapshot) {
  buffer_.push_back(snapshot);
  while (static_cast<int>(buffer_.size()) > capacity_) buffer_.pop_front();
}

MetricSnapshot RunningTracks::average(int length) const {
  if (buffer_.empty()) throw std::logic_error("no snapshots recorded yet");
  const int n = std::min(length, size());
  MetricSnapshot avg;
  avg.episode = buffer_.back().episode;
  for (auto it = buffer_.end() - n; it != buffer_.end(); ++it) {
    avg.r1 += it->r1;
    avg.r2 += it->r2;
    avg.r4 += it->r4;
    avg.nmi += it->nmi;
    avg.intra += it->intra;
    avg.inter += it->inter;
  }
  avg.r1 /= n;
  avg.r2 /= n;
  avg.r4 /= n;
  avg.nmi /= n;
  avg.intra /= n;
  avg.inter /= n;
  return avg;
}

std::vector<MetricSnapshot> RunningTracks::history_window() const {
  if (buffer_.empty()) throw std::logic_error("no snapshots recorded yet");
  std::vector<MetricSnapshot> out;
  out.reserve(static_cast<std::size_t>(history_));
  const int have = std::min(history_, size());
  for (int i = 0; i < history_ - have; ++i) out.push_back(*(buffer_.end() - have));
  for (auto it = buffer_.end() - have; it != buffer_.end(); ++it) out.push_back(*it);
  return out;
}

std::string metrics_csv_header() { return "episode,r1,r2,r4,nmi,intra,inter,reward"; }

std::string metrics_csv_row(const MetricSnapshot& s, int reward) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%d", s.episode, s.r1, s.r2, s.r4,
                s.nmi, s.intra, s.inter, reward);
  return buf;
}

}  // namespace pads
