#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "pads/geometry.hpp"

namespace pads {

struct MetricSnapshot {
  int episode = 0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r4 = 0.0;
  double nmi = 0.0;
  double intra = 0.0;
  double inter = 0.0;

  // Reward target: Recall@1 + NMI.
  double target() const { return r1 + nmi; }
};

// Fraction of rows whose k nearest other rows (Euclidean, ties by lower index)
// contain at least one row of the same class. Throws std::invalid_argument when
// some k >= N or k < 1.
std::vector<double> recall_at_k(const Matrix& distances, std::span<const int> labels,
                                std::span<const int> ks);
std::vector<double> recall_at_k(const EmbeddingBatch& batch, std::span<const int> ks);

// Lloyd's k-means with k-means++ seeding; ties go to the lower center index.
// An emptied cluster is re-seeded with the point farthest from its center.
std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations = 300);

// Mutual information normalized by the arithmetic mean of the two entropies.
// Returns 0 when both partitions are trivial (the mean entropy is zero).
double nmi_from_assignments(std::span<const int> a, std::span<const int> b);

// Clusters the embeddings into `n_clusters` groups and scores them against the labels.
double nmi(const EmbeddingBatch& batch, int n_clusters, std::uint64_t seed,
           int max_iterations = 300);

struct ClassDistanceStats {
  double intra = 0.0;
  double inter = 0.0;
  bool intra_defined = true;  // false when no same-class pair exists (intra reported as 0)
  bool inter_defined = true;
};

ClassDistanceStats class_distance_stats(const Matrix& distances, std::span<const int> labels);
ClassDistanceStats class_distance_stats(const EmbeddingBatch& batch);

int count_classes(std::span<const int> labels);

// Full metric snapshot of one embedded evaluation set.
MetricSnapshot evaluate(const EmbeddingBatch& batch, std::uint64_t cluster_seed,
                        int kmeans_iterations = 300);

// Ring buffer of past snapshots with running averages over several window lengths.
class RunningTracks {
 public:
  explicit RunningTracks(std::vector<int> lengths = {2, 8, 16, 32}, int history = 20);

  void update(const MetricSnapshot& snapshot);

  // Mean of the last min(length, size()) snapshots, field by field.
  MetricSnapshot average(int length) const;
  // Last `history()` snapshots, oldest first. Missing entries at the front are
  // filled with the oldest available snapshot. Requires size() >= 1.
  std::vector<MetricSnapshot> history_window() const;

  const std::vector<int>& lengths() const { return lengths_; }
  int history() const { return history_; }
  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(buffer_.size()); }
  const MetricSnapshot& latest() const { return buffer_.back(); }

 private:
  std::vector<int> lengths_;
  int history_;
  int capacity_;
  std::deque<MetricSnapshot> buffer_;
};

// metrics.csv schema.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricSnapshot& s, int reward);

}  // namespace pads
