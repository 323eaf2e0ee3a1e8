#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pads/geometry.hpp"

namespace pads {

// Feature rows with contiguous class ids 0..C-1.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::vector<int>> class_rows;  // label -> row indices, ascending

  int size() const { return static_cast<int>(features.rows()); }
  int input_dim() const { return static_cast<int>(features.cols()); }
  int classes() const { return static_cast<int>(class_rows.size()); }

  // Builds class_rows; throws std::invalid_argument if labels are not
  // contiguous from 0 or some class has fewer than `min_per_class` rows.
  static LabeledDataset from(Matrix features, std::vector<int> labels, int min_per_class = 2);

  LabeledDataset subset(std::span<const int> rows) const;
};

struct SyntheticSpec {
  int classes = 8;
  int per_class = 200;
  int input_dim = 20;
  double center_spread = 1.0;  // centers uniform in [-spread, spread]^input_dim
  double within_std = 0.9;     // isotropic noise around each center
  std::uint64_t seed = 0;
};

LabeledDataset generate_synthetic(const SyntheticSpec& spec);

// CSV with a header row: feature columns (conventionally f0..f{d-1}) and a
// column named `label`. Labels are remapped to 0..C-1 in ascending order of the
// original ids; a note is appended to `warnings` when that changes any id.
LabeledDataset load_dataset(const std::string& path, std::vector<std::string>* warnings = nullptr);

// Values are written with float32 precision.
void save_dataset(const LabeledDataset& data, const std::string& path);

}  // namespace pads
