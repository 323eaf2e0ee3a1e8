#pragma once

#include <string>
#include <vector>

#include "pads/trainer.hpp"

namespace pads {

struct ComparisonRow {
  std::string sampler;
  std::uint64_t seed = 0;
  double r1 = 0.0;
  double nmi = 0.0;
};

struct ComparisonResult {
  std::vector<ComparisonRow> runs;     // sampler-major, seeds ascending
  std::vector<ComparisonRow> medians;  // one per listed sampler, seed unused
};

double median(std::vector<double> values);

// Runs every sampler for seeds base.seed, base.seed + 1, ... on the same data
// split. With a non-empty out_dir each run writes to out_dir/<sampler>-<i>-seed<s>
// and comparison.csv is written at the top. `jobs` runs in parallel.
ComparisonResult compare(const RunConfig& base, const std::vector<std::string>& samplers, int n_seeds,
                         const std::string& out_dir, int jobs = 1);
std::string comparison_csv(const ComparisonResult& result);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  double r1 = 0.0;
  double nmi = 0.0;
};

// Varies one config key over `values`, n_seeds runs each. Writes sweep.csv.
std::vector<SweepRow> sweep(const RunConfig& base, const std::string& key, const std::vector<std::string>& values,
                            int n_seeds, const std::string& out_dir, int jobs = 1);
std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows);

// Long-format PMF progression: header `episode,bin_center,probability`, one
// row per (episode, bin). Returns false when run_dir has no pmf.jsonl.
// Corrupt lines raise std::runtime_error naming the line.
bool plot_data(const std::string& run_dir, std::string& csv_out);

}  // namespace pads
