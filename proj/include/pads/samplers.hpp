#pragma once

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pads/random.hpp"

namespace pads {

// Discrete distribution over anchor-negative distances: K equal-width bins
// partitioning [lambda_min, lambda_max], bin k holding probability p[k].
struct SamplingPmf {
  double lambda_min = 0.1;
  double lambda_max = 1.4;
  std::vector<double> p;

  int bins() const { return static_cast<int>(p.size()); }
  double width() const { return (lambda_max - lambda_min) / bins(); }
  double center(int k) const { return lambda_min + (k + 0.5) * width(); }
  std::vector<double> edges() const;

  // Bin containing d. Bins are half-open except the last, which includes lambda_max.
  std::optional<int> bin_of(double d) const;

  // Throws std::invalid_argument when the interval, bin count or mass is invalid.
  void validate(double tolerance = 1e-9) const;

  nlohmann::json to_json(int episode) const;
  static SamplingPmf from_json(const nlohmann::json& j);
};

enum class PmfInitKind { kUniform, kUniformRange, kGaussian };

struct PmfInit {
  PmfInitKind kind = PmfInitKind::kUniformRange;
  double range_lo = 0.3;  // uniform-range emphasis interval
  double range_hi = 0.7;
  double mu = 0.5;
  double sigma = 0.05;
  // Relative floor mass on every bin (peak bin weight is 1 before normalization).
  // Keeps outside bins reachable by multiplicative updates.
  double epsilon = 1e-3;
};

SamplingPmf init_pmf(double lambda_min, double lambda_max, int k, const PmfInit& init);

// Per-bin adjustment choice; the value is the head index of the policy output.
enum class Trit : int { kDecrease = 0, kMaintain = 1, kIncrease = 2 };

struct ActionMultipliers {
  double alpha = 0.8;
  double beta = 1.25;

  void validate() const;
  // True when (alpha + beta) / 2 == 1 within 1e-12. Not enforced; reported as a lint.
  bool mean_is_one() const;
  double value(Trit t) const;
};

struct ActionVector {
  std::vector<Trit> trits;
  ActionMultipliers multipliers;

  std::vector<double> values() const;
  static ActionVector identity(int k, ActionMultipliers m = {});
};

// p'_k = p_k * m_k / sum_j p_j * m_j. Multipliers must be positive.
SamplingPmf apply_multipliers(const SamplingPmf& pmf, std::span<const double> multipliers);
SamplingPmf apply_action(const SamplingPmf& pmf, const ActionVector& action);

// ---- negative selection -------------------------------------------------
//
// Every selector receives the candidate ids and their anchor distances as two
// parallel spans and returns one of the ids.

struct NegativeChoice {
  int index = -1;
  bool fallback = false;
};

// Bin drawn proportionally to p_k over the bins that hold at least one
// candidate, then a uniform candidate within that bin. With no in-range
// candidate the choice is uniform over all candidates (fallback); with
// in-range candidates that only occupy zero-mass bins it is uniform over
// the in-range ones (also flagged as fallback).
NegativeChoice sample_negative_adaptive(const SamplingPmf& pmf, std::span<const int> candidates,
                                        std::span<const double> distances, Rng& rng);

// Exact selection probabilities of sample_negative_adaptive, per candidate.
std::vector<double> adaptive_selection_probabilities(const SamplingPmf& pmf,
                                                     std::span<const double> distances);

// argmin over {d_an > d_ap}, ties to the earliest candidate. If no candidate is
// farther than the positive, the farthest candidate is returned as a fallback.
NegativeChoice sample_negative_semihard(double d_ap, std::span<const int> candidates,
                                        std::span<const double> distances);

// Categorical draw with weights min(lambda, 1/q(d)). Distances are clamped into
// [kMinDistance, 2 - kMinDistance] before the density is evaluated.
NegativeChoice sample_negative_distweighted(std::span<const int> candidates,
                                            std::span<const double> distances, int dim,
                                            std::optional<double> lambda, Rng& rng);

NegativeChoice sample_negative_random(std::span<const int> candidates, Rng& rng);

inline constexpr double kMinDistance = 1e-6;

// ---- fixed curricula ----------------------------------------------------

enum class CurriculumKind { kLinear, kNonlinear };

struct CurriculumConfig {
  double window = 0.4;       // width of the linear schedule's uniform window
  double start = 0.9;        // lower window edge at t = 0
  double strength = 5.0;     // log-ratio of hardest to easiest bin boost at t = 1
};

// PMF of a progress-driven schedule at normalized progress t in [0, 1].
// Linear: uniform window sliding from [start, start + window] down to
// [lambda_min, lambda_min + window]. Nonlinear: inverse-density weights on the
// bin centers, tilted by exp(-strength * t * (c_k - lambda_min) / (lambda_max - lambda_min)).
SamplingPmf curriculum_pmf(double t, CurriculumKind kind, const CurriculumConfig& config,
                           double lambda_min, double lambda_max, int k, int dim);

}  // namespace pads
