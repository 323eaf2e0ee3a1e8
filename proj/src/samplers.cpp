#include "pads/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pads/geometry.hpp"

namespace pads {

std::vector<double> SamplingPmf::edges() const {
  std::vector<double> e(p.size() + 1);
  for (std::size_t k = 0; k < e.size(); ++k) e[k] = lambda_min + static_cast<double>(k) * width();
  e.back() = lambda_max;
  return e;
}

std::optional<int> SamplingPmf::bin_of(double d) const {
  if (!(d >= lambda_min && d <= lambda_max)) return std::nullopt;
  const int k = static_cast<int>(std::floor((d - lambda_min) / width()));
  return std::clamp(k, 0, bins() - 1);
}

void SamplingPmf::validate(double tolerance) const {
  if (!(lambda_min >= 0.0 && lambda_min < lambda_max && lambda_max <= 2.0)) {
    throw std::invalid_argument("pmf interval must satisfy 0 <= lambda_min < lambda_max <= 2");
  }
  if (p.size() < 2) throw std::invalid_argument("pmf needs at least 2 bins");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("pmf has a negative or non-finite bin");
    total += v;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw std::invalid_argument("pmf mass " + std::to_string(total) + " is not 1");
  }
}

nlohmann::json SamplingPmf::to_json(int episode) const {
  return {{"episode", episode}, {"edges", edges()}, {"p", p}};
}

SamplingPmf SamplingPmf::from_json(const nlohmann::json& j) {
  const auto e = j.at("edges").get<std::vector<double>>();
  SamplingPmf pmf;
  pmf.p = j.at("p").get<std::vector<double>>();
  if (e.size() != pmf.p.size() + 1) throw std::invalid_argument("pmf edges/probabilities size mismatch");
  pmf.lambda_min = e.front();
  pmf.lambda_max = e.back();
  pmf.validate(1e-6);
  return pmf;
}

namespace {

void normalize(std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("cannot normalize zero mass");
  for (double& v : w) v /= total;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

SamplingPmf init_pmf(double lambda_min, double lambda_max, int k, const PmfInit& init) {
  SamplingPmf pmf{lambda_min, lambda_max, std::vector<double>(static_cast<std::size_t>(std::max(k, 0)), 1.0)};
  if (k < 2) throw std::invalid_argument("pmf needs at least 2 bins");
  if (!(lambda_min >= 0.0 && lambda_min < lambda_max && lambda_max <= 2.0)) {
    throw std::invalid_argument("pmf interval must satisfy 0 <= lambda_min < lambda_max <= 2");
  }
  if (!(init.epsilon >= 0.0)) throw std::invalid_argument("pmf init epsilon must be >= 0");
  const auto e = pmf.edges();

  switch (init.kind) {
    case PmfInitKind::kUniform:
      break;
    case PmfInitKind::kUniformRange: {
      if (!(init.range_lo < init.range_hi)) throw std::invalid_argument("uniform-range needs a < b");
      if (overlap(init.range_lo, init.range_hi, lambda_min, lambda_max) <= 0.0) {
        throw std::invalid_argument("uniform-range emphasis lies outside the pmf interval");
      }
      for (int i = 0; i < k; ++i) {
        pmf.p[i] = overlap(e[i], e[i + 1], init.range_lo, init.range_hi) / pmf.width() + init.epsilon;
      }
      break;
    }
    case PmfInitKind::kGaussian: {
      if (!(init.sigma > 0.0)) throw std::invalid_argument("gaussian init needs sigma > 0");
      double peak = 0.0;
      for (int i = 0; i < k; ++i) {
        pmf.p[i] = normal_cdf((e[i + 1] - init.mu) / init.sigma) - normal_cdf((e[i] - init.mu) / init.sigma);
        peak = std::max(peak, pmf.p[i]);
      }
      if (!(peak > 0.0)) throw std::invalid_argument("gaussian init has no mass on the pmf interval");
      for (double& v : pmf.p) v = v / peak + init.epsilon;
      break;
    }
  }
  normalize(pmf.p);
  return pmf;
}

void ActionMultipliers::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("pmf.alpha must lie in (0, 1)");
  if (!(beta > 1.0)) throw std::invalid_argument("pmf.beta must be > 1");
}

bool ActionMultipliers::mean_is_one() const { return std::abs(0.5 * (alpha + beta) - 1.0) < 1e-12; }

double ActionMultipliers::value(Trit t) const {
  switch (t) {
    case Trit::kDecrease:
      return alpha;
    case Trit::kMaintain:
      return 1.0;
    case Trit::kIncrease:
      return beta;
  }
  throw std::invalid_argument("bad trit");
}

std::vector<double> ActionVector::values() const {
  std::vector<double> out;
  out.reserve(trits.size());
  for (Trit t : trits) out.push_back(multipliers.value(t));
  return out;
}

ActionVector ActionVector::identity(int k, ActionMultipliers m) {
  return ActionVector{std::vector<Trit>(static_cast<std::size_t>(k), Trit::kMaintain), m};
}

SamplingPmf apply_multipliers(const SamplingPmf& pmf, std::span<const double> multipliers) {
  if (multipliers.size() != pmf.p.size()) throw std::invalid_argument("action size does not match pmf");
  SamplingPmf out = pmf;
  bool identity = true;
  for (std::size_t k = 0; k < out.p.size(); ++k) {
    if (!(multipliers[k] > 0.0)) throw std::invalid_argument("multipliers must be positive");
    identity = identity && multipliers[k] == 1.0;
    out.p[k] *= multipliers[k];
  }
  // An all-maintain action leaves the distribution bit-for-bit unchanged.
  if (!identity) normalize(out.p);
  return out;
}

SamplingPmf apply_action(const SamplingPmf& pmf, const ActionVector& action) {
  const auto m = action.values();
  return apply_multipliers(pmf, m);
}

// ---- negative selection -------------------------------------------------

namespace {

void check_candidates(std::span<const int> candidates, std::span<const double> distances) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  if (candidates.size() != distances.size()) throw std::invalid_argument("candidate/distance size mismatch");
}

struct BinOccupancy {
  std::vector<std::vector<int>> members;  // positions into the candidate span
  int in_range = 0;
};

BinOccupancy occupancy(const SamplingPmf& pmf, std::span<const double> distances) {
  BinOccupancy occ;
  occ.members.resize(pmf.p.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (auto k = pmf.bin_of(distances[i])) {
      occ.members[static_cast<std::size_t>(*k)].push_back(static_cast<int>(i));
      ++occ.in_range;
    }
  }
  return occ;
}

}  // namespace

std::vector<double> adaptive_selection_probabilities(const SamplingPmf& pmf,
                                                     std::span<const double> distances) {
  const auto occ = occupancy(pmf, distances);
  std::vector<double> prob(distances.size(), 0.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < occ.members.size(); ++k) {
    if (!occ.members[k].empty()) mass += pmf.p[k];
  }
  if (mass > 0.0) {
    for (std::size_t k = 0; k < occ.members.size(); ++k) {
      const auto& m = occ.members[k];
      for (int i : m) prob[static_cast<std::size_t>(i)] = pmf.p[k] / mass / static_cast<double>(m.size());
    }
  } else if (occ.in_range > 0) {
    for (const auto& m : occ.members) {
      for (int i : m) prob[static_cast<std::size_t>(i)] = 1.0 / occ.in_range;
    }
  } else {
    for (double& v : prob) v = 1.0 / static_cast<double>(prob.size());
  }
  return prob;
}

NegativeChoice sample_negative_adaptive(const SamplingPmf& pmf, std::span<const int> candidates,
                                        std::span<const double> distances, Rng& rng) {
  check_candidates(candidates, distances);
  const auto occ = occupancy(pmf, distances);
  if (occ.in_range == 0) {
    return {candidates[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(candidates.size())))], true};
  }
  std::vector<double> weights(pmf.p.size(), 0.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!occ.members[k].empty()) {
      weights[k] = pmf.p[k];
      mass += weights[k];
    }
  }
  if (!(mass > 0.0)) {
    int pick = uniform_index(rng, occ.in_range);
    for (const auto& m : occ.members) {
      if (pick < static_cast<int>(m.size())) return {candidates[static_cast<std::size_t>(m[static_cast<std::size_t>(pick)])], true};
      pick -= static_cast<int>(m.size());
    }
  }
  const auto& bin = occ.members[static_cast<std::size_t>(sample_categorical(weights, rng))];
  const int pos = bin[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(bin.size())))];
  return {candidates[static_cast<std::size_t>(pos)], false};
}

NegativeChoice sample_negative_semihard(double d_ap, std::span<const int> candidates,
                                        std::span<const double> distances) {
  check_candidates(candidates, distances);
  int best = -1;
  int farthest = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const int ii = static_cast<int>(i);
    if (distances[i] > d_ap && (best < 0 || distances[i] < distances[static_cast<std::size_t>(best)])) best = ii;
    if (distances[i] > distances[static_cast<std::size_t>(farthest)]) farthest = ii;
  }
  if (best >= 0) return {candidates[static_cast<std::size_t>(best)], false};
  return {candidates[static_cast<std::size_t>(farthest)], true};
}

NegativeChoice sample_negative_distweighted(std::span<const int> candidates,
                                            std::span<const double> distances, int dim,
                                            std::optional<double> lambda, Rng& rng) {
  check_candidates(candidates, distances);
  std::vector<double> clamped(distances.begin(), distances.end());
  for (double& d : clamped) d = std::clamp(d, kMinDistance, 2.0 - kMinDistance);
  const auto w = inverse_density_weights(clamped, dim, lambda);
  return {candidates[static_cast<std::size_t>(sample_categorical(w, rng))], false};
}

NegativeChoice sample_negative_random(std::span<const int> candidates, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  return {candidates[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(candidates.size())))], false};
}

// ---- fixed curricula ----------------------------------------------------

SamplingPmf curriculum_pmf(double t, CurriculumKind kind, const CurriculumConfig& config,
                           double lambda_min, double lambda_max, int k, int dim) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("curriculum progress must lie in [0, 1]");
  SamplingPmf pmf = init_pmf(lambda_min, lambda_max, k, PmfInit{PmfInitKind::kUniform});
  const auto e = pmf.edges();
  switch (kind) {
    case CurriculumKind::kLinear: {
      if (!(config.window > 0.0) || config.start < lambda_min ||
          config.start + config.window > lambda_max + 1e-12) {
        throw std::invalid_argument("curriculum window must fit inside the pmf interval");
      }
      const double lo = config.start - t * (config.start - lambda_min);
      const double hi = lo + config.window;
      for (int i = 0; i < k; ++i) pmf.p[i] = overlap(e[i], e[i + 1], lo, hi);
      break;
    }
    case CurriculumKind::kNonlinear: {
      std::vector<double> centers(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) centers[i] = pmf.center(i);
      pmf.p = inverse_density_weights(centers, dim);
      for (int i = 0; i < k; ++i) {
        const double hardness = (centers[i] - lambda_min) / (lambda_max - lambda_min);
        pmf.p[i] *= std::exp(-config.strength * t * hardness);
      }
      break;
    }
  }
  normalize(pmf.p);
  return pmf;
}

}  // namespace pads
