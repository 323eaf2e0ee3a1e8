#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace pads {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Unit-norm embeddings with one class label per row.
struct EmbeddingBatch {
  Matrix vectors;
  std::vector<int> labels;

  int size() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }

  // Throws std::invalid_argument when the row norms, shape or label count are off.
  void validate(double norm_tolerance = 1e-6) const;
};

// Returns v / ||v||. Throws std::domain_error("degenerate embedding") for a zero vector.
Vector normalize_to_sphere(const Vector& v);

// Normalizes every row of `m` in place; same error contract as normalize_to_sphere.
void normalize_rows(Matrix& m);

// Euclidean distances between all rows, via d^2 = 2 - 2<x, y> with the result
// clamped to [0, 4] before the square root. Exactly symmetric with a zero diagonal.
Matrix pairwise_distances(const EmbeddingBatch& batch);
Matrix pairwise_distances(const Matrix& unit_rows);

// log of d^(D-2) * (1 - d^2/4)^((D-3)/2), the (unnormalized) density of the
// distance between two independent uniform points on the unit sphere in R^D.
// Requires 0 < d < 2 and D >= 3; throws std::domain_error otherwise.
double log_analytic_density(double d, int dim);
double analytic_density(double d, int dim);

// Sampling weights proportional to min(lambda, 1/q(d_i)), normalized to sum 1.
// Everything is carried in log space so large D does not overflow.
//
// When `lambda` is empty the cap is set to 4x the median inverse density of the
// given distances. Throws std::invalid_argument on empty input or lambda <= 0,
// std::domain_error when a distance lies outside (0, 2).
std::vector<double> inverse_density_weights(std::span<const double> distances, int dim,
                                            std::optional<double> lambda = std::nullopt);

// Cap used by inverse_density_weights when no explicit lambda is given,
// returned as log(lambda).
double default_log_lambda(std::span<const double> distances, int dim);

inline constexpr double kDefaultLambdaMedianMultiple = 4.0;

}  // namespace pads
