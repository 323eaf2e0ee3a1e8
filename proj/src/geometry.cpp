#include "pads/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pads {

void EmbeddingBatch::validate(double norm_tolerance) const {
  if (vectors.rows() < 1) throw std::invalid_argument("embedding batch is empty");
  if (vectors.cols() < 2) throw std::invalid_argument("embedding dimension must be >= 2");
  if (static_cast<Eigen::Index>(labels.size()) != vectors.rows()) {
    throw std::invalid_argument("embedding batch has " + std::to_string(vectors.rows()) +
                                " rows but " + std::to_string(labels.size()) + " labels");
  }
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    const double n = vectors.row(i).norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > norm_tolerance) {
      throw std::invalid_argument("embedding row " + std::to_string(i) + " is not unit norm");
    }
  }
}

Vector normalize_to_sphere(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("degenerate embedding");
  return v / n;
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("degenerate embedding");
    m.row(i) /= n;
  }
}

// Norms of row differences; coincident rows map to exactly 0.
Matrix pairwise_distances(const Matrix& unit_rows) {
  const Eigen::Index n = unit_rows.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::min((unit_rows.row(i) - unit_rows.row(j)).norm(), 2.0);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

Matrix pairwise_distances(const EmbeddingBatch& batch) { return pairwise_distances(batch.vectors); }

double log_analytic_density(double d, int dim) {
  if (dim < 3) throw std::domain_error("analytic density needs dimension >= 3");
  if (!(d > 0.0 && d < 2.0)) {
    throw std::domain_error("distance " + std::to_string(d) + " outside (0, 2)");
  }
  return (dim - 2.0) * std::log(d) + 0.5 * (dim - 3.0) * std::log1p(-0.25 * d * d);
}

double analytic_density(double d, int dim) { return std::exp(log_analytic_density(d, dim)); }

namespace {

std::vector<double> log_inverse_densities(std::span<const double> distances, int dim) {
  std::vector<double> out;
  out.reserve(distances.size());
  for (double d : distances) out.push_back(-log_analytic_density(d, dim));
  return out;
}

// Lower median, so the value is always one of the inputs.
double lower_median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

double default_log_lambda(std::span<const double> distances, int dim) {
  if (distances.empty()) throw std::invalid_argument("inverse_density_weights: empty input");
  return lower_median(log_inverse_densities(distances, dim)) +
         std::log(kDefaultLambdaMedianMultiple);
}

std::vector<double> inverse_density_weights(std::span<const double> distances, int dim,
                                            std::optional<double> lambda) {
  if (distances.empty()) throw std::invalid_argument("inverse_density_weights: empty input");
  if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("lambda must be positive");

  std::vector<double> logw = log_inverse_densities(distances, dim);
  const double log_cap = lambda ? std::log(*lambda) : lower_median(logw) +
                                                          std::log(kDefaultLambdaMedianMultiple);
  for (double& v : logw) v = std::min(v, log_cap);

  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& v : logw) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logw) v /= total;
  return logw;
}

}  // namespace pads
