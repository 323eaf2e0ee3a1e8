#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. They favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "pads/geometry.hpp"
#include "pads/random.hpp"

namespace oracle {

using pads::Matrix;

inline Matrix random_unit_rows(int n, int dim, pads::Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(n, dim);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
      m(i, j) = g(rng);
      s += m(i, j) * m(i, j);
    }
    for (int j = 0; j < dim; ++j) m(i, j) /= std::sqrt(s);
  }
  return m;
}

inline double direct_distance(const Matrix& m, int i, int j) {
  double s = 0.0;
  for (int c = 0; c < m.cols(); ++c) {
    const double d = m(i, c) - m(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

// Smallest distance strictly above d_ap, earliest on ties; the farthest
// candidate (earliest on ties) when none qualifies.
inline int semihard(double d_ap, const std::vector<double>& d) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(d.size()); ++i) {
    if (d[i] > d_ap && (best < 0 || d[i] < d[best])) best = i;
  }
  if (best >= 0) return best;
  int far = 0;
  for (int i = 1; i < static_cast<int>(d.size()); ++i) {
    if (d[i] > d[far]) far = i;
  }
  return far;
}

// Full sort of every row by (distance, index).
inline double recall_at_k(const Matrix& dist, const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(labels.size());
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> order;
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return dist(i, a) != dist(i, b) ? dist(i, a) < dist(i, b) : a < b;
    });
    for (int r = 0; r < k; ++r) {
      if (labels[order[r]] == labels[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / n;
}

// I(A;B) / ((H(A) + H(B)) / 2) from integer contingency counts; 0 when both
// assignments are constant.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, long> ca, cb;
  std::map<std::pair<int, int>, long> cab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++cab[{a[i], b[i]}];
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (auto& [_, c] : ca) ha -= c / n * std::log(c / n);
  for (auto& [_, c] : cb) hb -= c / n * std::log(c / n);
  for (auto& [key, c] : cab) {
    mi += c / n * std::log(c * n / (static_cast<double>(ca[key.first]) * cb[key.second]));
  }
  const double denom = 0.5 * (ha + hb);
  return denom > 0.0 ? mi / denom : 0.0;
}

struct PairMeans {
  double intra = 0.0;
  double inter = 0.0;
};

inline PairMeans class_stats(const Matrix& m, const std::vector<int>& labels) {
  double si = 0.0, se = 0.0;
  long ni = 0, ne = 0;
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = direct_distance(m, i, j);
      if (labels[i] == labels[j]) {
        si += d;
        ++ni;
      } else {
        se += d;
        ++ne;
      }
    }
  }
  return {ni ? si / ni : 0.0, ne ? se / ne : 0.0};
}

// Central differences of f around x with step h.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Largest per-coordinate |a - n| / max(|a|, |n|, floor). The floor keeps
// coordinates whose true gradient is ~0 from dividing noise by noise.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

// Pearson chi-square statistic of observed counts against expected probabilities
// (cells with zero probability must have zero counts).
inline double chi_square(const std::vector<long>& counts, const std::vector<double>& probs, int& dof) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  double chi = 0.0;
  dof = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) {
      if (counts[i] > 0) return INFINITY;
      continue;
    }
    const double e = n * probs[i];
    chi += (counts[i] - e) * (counts[i] - e) / e;
    ++dof;
  }
  return chi;
}

// Upper-tail probability of the chi-square distribution, P(X > x) for `dof`
// degrees of freedom, via the regularized incomplete gamma series/fraction.
inline double chi_square_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  const double a = 0.5 * dof, z = 0.5 * x;
  if (z <= 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (z < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 1000; ++n) {
      term *= z / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-z + a * std::log(z) - lg);
  }
  double b = z + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - lg) * h;
}

// Kolmogorov-Smirnov statistic of a sample against Uniform(lo, hi).
inline double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
    worst = std::max({worst, (i + 1) / n - f, f - i / n});
  }
  return worst;
}

}  // namespace oracle
