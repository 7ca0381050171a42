#pragma once

// Embedding quality scores: distance correlation, trustworthiness /
// continuity, Shepard goodness (Spearman) and leave-one-out k-NN accuracy.
// Condensed distance vectors list pairs (i, j), i < j, in row-major order.

#include <hgplvm/kernel.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace hgplvm {

enum class Metric { Hyperbolic, Euclidean, Hamming };

inline Metric parse_metric(const std::string &tag) {
  if (tag == "hyperbolic") {
    return Metric::Hyperbolic;
  }
  if (tag == "euclidean") {
    return Metric::Euclidean;
  }
  if (tag == "hamming") {
    return Metric::Hamming;
  }
  throw ArgumentError("unknown metric tag '" + tag + "'");
}

using DistanceVector = std::vector<double>;

inline std::size_t condensed_size(std::size_t n) { return n * (n - 1) / 2; }

namespace detail {

template <class F> DistanceVector condensed(std::size_t n, F &&dist) {
  DistanceVector out;
  out.reserve(condensed_size(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back(dist(i, j));
    }
  }
  return out;
}

/// Dense symmetric distance matrix from a condensed vector.
inline Matrix squareform(const DistanceVector &d, std::size_t n) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[k];
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d[k];
    }
  }
  return m;
}

/// Average ranks (1-based) with ties sharing their mean rank.
inline std::vector<double> average_ranks(const std::vector<double> &v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      r[idx[k]] = avg;
    }
    i = j + 1;
  }
  return r;
}

/// Neighbours of i sorted by distance, ties by index, excluding i.
inline std::vector<Eigen::Index> neighbour_order(const Matrix &dist,
                                                 Eigen::Index i) {
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(dist.rows() - 1));
  for (Eigen::Index j = 0; j < dist.rows(); ++j) {
    if (j != i) {
      order.push_back(j);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return dist(i, a) < dist(i, b);
                   });
  return order;
}

/// 1 - 2/(N k (2N - 3k - 1)) * sum_i sum_{j in kNN_b(i)} max(0, r_a(i,j) - k)
/// where r_a is the rank under dist_a. Trustworthiness uses
/// (a, b) = (observed, latent); continuity swaps them.
inline double neighbourhood_score(const Matrix &dist_a, const Matrix &dist_b,
                                  int k) {
  const auto n = dist_a.rows();
  if (dist_b.rows() != n) {
    throw DimensionError("neighbourhood score: point counts differ");
  }
  if (k < 1 || !(static_cast<double>(k) < (static_cast<double>(n) - 1) / 2)) {
    throw ArgumentError("neighbourhood score: need 1 <= k < (N-1)/2");
  }
  double penalty = 0.0;
  std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto order_a = neighbour_order(dist_a, i);
    for (std::size_t r = 0; r < order_a.size(); ++r) {
      rank[static_cast<std::size_t>(order_a[r])] =
          static_cast<Eigen::Index>(r) + 1;
    }
    const auto order_b = neighbour_order(dist_b, i);
    for (int t = 0; t < k; ++t) {
      const auto r = rank[static_cast<std::size_t>(order_b[t])];
      penalty += static_cast<double>(std::max<Eigen::Index>(0, r - k));
    }
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

} // namespace detail

/// Pairwise hyperbolic distances between latent points.
inline DistanceVector pairwise_distances(const PointList &points) {
  if (points.size() < 2) {
    throw ArgumentError("pairwise_distances: need at least two points");
  }
  const Matrix pts = stack(points);
  return detail::condensed(points.size(), [&](std::size_t i, std::size_t j) {
    return detail::distance(pts.col(static_cast<Eigen::Index>(i)),
                            pts.col(static_cast<Eigen::Index>(j)));
  });
}

/// Pairwise distances between the rows of `rows`. For the hyperbolic metric
/// each row holds ambient Lorentz coordinates.
inline DistanceVector pairwise_distances(const Matrix &rows, Metric metric) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n < 2) {
    throw ArgumentError("pairwise_distances: need at least two points");
  }
  switch (metric) {
  case Metric::Hyperbolic: {
    const Matrix cols = rows.transpose();
    return detail::condensed(n, [&](std::size_t i, std::size_t j) {
      return detail::distance(cols.col(static_cast<Eigen::Index>(i)),
                              cols.col(static_cast<Eigen::Index>(j)));
    });
  }
  case Metric::Euclidean: {
    const Matrix cols = rows.transpose();
    return detail::condensed(n, [&](std::size_t i, std::size_t j) {
      return (cols.col(static_cast<Eigen::Index>(i)) -
              cols.col(static_cast<Eigen::Index>(j)))
          .norm();
    });
  }
  case Metric::Hamming: {
    const Matrix cols = rows.transpose();
    return detail::condensed(n, [&](std::size_t i, std::size_t j) {
      return static_cast<double>(
          (cols.col(static_cast<Eigen::Index>(i)).array() !=
           cols.col(static_cast<Eigen::Index>(j)).array())
              .count());
    });
  }
  }
  throw ArgumentError("pairwise_distances: unknown metric");
}

/// Pearson correlation of two condensed distance vectors.
inline double distance_correlation(const DistanceVector &a,
                                   const DistanceVector &b) {
  if (a.size() != b.size()) {
    throw DimensionError("distance_correlation: length mismatch");
  }
  if (a.size() < 2) {
    throw ArgumentError("distance_correlation: need at least two pairs");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw ArgumentError(
        "distance_correlation: undefined for a constant distance vector");
  }
  return sab / std::sqrt(saa * sbb);
}

/// Szekely's distance correlation between two point sets given by their
/// condensed distance vectors over n points (double-centred distance
/// matrices). Reported next to the Pearson score; not used for scoring.
inline double szekely_distance_correlation(const DistanceVector &a,
                                           const DistanceVector &b,
                                           std::size_t n) {
  if (a.size() != condensed_size(n) || b.size() != condensed_size(n)) {
    throw DimensionError("szekely_distance_correlation: length does not match N");
  }
  auto centred = [n](const DistanceVector &d) {
    Matrix m = detail::squareform(d, n);
    const Vector row = m.rowwise().mean();
    const double grand = m.mean();
    m.colwise() -= row;
    m.rowwise() -= row.transpose();
    m.array() += grand;
    return m;
  };
  const Matrix A = centred(a);
  const Matrix B = centred(b);
  const double ab = A.cwiseProduct(B).sum();
  const double aa = A.squaredNorm();
  const double bb = B.squaredNorm();
  if (!(aa > 0.0) || !(bb > 0.0)) {
    throw ArgumentError(
        "szekely_distance_correlation: undefined for constant distances");
  }
  return std::sqrt(std::max(0.0, ab) / std::sqrt(aa * bb));
}

/// Spearman correlation between observed and latent pairwise distances.
inline double shepard_goodness(const DistanceVector &observed,
                               const DistanceVector &latent) {
  return distance_correlation(detail::average_ranks(observed),
                              detail::average_ranks(latent));
}

/// Trustworthiness from dense distance matrices (observed, latent).
inline double trustworthiness_from_distances(const Matrix &observed,
                                             const Matrix &latent, int k) {
  return detail::neighbourhood_score(observed, latent, k);
}

inline double continuity_from_distances(const Matrix &observed,
                                        const Matrix &latent, int k) {
  return detail::neighbourhood_score(latent, observed, k);
}

/// Dense symmetric matrix from a condensed vector of n points.
inline Matrix square_distances(const DistanceVector &d, std::size_t n) {
  if (d.size() != condensed_size(n)) {
    throw DimensionError("square_distances: length does not match N");
  }
  return detail::squareform(d, n);
}

/// Latent neighbours ranked by hyperbolic distance, observed ranks by
/// Euclidean distance.
inline double trustworthiness(const Matrix &Y, const PointList &latent,
                              int k) {
  const auto n = static_cast<std::size_t>(Y.rows());
  if (latent.size() != n) {
    throw DimensionError("trustworthiness: point counts differ");
  }
  const Matrix dy =
      detail::squareform(pairwise_distances(Y, Metric::Euclidean), n);
  const Matrix dx = detail::squareform(pairwise_distances(latent), n);
  return detail::neighbourhood_score(dy, dx, k);
}

inline double continuity(const Matrix &Y, const PointList &latent, int k) {
  const auto n = static_cast<std::size_t>(Y.rows());
  if (latent.size() != n) {
    throw DimensionError("continuity: point counts differ");
  }
  const Matrix dy =
      detail::squareform(pairwise_distances(Y, Metric::Euclidean), n);
  const Matrix dx = detail::squareform(pairwise_distances(latent), n);
  return detail::neighbourhood_score(dx, dy, k);
}

/// Leave-one-out k-NN label accuracy under hyperbolic distance. A tied vote
/// goes to the tied label met first in distance order.
inline double knn_accuracy(const PointList &latent,
                           const std::vector<int> &labels, int k = 5) {
  const auto n = latent.size();
  if (labels.size() != n) {
    throw DimensionError("knn_accuracy: label count differs");
  }
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw ArgumentError("knn_accuracy: need 1 <= k < N");
  }
  const Matrix dist = detail::squareform(pairwise_distances(latent), n);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const auto order = detail::neighbour_order(dist, i);
    std::map<int, int> votes;
    int best = 0;
    for (int t = 0; t < k; ++t) {
      best = std::max(best, ++votes[labels[static_cast<std::size_t>(order[t])]]);
    }
    int pred = 0;
    for (int t = 0; t < k; ++t) {
      const int lab = labels[static_cast<std::size_t>(order[t])];
      if (votes[lab] == best) {
        pred = lab;
        break;
      }
    }
    if (pred == labels[static_cast<std::size_t>(i)]) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

} // namespace hgplvm
