#pragma once

// Synthetic datasets: the noisy binary-tree (SBT) codes and the 2-D spiral
// arms pushed into a higher-dimensional space by a random linear map.

#include <hgplvm/errors.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace hgplvm {

struct Dataset {
  Eigen::MatrixXd Y;        ///< N x D observations
  std::vector<int> labels;  ///< node (SBT) or arm (spiral) per sample
  Eigen::MatrixXi node_codes; ///< nodes x D, SBT only
  std::vector<int> depth_of_node; ///< root has depth 1, SBT only

  Eigen::Index size() const { return Y.rows(); }
  bool has_codes() const { return node_codes.size() > 0; }

  /// Node code of every sample, N x D (SBT only).
  Eigen::MatrixXd sample_codes() const {
    Eigen::MatrixXd out(Y.rows(), node_codes.cols());
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      out.row(i) =
          node_codes.row(labels[static_cast<std::size_t>(i)]).cast<double>();
    }
    return out;
  }
};

struct SbtSpec {
  int depth = 4;
  int samples_per_node = 20;
  double flip_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (depth < 2 || depth > 16) {
      throw ArgumentError("sbt: depth must be in [2, 16]");
    }
    if (samples_per_node < 1) {
      throw ArgumentError("sbt: samples_per_node must be positive");
    }
    if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
      throw ArgumentError("sbt: flip_prob must be in [0, 0.5)");
    }
  }
};

/// Path-indicator codes of a complete binary tree in heap order (children of
/// node i are 2i+1 and 2i+2): bit j of node i is set iff j lies on the path
/// from the root to i. Hamming distance between codes equals tree distance.
inline Eigen::MatrixXi sbt_codes(int depth) {
  if (depth < 2 || depth > 16) {
    throw ArgumentError("sbt_codes: depth must be in [2, 16]");
  }
  const int nodes = (1 << depth) - 1;
  Eigen::MatrixXi codes = Eigen::MatrixXi::Zero(nodes, nodes);
  for (int i = 0; i < nodes; ++i) {
    for (int a = i;; a = (a - 1) / 2) {
      codes(i, a) = 1;
      if (a == 0) {
        break;
      }
    }
  }
  return codes;
}

inline std::vector<int> sbt_depths(int depth) {
  const int nodes = (1 << depth) - 1;
  std::vector<int> out(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    int d = 1;
    for (int a = i; a > 0; a = (a - 1) / 2) {
      ++d;
    }
    out[static_cast<std::size_t>(i)] = d;
  }
  return out;
}

/// samples_per_node noisy copies of every node code; each bit flips
/// independently with probability flip_prob.
inline Dataset sbt_dataset(const SbtSpec &spec) {
  spec.validate();
  Dataset ds;
  ds.node_codes = sbt_codes(spec.depth);
  ds.depth_of_node = sbt_depths(spec.depth);
  const auto nodes = ds.node_codes.rows();
  const auto dim = ds.node_codes.cols();
  ds.Y.resize(nodes * spec.samples_per_node, dim);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::Index row = 0;
  for (Eigen::Index node = 0; node < nodes; ++node) {
    for (int s = 0; s < spec.samples_per_node; ++s, ++row) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        int bit = ds.node_codes(node, j);
        if (unif(rng) < spec.flip_prob) {
          bit = 1 - bit;
        }
        ds.Y(row, j) = static_cast<double>(bit);
      }
      ds.labels.push_back(static_cast<int>(node));
    }
  }
  return ds;
}

struct SpiralSpec {
  int n_spirals = 10;
  int points_per_spiral = 80;
  int ambient_dim = 20;
  double angular_rate = 3.0 * std::numbers::pi;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

/// 2-D spiral arms starting at the origin with noise proportional to the
/// radius, mapped to ambient_dim dimensions by a N(0,1) 2 x D matrix.
inline Dataset spiral_dataset(const SpiralSpec &spec) {
  if (spec.n_spirals < 1 || spec.points_per_spiral < 1 ||
      spec.ambient_dim < 1) {
    throw ArgumentError("spiral: counts must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n =
      static_cast<Eigen::Index>(spec.n_spirals) * spec.points_per_spiral;
  Eigen::MatrixXd plane(n, 2);
  Dataset ds;
  Eigen::Index row = 0;
  for (int s = 0; s < spec.n_spirals; ++s) {
    const double start = 2.0 * std::numbers::pi * s / spec.n_spirals;
    for (int t = 0; t < spec.points_per_spiral; ++t, ++row) {
      const double r = static_cast<double>(t) / spec.points_per_spiral;
      const double theta = start + spec.angular_rate * r;
      const double e0 = spec.noise * normal(rng);
      const double e1 = spec.noise * normal(rng);
      plane(row, 0) = r * std::cos(theta) + r * e0;
      plane(row, 1) = r * std::sin(theta) + r * e1;
      ds.labels.push_back(s);
    }
  }
  Eigen::MatrixXd proj(2, spec.ambient_dim);
  for (Eigen::Index j = 0; j < proj.cols(); ++j) {
    for (Eigen::Index i = 0; i < 2; ++i) {
      proj(i, j) = normal(rng);
    }
  }
  ds.Y = plane * proj;
  return ds;
}

} // namespace hgplvm
