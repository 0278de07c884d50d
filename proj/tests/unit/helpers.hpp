#pragma once

#include <random>

#include <Eigen/Dense>

#include "byzgossip/graph.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Honest K_n plus `byz` Byzantine nodes, each linked to every honest node.
inline byzgossip::Topology complete_with_byzantine(std::size_t n, std::size_t byz) {
  std::vector<byzgossip::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  std::vector<byzgossip::NodeId> b;
  for (std::size_t k = 0; k < byz; ++k) {
    b.push_back(n + k);
    for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, n + k);
  }
  return byzgossip::Topology(n + byz, edges, b);
}

}  // namespace testutil
