#pragma once

#include <Eigen/Dense>

#include "byzgossip/graph.hpp"
#include "byzgossip/spectral.hpp"

namespace byzgossip {

/// A topology together with the derived quantities every round needs:
/// honest relabeling, Laplacians and spectra of the full and honest graphs.
struct Network {
  Topology topology;
  HonestSubgraph honest;
  Eigen::MatrixXd w_full;
  Eigen::MatrixXd w_honest;
  SpectralInfo full_spectrum;
  SpectralInfo honest_spectrum;

  static Network build(Topology t);
};

}  // namespace byzgossip
