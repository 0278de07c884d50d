#include "byzgossip/network.hpp"

namespace byzgossip {

Network Network::build(Topology t) {
  Network n;
  n.honest = honest_subgraph(t);
  n.w_full = laplacian(t);
  n.w_honest = laplacian(n.honest.graph);
  n.full_spectrum = spectral_info(n.w_full);
  n.honest_spectrum = spectral_info(n.w_honest);
  n.topology = std::move(t);
  return n;
}

}  // namespace byzgossip
