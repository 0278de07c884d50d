#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace byzgossip {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix. Stops once the
/// off-diagonal Frobenius norm falls below tol * max(1, ||A||_F).
/// Throws ContractViolation on non-square or non-symmetric input.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, double tol = 1e-12, int max_sweeps = 100);

struct SpectralInfo {
  double mu2 = 0.0;
  double mu_max = 0.0;
  double gamma = 0.0;
  /// Unit norm, orthogonal to the all-ones vector; empty when the graph is
  /// disconnected or has a single node.
  Eigen::VectorXd fiedler;
  std::size_t kernel_dim = 0;
  Eigen::VectorXd eigenvalues;
  bool connected() const noexcept { return kernel_dim == 1 && fiedler.size() > 0; }
};

/// Spectral summary of a graph Laplacian. For a repeated mu2 the Fiedler vector
/// is the normalized projection of the first basis vector e_j with a non-zero
/// component in the eigenspace, so the result does not depend on solver basis.
SpectralInfo spectral_info(const Eigen::MatrixXd& laplacian);

nlohmann::json to_json(const SpectralInfo& s);

}  // namespace byzgossip
