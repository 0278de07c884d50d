#include "byzgossip/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byzgossip/error.hpp"

namespace byzgossip {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) fail(ErrorKind::ContractViolation, "eigensolver needs a square matrix");
  const Eigen::Index n = input.rows();
  const double scale = std::max(1.0, input.norm());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-12 * scale)
        fail(ErrorKind::ContractViolation, "eigensolver needs a symmetric matrix");

  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double target = tol * scale;
  int sweep = 0;
  for (; sweep < max_sweeps && off_diagonal_norm(a) > target; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // rotation angle zeroing a(p, q); t is the smaller root of t^2 + 2 theta t - 1 = 0
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(a) > target) fail(ErrorKind::ContractViolation, "Jacobi sweeps did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  out.sweeps = sweep;
  return out;
}

SpectralInfo spectral_info(const Eigen::MatrixXd& lap) {
  const SymmetricEigen eig = symmetric_eigen(lap);
  const Eigen::Index n = eig.values.size();
  SpectralInfo s;
  s.eigenvalues = eig.values;
  if (n == 0) return s;
  s.mu_max = std::max(0.0, eig.values[n - 1]);
  const double kernel_tol = 1e-9 * std::max(1.0, s.mu_max);
  Eigen::Index k = 0;
  while (k < n && std::abs(eig.values[k]) <= kernel_tol) ++k;
  s.kernel_dim = static_cast<std::size_t>(k);
  if (k != 1 || n < 2) {
    // disconnected (or trivial): algebraic connectivity is zero by convention
    s.mu2 = 0.0;
    s.gamma = 0.0;
    return s;
  }
  s.mu2 = eig.values[1];
  s.gamma = s.mu_max > 0.0 ? s.mu2 / s.mu_max : 0.0;

  const double mult_tol = 1e-8 * std::max(1.0, s.mu_max);
  Eigen::Index end = 2;
  while (end < n && eig.values[end] - s.mu2 <= mult_tol) ++end;
  const Eigen::MatrixXd basis = eig.vectors.middleCols(1, end - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    // projection of e_j onto the mu2 eigenspace
    Eigen::VectorXd proj = basis * basis.row(j).transpose();
    const double len = proj.norm();
    if (len > 1e-8) {
      s.fiedler = proj / len;
      break;
    }
  }
  return s;
}

nlohmann::json to_json(const SpectralInfo& s) {
  nlohmann::json j;
  j["mu2"] = s.mu2;
  j["mu_max"] = s.mu_max;
  j["gamma"] = s.gamma;
  j["kernel_dim"] = s.kernel_dim;
  j["fiedler"] = std::vector<double>(s.fiedler.data(), s.fiedler.data() + s.fiedler.size());
  return j;
}

}  // namespace byzgossip
