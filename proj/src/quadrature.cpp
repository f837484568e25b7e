#include "causalot/quadrature.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "causalot/errors.hpp"

namespace causalot {

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
// polynomials: zero diagonal, off-diagonal sqrt(k).
Quantization quantize_gauss_hermite(int n) {
  if (n < 1) throw ValidationError("quantize_gauss_hermite needs n >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const auto& vals = eig.eigenvalues();
  const auto& vecs = eig.eigenvectors();

  Quantization q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    q.nodes[k] = vals(k);
    q.weights[k] = vecs(0, k) * vecs(0, k);
  }
  // Enforce exact symmetry so odd moments vanish to rounding.
  for (int k = 0; k < n / 2; ++k) {
    int m = n - 1 - k;
    double z = 0.5 * (q.nodes[m] - q.nodes[k]);
    double w = 0.5 * (q.weights[m] + q.weights[k]);
    q.nodes[k] = -z;
    q.nodes[m] = z;
    q.weights[k] = w;
    q.weights[m] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  double total = std::accumulate(q.weights.begin(), q.weights.end(), 0.0);
  for (double& w : q.weights) w /= total;
  return q;
}

}  // namespace causalot
