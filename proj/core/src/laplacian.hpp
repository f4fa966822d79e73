#pragma once

#include <Eigen/Dense>

namespace rdot::detail {

// Solves L x = b for a weighted graph Laplacian L and sum(b) = 0 by
// grounding the node with the largest degree. Grounding keeps the reduced
// matrix an M-matrix, so weights far below the largest ones survive; a rank
// one gauge fix would round them away. Rows of L are assumed to sum to 0.
inline Eigen::VectorXd solve_laplacian(const Eigen::MatrixXd& lap,
                                       const Eigen::VectorXd& b) {
  const Eigen::Index n = lap.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n <= 1) return x;
  Eigen::Index ground = 0;
  lap.diagonal().maxCoeff(&ground);
  Eigen::MatrixXd reduced(n - 1, n - 1);
  Eigen::VectorXd rhs(n - 1);
  for (Eigen::Index a = 0, ra = 0; a < n; ++a) {
    if (a == ground) continue;
    rhs(ra) = b(a);
    for (Eigen::Index c = 0, rc = 0; c < n; ++c) {
      if (c == ground) continue;
      reduced(ra, rc++) = lap(a, c);
    }
    ++ra;
  }
  const Eigen::VectorXd y = reduced.ldlt().solve(rhs);
  for (Eigen::Index a = 0, ra = 0; a < n; ++a) {
    if (a != ground) x(a) = y(ra++);
  }
  return x;
}

}  // namespace rdot::detail
