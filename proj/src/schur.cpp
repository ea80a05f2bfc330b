#include "schur.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace itep::detail {

SchurForm schur(const CMat& M) {
  Eigen::ComplexSchur<CMat> cs(M.rows());
  cs.setMaxIterations(60 * M.rows());
  cs.compute(M, true);
  if (cs.info() != Eigen::Success) throw Error(ErrorCode::Convergence, "Schur decomposition did not converge");
  return {cs.matrixT(), cs.matrixU()};
}

CVec schur_eigenvector(const SchurForm& s, Eigen::Index k) {
  const CMat& T = s.T;
  const cplx lk = T(k, k);
  CVec y = CVec::Zero(T.rows());
  y(k) = 1.0;
  const double small = std::max(T.cwiseAbs().maxCoeff(), 1.0) * 1e-16;
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    cplx acc = 0.0;
    for (Eigen::Index j = i + 1; j <= k; ++j) acc += T(i, j) * y(j);
    cplx d = T(i, i) - lk;
    if (std::abs(d) < small) d = small;
    y(i) = -acc / d;
  }
  CVec x = s.Q * y;
  return x / x.norm();
}

namespace {

// Exchanges the diagonal entries at k and k+1 with a unitary rotation.
void swap_adjacent(CMat& T, CMat& Q, Eigen::Index k) {
  const cplx t11 = T(k, k);
  const cplx t22 = T(k + 1, k + 1);
  const cplx a = T(k, k + 1);
  const cplx b = t22 - t11;
  const double r = std::hypot(std::abs(a), std::abs(b));
  if (r == 0.0) return;
  const cplx c = a / r;
  const cplx s = b / r;
  // G = [[c, -conj(s)], [s, conj(c)]]; first column spans the t22 eigenvector.
  const Eigen::Index n = T.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx x = T(i, k), y = T(i, k + 1);
    T(i, k) = x * c + y * s;
    T(i, k + 1) = -x * std::conj(s) + y * std::conj(c);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx x = T(k, j), y = T(k + 1, j);
    T(k, j) = std::conj(c) * x + std::conj(s) * y;
    T(k + 1, j) = -s * x + c * y;
  }
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    const cplx x = Q(i, k), y = Q(i, k + 1);
    Q(i, k) = x * c + y * s;
    Q(i, k + 1) = -x * std::conj(s) + y * std::conj(c);
  }
  T(k + 1, k) = 0.0;
}

}  // namespace

InvariantSubspace invariant_subspace(const SchurForm& s, std::vector<Eigen::Index> positions) {
  std::sort(positions.begin(), positions.end());
  const Eigen::Index m = static_cast<Eigen::Index>(positions.size());
  const Eigen::Index last = positions.back();
  // Only the leading (last+1) columns of T and Q are touched by the swaps.
  CMat T = s.T.topLeftCorner(last + 1, last + 1);
  CMat Q = s.Q.leftCols(last + 1);
  for (Eigen::Index target = 0; target < m; ++target)
    for (Eigen::Index k = positions[static_cast<std::size_t>(target)]; k > target; --k) swap_adjacent(T, Q, k - 1);
  return {Q.leftCols(m), T.topLeftCorner(m, m).triangularView<Eigen::Upper>()};
}

}  // namespace itep::detail
