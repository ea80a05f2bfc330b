#pragma once

#include <vector>

#include "itep/common.hpp"

namespace itep::detail {

struct SchurForm {
  CMat T;  // upper triangular
  CMat Q;  // unitary, M = Q T Q^*
};

SchurForm schur(const CMat& M);

// Unit right eigenvector for the diagonal entry at position k of T, in the original basis.
CVec schur_eigenvector(const SchurForm& s, Eigen::Index k);

// Orthonormal basis of the invariant subspace for the given diagonal positions,
// and the restriction of M to it (upper triangular, m x m).
struct InvariantSubspace {
  CMat X;
  CMat M;
};

InvariantSubspace invariant_subspace(const SchurForm& s, std::vector<Eigen::Index> positions);

}  // namespace itep::detail
