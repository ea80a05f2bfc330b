#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "itep/common.hpp"
#include "itep/symbol_checks.hpp"

namespace itep {

struct Grid1D {
  double a = 0.0;
  double b = 1.0;
  int n_pts = 0;
  RVec nodes;    // Chebyshev-Gauss-Lobatto, increasing
  RVec weights;  // Clenshaw-Curtis
};

Grid1D make_grid(double a, double b, int n_pts);

// q(x) in one of three forms:
//   Constant    data = {c}
//   Polynomial  data = {c0, c1, ...}, q = sum c_k x^k (1D) or
//               data = row-major (deg+1)x(deg+1) coefficients c_ij x^i y^j (2D)
//   Samples     data = values at the Chebyshev-Lobatto nodes of the grid (1D only)
struct CoefficientSpec {
  enum class Type { Constant, Polynomial, Samples };
  Type type = Type::Constant;
  std::vector<double> data{1.0};
};

struct MediumProfile {
  PencilKind kind = PencilKind::Helmholtz;
  CoefficientSpec q;
  std::optional<double> q_min;  // inferred from the sampled values when absent
  std::optional<double> q_max;
};

namespace detail {

// Chebyshev machinery shared with tests.
struct FactoredBasis {
  int N = 0;
  double a = 0.0, b = 1.0, h = 0.5;
  RVec t;              // reference nodes in (-1, 1), increasing
  RVec y;              // physical nodes
  RVec w;              // Fejer weights on [a, b]
  RMat C;              // nodal values -> Chebyshev coefficients
  std::vector<RMat> J; // J[k]: coefficients of the k-fold antiderivative
  RMat Z;              // orthonormal nullspace of the boundary rows
  std::vector<RMat> S; // S[m]: xi -> d^m u/dx^m at y, m = 0..4

  RMat rows(int m, const RVec& x) const;
};

FactoredBasis make_factored_basis(double a, double b, int N, const BoundaryPair& bc);

RVec fejer_weights(int N);  // on [-1, 1]

}  // namespace detail

// Dense pencil T(lambda) = A0 + lambda A1 + lambda^2 A2 acting on nodal values.
//
// Assembled pencils keep a factored copy: the unknown is a coordinate vector
// xi with u = S0 xi, and F_k = A_k S0 exactly. The factored matrices are well
// conditioned, the nodal A_k are not, so every solver works with F_k.
// Pencils built from raw matrices have S0 = I and F_k = A_k.
struct DiscretePencil {
  PencilKind kind = PencilKind::Helmholtz;
  BoundaryPair bc;
  int spatial_dim = 0;  // 0 for raw matrix pencils
  bool factored = false;

  Grid1D grid_x;
  Grid1D grid_y;
  RVec q_nodes;  // q at the collocation nodes
  RVec nodes_x;  // collocation abscissae (1D: the nodes; 2D: per node)
  RVec nodes_y;
  RVec weights;  // discrete L2 weights at the collocation nodes

  CMat A0, A1, A2;
  CMat F0, F1, F2;
  CMat S0;
  // Coordinate-to-derivative maps of order <= 2; stacked they define the H2 norm.
  std::vector<CMat> sobolev;

  int dim() const { return static_cast<int>(A0.rows()); }

  // T(lambda) in factored coordinates.
  CMat factored_at(cplx lambda) const { return F0 + lambda * F1 + (lambda * lambda) * F2; }
  CMat at(cplx lambda) const { return A0 + lambda * A1 + (lambda * lambda) * A2; }

  CVec to_coords(const CVec& u) const;
  CVec to_nodal(const CVec& xi) const { return factored ? CVec(S0 * xi) : xi; }

  RVec sqrt_weights() const { return weights.cwiseSqrt(); }
  // Upper-triangular R with |R xi| equal to the discrete H2 norm of S0 xi.
  const CMat& h2_factor() const { return cache->h2; }

  struct Cache {
    Eigen::PartialPivLU<CMat> s0_lu;
    CMat h2;
    double f_norms[3] = {0.0, 0.0, 0.0};  // spectral norm estimates of F0, F1, F2
    std::shared_ptr<const detail::FactoredBasis> basis_x, basis_y;
  };
  std::shared_ptr<const Cache> cache;  // filled by the factories below
};

DiscretePencil assemble_pencil(const MediumProfile& profile, const Grid1D& grid, const BoundaryPair& bc);

DiscretePencil assemble_pencil_2d(const MediumProfile& profile, const Grid1D& grid_x, const Grid1D& grid_y,
                                  const BoundaryPair& bc, int max_unknowns = 3600);

// Wraps explicit matrices; weights default to ones.
DiscretePencil make_matrix_pencil(const CMat& A0, const CMat& A1, const CMat& A2, const RVec& weights = RVec());

CVec apply_pencil(const DiscretePencil& pencil, cplx lambda, const CVec& u);

// Values of d^m u / dx^m at arbitrary points for u = S0 xi (1D assembled pencils).
CMat derivative_rows(const DiscretePencil& pencil, int m, const RVec& x);

}  // namespace itep
