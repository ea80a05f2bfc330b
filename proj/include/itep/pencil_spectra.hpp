#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "itep/common.hpp"
#include "itep/discretization.hpp"

namespace itep {

// Block linearization [[0, A2^-1], [-A0, -A1 A2^-1]] acting on (u, v).
struct CompanionOperator {
  std::shared_ptr<const DiscretePencil> pencil;
  CMat matrix;  // explicit nodal block form
  int dim() const { return static_cast<int>(matrix.rows()); }
};

CompanionOperator linearize(const DiscretePencil& pencil);

// Companion vectors (u_j; v_j) with (A - lambda0) x_{j+1} = x_j, x_0 an eigenvector.
using JordanChain = std::vector<CVec>;

struct KeldyshChain {
  cplx lambda0{0.0, 0.0};
  std::vector<CVec> vectors;  // nodal u_0 ... u_{k-1}
  std::vector<CVec> coords;   // factored coordinates of the same vectors (empty for raw pencils)
  std::vector<double> residuals;
};

struct EigenCluster {
  cplx lambda{0.0, 0.0};
  int multiplicity = 1;  // algebraic
  double spread = 0.0;   // largest distance of a member eigenvalue to lambda
  std::vector<JordanChain> jordan;
  std::vector<KeldyshChain> chains;
  double residual = 0.0;  // worst chain residual
  bool trusted = false;

  int chain_length() const;
};

struct EigenOptions {
  std::optional<cplx> lambda_prime;
  // Pencil on a refined grid; when set, trust requires a matching eigenvalue there.
  std::shared_ptr<const DiscretePencil> reference;
  double cluster_tol = 1e-6;
  double trust_tol = 1e-6;
  double residual_tol = 1e-7;
  int max_dim = 8000;
};

struct EigenSolution {
  cplx lambda_prime{0.0, 0.0};
  std::vector<EigenCluster> clusters;  // sorted by distance to lambda_prime
  CMat right_vectors;                  // column j: u_0 of the first chain of cluster j
  std::vector<bool> trust_mask;

  // Trusted eigenvalues, repeated by algebraic multiplicity when requested.
  std::vector<cplx> trusted_eigenvalues(bool with_multiplicity = true) const;
};

EigenSolution eigen(const CompanionOperator& comp, const EigenOptions& opt = {});

// All 2N companion eigenvalues, unsorted clusters, computed by shift-and-invert at sigma.
std::vector<cplx> companion_eigenvalues(const DiscretePencil& pencil, cplx sigma);

// First positive integer point where T is comfortably invertible.
cplx default_lambda_prime(const DiscretePencil& pencil);

// (A_F - sigma)^-1 in factored coordinates (xi, v); for raw pencils xi = u.
CMat shifted_companion_inverse(const DiscretePencil& pencil, cplx sigma);

// P M P^-1 with P = diag(R, W^1/2), so plain 2-norms of the result are H2 x L2 norms of M.
CMat companion_scaled(const DiscretePencil& pencil, const CMat& M);
// Operator 2-norm of M (factored companion coordinates) in the H2 x L2 norm.
double companion_norm(const DiscretePencil& pencil, const CMat& M);
// Singular values of M in the same norm.
RVec companion_singular_values(const DiscretePencil& pencil, const CMat& M);

KeldyshChain keldysh_from_jordan(const CompanionOperator& comp, const DiscretePencil& pencil, cplx lambda0,
                                 const JordanChain& chain);
JordanChain jordan_from_keldysh(const DiscretePencil& pencil, const KeldyshChain& chain);

// Residual of equation k: |sum_{j<=k} B_{k-j} u_j| / max_j |u_j|. Assembled pencils
// evaluate it in factored coordinates and divide by the size of the B_m as well.
std::vector<double> verify_chain(const DiscretePencil& pencil, const KeldyshChain& chain);

double schatten_norm(const CMat& M, double p);

struct TorusSum {
  double partial = 0.0;
  double tail_bound = 0.0;
};

TorusSum torus_embedding_sum(int n, double p, long long cutoff);

struct CountingReport {
  std::vector<double> t_values;
  std::vector<int> counts;
  std::vector<double> discrete_bound;
  std::vector<double> schatten_bound;  // NaN when no operator is available
  double p = 1.0;
  cplx lambda_prime{0.0, 0.0};
  bool certified = true;  // counts <= discrete bound at every t
};

CountingReport counting(const EigenSolution& eig, cplx lambda_prime, double p, const std::vector<double>& t_values,
                        const CompanionOperator* comp = nullptr);

struct CompletenessResult {
  double residual = 1.0;
  int columns = 0;
  int rank = 0;
  bool rank_deficient = false;
};

CompletenessResult completeness_residual(const EigenSolution& eig, const DiscretePencil& pencil, const CVec& f,
                                         int m);

// Smooth test function vanishing to all orders at the boundary:
// exp(-1/(4 y (1 - y))) * sum_{k<6} c_k T_k(2y - 1), y the rescaled coordinate,
// c_k ~ N(0, 1) / (1 + k)^2. 2D pencils use a product of two such factors and raw
// pencils get i.i.d. normal entries.
CVec completeness_sample(const DiscretePencil& pencil, std::uint64_t seed);

}  // namespace itep
