#pragma once

#include <vector>

#include "itep/common.hpp"
#include "itep/symbol_checks.hpp"

namespace itep {

// Constant-coefficient pencil on (0, L). The ODE factors as
// (d^2 - mu3)(d^2 - mu1) u = 0 with mu1 = lambda and
//   Helmholtz:    mu3 = lambda (1 + 1/q)
//   Schrodinger:  mu3 = lambda - 1/q
struct CharacteristicFunction {
  PencilKind kind = PencilKind::Helmholtz;
  double q = 1.0;
  double L = 1.0;
  BoundaryPair bc;
};

void validate(const CharacteristicFunction& cf);

enum class DetBranch { Auto, Distinct, Confluent };

// Boundary-trace determinant in an entire solution basis. Rows at x = L are scaled
// by exp(-max Re sqrt(mu) L); the scale is positive, so zeros and winding numbers
// are unaffected. Auto switches to the confluent basis when the exponent gap is
// below 1e-6 (1 + |lambda|)^(1/2).
cplx char_det(const CharacteristicFunction& cf, cplx lambda, DetBranch branch = DetBranch::Auto);

struct SearchRect {
  double re_min = -1.0, re_max = 1.0;
  double im_min = -1.0, im_max = 1.0;
};

// Winding number of char_det around the rectangle boundary; throws when the
// boundary passes too close to a root to resolve.
int winding_number(const CharacteristicFunction& cf, const SearchRect& rect, int points_per_side = 128);

struct OracleRoot {
  cplx lambda{0.0, 0.0};
  int multiplicity = 1;
  double newton_residual = 0.0;  // |last Newton step| / max(1, |lambda|)
};

// Roots inside rect sorted by (re, im). Edges lying on roots are nudged outward.
std::vector<OracleRoot> find_roots(const CharacteristicFunction& cf, SearchRect rect, int max_roots = 1000);

// The rectangle actually searched after nudging, with its winding number.
struct RootSearch {
  SearchRect rect;
  int winding = 0;
  std::vector<OracleRoot> roots;
};
RootSearch search_roots(const CharacteristicFunction& cf, SearchRect rect, int max_roots = 1000);

}  // namespace itep
