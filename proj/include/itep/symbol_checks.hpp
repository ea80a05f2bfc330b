#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "itep/common.hpp"

namespace itep {

enum class PencilKind { Helmholtz, Schrodinger };

std::string to_string(PencilKind kind);
PencilKind parse_kind(const std::string& name);

struct BoundaryPair {
  int m1 = 0;
  int m2 = 1;
};

// Throws InvalidInput unless m1, m2 are distinct orders in {0,1,2,3}.
void validate(const BoundaryPair& bc);

struct SymbolPoint {
  double q_val = 1.0;
  double xi_sq = 0.0;
  cplx lambda{0.0, 0.0};
};

// Closed sector arg_min <= arg(lambda) <= arg_max, angles in [-pi, pi].
struct Cone {
  double arg_min = -M_PI / 2;
  double arg_max = M_PI / 2;
};

cplx principal_symbol(PencilKind kind, const SymbolPoint& pt);

// Roots in lambda of the principal symbol at fixed (q, |xi|^2): Helmholtz
// {-xi_sq, -q xi_sq / (1 + q)}, Schrodinger the double root -xi_sq.
std::array<cplx, 2> condition1_roots(PencilKind kind, double q_val, double xi_sq);

struct EllipticityReport {
  double min_modulus = 0.0;
  SymbolPoint witness;
  double tolerance = 0.0;
  int samples = 0;
  bool passed = false;
};

EllipticityReport check_condition1(PencilKind kind, double q_min, double q_max, const Cone& cone,
                                   int samples, std::uint64_t seed = 0, double tolerance = 1e-8);

struct CharacteristicRoots {
  std::array<cplx, 4> r;
};

CharacteristicRoots characteristic_roots(PencilKind kind, double q_val, double xi_prime_sq,
                                         cplx lambda);

cplx lopatinsky_determinant(PencilKind kind, const BoundaryPair& bc, double q_val,
                            double xi_prime_sq, cplx lambda);

EllipticityReport check_condition2(PencilKind kind, const BoundaryPair& bc, double q_min,
                                   double q_max, const Cone& cone, int samples,
                                   std::uint64_t seed = 0, double tolerance = 1e-8);

}  // namespace itep
