#pragma once

#include <vector>

#include "itep/common.hpp"
#include "itep/discretization.hpp"
#include "itep/pencil_spectra.hpp"

namespace itep {

// ||T(lambda)^-1|| as an operator on the weighted L2 space.
double resolvent_norm(const DiscretePencil& pencil, cplx lambda);

struct RayScan {
  cplx direction{1.0, 0.0};
  std::vector<double> radii;
  std::vector<double> norms;
  double fitted_slope = 0.0;  // log-log slope over the top decade of radii
};

// poles (optional) are checked against the ray before sampling.
RayScan ray_scan(const DiscretePencil& pencil, cplx direction, const std::vector<double>& radii,
                 const std::vector<cplx>& poles = {});

// n log-spaced radii in [r_min, r_max].
std::vector<double> log_radii(double r_min, double r_max, int n);

// Largest distance to the closed negative half-line among poles with |lambda| in [2^k, 2^(k+1)).
struct BandDistance {
  double r_low = 0.0;
  double r_high = 0.0;
  int count = 0;
  double max_distance = 0.0;
};
std::vector<BandDistance> pole_band_distances(const std::vector<cplx>& poles);

struct BlockInverseReport {
  double max_rel_error = 0.0;       // componentwise, of (A - lambda) B - I
  double norm_T_inv = 0.0;          // weighted L2
  double norm_companion_inv = 0.0;  // H2 x L2
  bool inequality_holds = false;
};

// Builds the explicit block inverse of the companion operator from T(lambda)^-1 and checks it.
BlockInverseReport companion_block_inverse_check(const DiscretePencil& pencil, cplx lambda);

// Relative Frobenius discrepancy between (A - lambda)^-1 and
// (A - lambda')^-1 (Id - (lambda - lambda')(A - lambda')^-1)^-1.
double resolvent_identity_check(const CompanionOperator& comp, cplx lambda, cplx lambda_prime);

struct WeierstrassProduct {
  cplx lambda_prime{0.0, 0.0};
  std::vector<cplx> zeros;  // with multiplicity
  int k = 1;                // exponential factor uses powers 1 .. k-1
  double p = 1.0;
};

// k = max(1, ceil(p)). Rejects zeros that coincide with lambda'.
WeierstrassProduct make_weierstrass(const std::vector<cplx>& zeros, cplx lambda_prime, double p);

cplx phi_eval(const WeierstrassProduct& wp, cplx lambda);
// Principal part of log phi summed factor by factor; -inf real part at a zero.
cplx phi_log(const WeierstrassProduct& wp, cplx lambda);

struct CarlemanReport {
  double max_lhs = 0.0;
  double median_lhs = 0.0;
  double near_pole_max = 0.0;  // over probes 1e-3 away from zeros inside the circle
  int near_pole_samples = 0;
  double schatten_p = 0.0;     // sum of s_i^p for (A - lambda')^-1
  // exp(r^p * schatten_p), r the circle radius
  double bound_rhs = 0.0;
  // max ln(lhs) / (r^p schatten_p): the measured constant in the exponent
  double measured_constant = 0.0;
};

// lhs(lambda) = |phi(lambda)| ||(Id - (lambda - lambda') K)^-1||, K = (A - lambda')^-1, on the
// circle |lambda - lambda'| = radius.
CarlemanReport carleman_check(const CompanionOperator& comp, const WeierstrassProduct& wp, double radius,
                              int n_samples);

struct GrowthFit {
  std::vector<double> radii;
  std::vector<double> max_values;  // max lhs per circle
  double exponent = 0.0;           // slope of ln ln M(r) against ln r
  bool bounded = false;            // ln M(r) <= 0 on too many radii to fit
};

GrowthFit carleman_growth(const CompanionOperator& comp, const WeierstrassProduct& wp,
                          const std::vector<double>& radii, int n_samples);

struct CircleSample {
  double radius = 0.0;
  double max_log_norm = 0.0;
  double min_pole_distance = 0.0;
};

struct CircleGrowthReport {
  std::vector<CircleSample> circles;
  double exponent = 0.0;  // slope of ln(max_log_norm) against ln r where max_log_norm > 0
  bool bounded = false;   // fewer than two circles with positive max_log_norm
  double p = 1.0;
  double eps = 0.1;
  bool passed = true;     // exponent <= p + eps
};

// One radius per dyadic band [b, 2b), chosen greedily from candidates to maximize the
// distance to the given poles; the distance must reach gap_fraction * radius.
CircleGrowthReport circle_growth_scan(const DiscretePencil& pencil, const std::vector<double>& band_starts,
                                      const std::vector<cplx>& poles, double p, double eps = 0.1,
                                      int n_samples = 128, double gap_fraction = 1e-2);

struct LaurentData {
  cplx lambda0{0.0, 0.0};
  int order = 0;  // N
  double radius = 0.0;
  int n_quad = 256;
  std::vector<int> indices;  // n = -N .. M
  std::vector<CMat> C;       // nodal coefficients
  std::vector<CMat> G;       // coefficients of F(lambda)^-1 (C = S0 G)
  double max_norm = 0.0;
  double noise_floor = 0.0;
  double convergence_error = 0.0;  // relative change against n_quad / 2

  const CMat& coefficient(int n) const;
};

// Contour integrals C_n = (1/2 pi i) int T^-1 (lambda - lambda0)^(-n-1) for
// n = -n_coeffs .. n_coeffs - 1; the order N is the largest n with ||C_-n|| above
// the noise floor. When eigenvalues are given the circle must enclose exactly one cluster.
LaurentData laurent_coefficients(const DiscretePencil& pencil, cplx lambda0, double radius, int n_coeffs,
                                 int n_quad = 256, const std::vector<cplx>& eigenvalues = {});

// Relative residual of sum_{j<=k} B_{k-j} C_{j-N} for k = 0 .. N-1, B_m the Taylor
// coefficients of T at lambda0.
std::vector<double> laurent_relations(const DiscretePencil& pencil, const LaurentData& data);

// Largest principal-angle sine between the ranges of C_-1 .. C_-N and span(vectors).
double laurent_range_angle(const DiscretePencil& pencil, const LaurentData& data, const std::vector<CVec>& vectors);

struct TInfinity {
  double value = 0.0;
  double log_plus_mean = 0.0;
  double pole_term = 0.0;
  double masked_fraction = 0.0;
};

TInfinity t_infinity_estimate(const DiscretePencil& pencil, double radius, int n_samples,
                              const std::vector<cplx>& poles);

}  // namespace itep
