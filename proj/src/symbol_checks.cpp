#include "itep/symbol_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace itep {

std::string to_string(PencilKind kind) {
  return kind == PencilKind::Helmholtz ? "helmholtz" : "schrodinger";
}

PencilKind parse_kind(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "helmholtz" || s == "h") return PencilKind::Helmholtz;
  if (s == "schrodinger" || s == "schroedinger" || s == "s") return PencilKind::Schrodinger;
  throw Error(ErrorCode::InvalidInput, "unknown pencil kind '" + name + "'");
}

void validate(const BoundaryPair& bc) {
  auto ok = [](int m) { return m >= 0 && m <= 3; };
  if (!ok(bc.m1) || !ok(bc.m2) || bc.m1 == bc.m2)
    throw Error(ErrorCode::InvalidInput, "boundary pair needs distinct orders in {0,1,2,3}, got (" +
                                             std::to_string(bc.m1) + "," + std::to_string(bc.m2) + ")");
}

cplx principal_symbol(PencilKind kind, const SymbolPoint& pt) {
  const double q = pt.q_val;
  const double x = pt.xi_sq;
  const cplx l = pt.lambda;
  if (kind == PencilKind::Helmholtz) return q * x * x + l * (1.0 + 2.0 * q) * x + l * l * (1.0 + q);
  const cplx s = x + l;
  return q * s * s;
}

std::array<cplx, 2> condition1_roots(PencilKind kind, double q_val, double xi_sq) {
  if (!(q_val > 0)) throw Error(ErrorCode::InvalidInput, "q must be positive");
  // (1 + q) l^2 + (1 + 2q) xi l + q xi^2 = ((1 + q) l + q xi)(l + xi)
  if (kind == PencilKind::Helmholtz) return {cplx(-xi_sq), cplx(-q_val / (1.0 + q_val) * xi_sq)};
  return {cplx(-xi_sq), cplx(-xi_sq)};
}

namespace {

// Additive recurrence on the plastic-number lattice; the seed only shifts it.
struct Kronecker3 {
  std::array<double, 3> alpha{};
  std::array<double, 3> shift{};

  explicit Kronecker3(std::uint64_t seed) {
    const double g = 1.2207440846057594;
    alpha = {1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)};
    const std::array<double, 3> mix = {0.6180339887498949, 0.7548776662466927, 0.5698402909980532};
    for (int d = 0; d < 3; ++d) {
      const double s = 0.5 + static_cast<double>(seed % 1000003ULL) * mix[d];
      shift[d] = s - std::floor(s);
    }
  }

  std::array<double, 3> operator()(std::size_t i) const {
    std::array<double, 3> u{};
    for (int d = 0; d < 3; ++d) {
      const double v = shift[d] + static_cast<double>(i) * alpha[d];
      u[d] = v - std::floor(v);
    }
    return u;
  }
};

struct Sweep {
  double q_min, q_max;
  Cone cone;

  SymbolPoint point(const std::array<double, 3>& u) const {
    SymbolPoint p;
    p.q_val = q_min + (q_max - q_min) * u[0];
    p.xi_sq = u[1];
    const double arg = cone.arg_min + (cone.arg_max - cone.arg_min) * u[2];
    p.lambda = std::polar(1.0 - u[1], arg);
    return p;
  }
};

void check_sweep_input(double q_min, double q_max, const Cone& cone, int samples) {
  if (!(q_min > 0) || q_max < q_min) throw Error(ErrorCode::InvalidInput, "q range must satisfy 0 < q_min <= q_max");
  if (cone.arg_min > cone.arg_max || cone.arg_min < -M_PI || cone.arg_max > M_PI)
    throw Error(ErrorCode::InvalidInput, "cone angles must satisfy -pi <= arg_min <= arg_max <= pi");
  if (samples < 1) throw Error(ErrorCode::InvalidInput, "samples must be positive");
}

template <class F>
EllipticityReport sweep(const Sweep& sw, int samples, std::uint64_t seed, double tolerance, F&& modulus,
                        bool polish) {
  Kronecker3 seq(seed);
  std::vector<std::array<double, 3>> pts(static_cast<std::size_t>(samples));
  std::vector<double> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    pts[i] = seq(i);
    vals[i] = modulus(sw.point(pts[i]));
  });

  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });

  std::array<double, 3> best = pts[order[0]];
  double best_val = vals[order[0]];

  if (polish) {
    // Compass search from the best few samples, staying inside the sampled box.
    const std::size_t starts = std::min<std::size_t>(8, order.size());
    for (std::size_t s = 0; s < starts; ++s) {
      std::array<double, 3> x = pts[order[s]];
      double fx = vals[order[s]];
      double step = 1.0 / 16.0;
      while (step > 1e-13) {
        bool moved = false;
        for (int d = 0; d < 3 && !moved; ++d) {
          for (double dir : {1.0, -1.0}) {
            std::array<double, 3> y = x;
            y[d] = std::clamp(y[d] + dir * step, 0.0, 1.0);
            if (y[d] == x[d]) continue;
            const double fy = modulus(sw.point(y));
            if (fy < fx) {
              x = y;
              fx = fy;
              moved = true;
              break;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      if (fx < best_val) {
        best_val = fx;
        best = x;
      }
    }
  }

  EllipticityReport rep;
  rep.min_modulus = best_val;
  rep.witness = sw.point(best);
  rep.tolerance = tolerance;
  rep.samples = samples;
  rep.passed = best_val > tolerance;
  return rep;
}

}  // namespace

EllipticityReport check_condition1(PencilKind kind, double q_min, double q_max, const Cone& cone, int samples,
                                   std::uint64_t seed, double tolerance) {
  check_sweep_input(q_min, q_max, cone, samples);
  Sweep sw{q_min, q_max, cone};
  return sweep(sw, samples, seed, tolerance,
               [kind](const SymbolPoint& p) { return std::abs(principal_symbol(kind, p)); }, true);
}

CharacteristicRoots characteristic_roots(PencilKind kind, double q_val, double xi_prime_sq, cplx lambda) {
  if (!(q_val > 0)) throw Error(ErrorCode::InvalidInput, "q must be positive");
  if (xi_prime_sq < 0) throw Error(ErrorCode::InvalidInput, "xi_prime_sq must be nonnegative");
  // std::sqrt uses the principal branch, so Re >= 0.
  const cplx r1 = std::sqrt(lambda + xi_prime_sq);
  const cplx r3 = kind == PencilKind::Helmholtz ? std::sqrt(lambda * (1.0 + 1.0 / q_val) + xi_prime_sq) : r1;
  constexpr double tol = 1e-10;
  if (std::abs(r1.real()) < tol || std::abs(r3.real()) < tol)
    throw Error(ErrorCode::Degenerate, "characteristic root on the imaginary axis");
  return CharacteristicRoots{{r1, -r1, r3, -r3}};
}

namespace {

// d^m/dt^m of t^k e^{rt} at t = 0, for k in {0, 1}.
cplx trace_exp(int m, cplx r) { return std::pow(r, m); }
cplx trace_texp(int m, cplx r) { return m == 0 ? cplx(0.0) : static_cast<double>(m) * std::pow(r, m - 1); }

cplx confluent_det(int m1, int m2, cplx r) {
  return trace_exp(m1, r) * trace_texp(m2, r) - trace_exp(m2, r) * trace_texp(m1, r);
}

}  // namespace

cplx lopatinsky_determinant(PencilKind kind, const BoundaryPair& bc, double q_val, double xi_prime_sq, cplx lambda) {
  validate(bc);
  if (xi_prime_sq == 0.0 && lambda == cplx(0.0))
    throw Error(ErrorCode::InvalidInput, "|xi'| + |lambda| must be nonzero");
  if (lambda == cplx(0.0)) return confluent_det(bc.m1, bc.m2, cplx(-std::sqrt(xi_prime_sq)));
  const CharacteristicRoots cr = characteristic_roots(kind, q_val, xi_prime_sq, lambda);
  const cplx r2 = cr.r[1];
  const cplx r4 = cr.r[3];
  if (kind == PencilKind::Schrodinger) return confluent_det(bc.m1, bc.m2, r2);
  return std::pow(r2, bc.m1) * std::pow(r4, bc.m2) - std::pow(r2, bc.m2) * std::pow(r4, bc.m1);
}

EllipticityReport check_condition2(PencilKind kind, const BoundaryPair& bc, double q_min, double q_max,
                                   const Cone& cone, int samples, std::uint64_t seed, double tolerance) {
  validate(bc);
  check_sweep_input(q_min, q_max, cone, samples);
  Sweep sw{q_min, q_max, cone};
  auto modulus = [&](const SymbolPoint& p) {
    if (p.xi_sq == 0.0 && p.lambda == cplx(0.0)) return std::numeric_limits<double>::infinity();
    try {
      const cplx d = lopatinsky_determinant(kind, bc, p.q_val, p.xi_sq, p.lambda);
      const bool confluent = kind == PencilKind::Schrodinger || p.lambda == cplx(0.0);
      const int degree = bc.m1 + bc.m2 - (confluent ? 1 : 0);
      const double rho = std::sqrt(p.xi_sq + std::abs(p.lambda));
      return std::abs(d) / std::pow(rho, degree);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Degenerate) return 0.0;
      throw;
    }
  };
  // No local polish here: the distinct-root determinant tends to zero as
  // lambda -> 0 along the normalized set, so the sweep minimum is what is reported.
  return sweep(sw, samples, seed, tolerance, modulus, false);
}

}  // namespace itep
