#include "itep/resolvent_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace itep {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double top_singular_value(const CMat& M) { return Eigen::BDCSVD<CMat>(M).singularValues()(0); }

Eigen::PartialPivLU<CMat> factor_at(const DiscretePencil& p, cplx lambda, const char* what) {
  Eigen::PartialPivLU<CMat> lu(p.factored_at(lambda));
  if (!(lu_rcond(lu) > 1e-15)) throw Error(ErrorCode::Singular, what);
  return lu;
}

// W^1/2 T^-1 W^-1/2 from a factorization of F(lambda).
CMat weighted_inverse(const DiscretePencil& p, const Eigen::PartialPivLU<CMat>& lu) {
  const RVec sw = p.sqrt_weights();
  const CMat rhs = sw.cwiseInverse().cast<cplx>().asDiagonal();
  CMat X = lu.solve(rhs);
  if (p.factored) X = p.S0 * X;
  return sw.cast<cplx>().asDiagonal() * X;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pencil_scale(const DiscretePencil& p, cplx l0) {
  const double* fn = p.cache->f_norms;
  const double a = std::abs(l0);
  return (fn[0] + a * fn[1] + a * a * fn[2]) + (fn[1] + 2.0 * a * fn[2]) + fn[2];
}

}  // namespace

double resolvent_norm(const DiscretePencil& pencil, cplx lambda) {
  const auto lu = factor_at(pencil, lambda, "T(lambda) is singular");
  return top_singular_value(weighted_inverse(pencil, lu));
}

std::vector<double> log_radii(double r_min, double r_max, int n) {
  if (!(r_min > 0) || !(r_max > r_min) || n < 2) throw Error(ErrorCode::InvalidInput, "need 0 < r_min < r_max and n >= 2");
  std::vector<double> r(static_cast<std::size_t>(n));
  const double a = std::log(r_min), b = std::log(r_max);
  for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  r.front() = r_min;
  r.back() = r_max;
  return r;
}

RayScan ray_scan(const DiscretePencil& pencil, cplx direction, const std::vector<double>& radii,
                 const std::vector<cplx>& poles) {
  if (std::abs(direction) == 0.0) throw Error(ErrorCode::InvalidInput, "direction must be nonzero");
  const cplx d = direction / std::abs(direction);
  if (std::abs(d + 1.0) < 1e-12) throw Error(ErrorCode::InvalidInput, "ray points along the negative real axis");
  if (radii.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least two radii");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw Error(ErrorCode::InvalidInput, "radii must be positive and strictly increasing");
  for (const auto& z : poles) {
    const double t = std::clamp((std::conj(d) * z).real(), radii.front(), radii.back());
    if (std::abs(z - t * d) <= 1e-9 * (1.0 + std::abs(z))) throw Error(ErrorCode::Singular, "pole on ray");
  }
  RayScan out;
  out.direction = d;
  out.radii = radii;
  out.norms.assign(radii.size(), 0.0);
  parallel_for(radii.size(), [&](std::size_t i) {
    try {
      out.norms[i] = resolvent_norm(pencil, radii[i] * d);
    } catch (const Error&) {
      throw Error(ErrorCode::Singular, "pole on ray");
    }
  });
  std::vector<double> x, y;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < radii.back() / 10.0 * (1.0 - 1e-12)) continue;
    x.push_back(std::log(radii[i]));
    y.push_back(std::log(out.norms[i]));
  }
  if (x.size() < 2) {
    x.clear();
    y.clear();
    for (std::size_t i = 0; i < radii.size(); ++i) {
      x.push_back(std::log(radii[i]));
      y.push_back(std::log(out.norms[i]));
    }
  }
  out.fitted_slope = lsq_slope(x, y);
  return out;
}

std::vector<BandDistance> pole_band_distances(const std::vector<cplx>& poles) {
  std::vector<BandDistance> out;
  int kmin = std::numeric_limits<int>::max(), kmax = std::numeric_limits<int>::min();
  for (const auto& z : poles) {
    if (std::abs(z) < 1.0) continue;
    const int k = static_cast<int>(std::floor(std::log2(std::abs(z))));
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
  }
  if (kmin > kmax) return out;
  for (int k = kmin; k <= kmax; ++k) {
    BandDistance b;
    b.r_low = std::ldexp(1.0, k);
    b.r_high = std::ldexp(1.0, k + 1);
    for (const auto& z : poles) {
      const double a = std::abs(z);
      if (a < b.r_low || a >= b.r_high) continue;
      ++b.count;
      b.max_distance = std::max(b.max_distance, z.real() <= 0 ? std::abs(z.imag()) : a);
    }
    out.push_back(b);
  }
  return out;
}

BlockInverseReport companion_block_inverse_check(const DiscretePencil& pencil, cplx lambda) {
  const Eigen::Index n = pencil.dim();
  const auto lu = factor_at(pencil, lambda, "T(lambda) is singular");
  CMat Ti = lu.inverse();
  if (pencil.factored) Ti = pencil.S0 * Ti;
  const CMat& A0 = pencil.A0;
  const CMat& A1 = pencil.A1;
  const CMat& A2 = pencil.A2;

  Eigen::PartialPivLU<CMat> lu2(A2);
  if (!(lu_rcond(lu2) > 1e-14)) throw Error(ErrorCode::Singular, "A2 is singular");
  CMat Am(2 * n, 2 * n);
  Am.topLeftCorner(n, n) = -lambda * CMat::Identity(n, n);
  Am.topRightCorner(n, n) = lu2.inverse();
  Am.bottomLeftCorner(n, n) = -A0;
  Am.bottomRightCorner(n, n) = -A1 * Am.topRightCorner(n, n) - lambda * CMat::Identity(n, n);

  const CMat E1 = Ti * (A1 + lambda * A2);
  CMat B(2 * n, 2 * n);
  B.topLeftCorner(n, n) = -E1;
  B.topRightCorner(n, n) = -Ti;
  B.bottomLeftCorner(n, n) = A2 - lambda * (A2 * E1);
  B.bottomRightCorner(n, n) = -lambda * (A2 * Ti);

  const CMat E = Am * B - CMat::Identity(2 * n, 2 * n);
  const RMat D = Am.cwiseAbs() * B.cwiseAbs();
  BlockInverseReport rep;
  for (Eigen::Index j = 0; j < E.cols(); ++j)
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
      const double e = std::abs(E(i, j));
      const double den = D(i, j) > 0 ? D(i, j) : 1.0;
      rep.max_rel_error = std::max(rep.max_rel_error, e / den);
    }
  rep.norm_T_inv = top_singular_value(weighted_inverse(pencil, lu));
  rep.norm_companion_inv = companion_norm(pencil, shifted_companion_inverse(pencil, lambda));
  rep.inequality_holds = rep.norm_T_inv <= rep.norm_companion_inv * (1.0 + 1e-12);
  return rep;
}

double resolvent_identity_check(const CompanionOperator& comp, cplx lambda, cplx lambda_prime) {
  if (!comp.pencil) throw Error(ErrorCode::InvalidInput, "companion operator has no pencil");
  const DiscretePencil& p = *comp.pencil;
  const CMat L = shifted_companion_inverse(p, lambda);
  const CMat K = shifted_companion_inverse(p, lambda_prime);
  const Eigen::Index m = K.rows();
  Eigen::PartialPivLU<CMat> lu(CMat::Identity(m, m) - (lambda - lambda_prime) * K);
  const CMat R = K * lu.inverse();
  return (L - R).norm() / L.norm();
}

WeierstrassProduct make_weierstrass(const std::vector<cplx>& zeros, cplx lambda_prime, double p) {
  if (!(p > 0)) throw Error(ErrorCode::InvalidInput, "p must be positive");
  for (const auto& z : zeros)
    if (std::abs(z - lambda_prime) <= 1e-12 * (1.0 + std::abs(lambda_prime)))
      throw Error(ErrorCode::InvalidInput, "lambda' is one of the zeros");
  WeierstrassProduct wp;
  wp.lambda_prime = lambda_prime;
  wp.zeros = zeros;
  wp.p = p;
  wp.k = std::max(1, static_cast<int>(std::ceil(p - 1e-12)));
  return wp;
}

cplx phi_log(const WeierstrassProduct& wp, cplx lambda) {
  cplx acc = 0.0;
  for (const auto& zj : wp.zeros) {
    const cplx z = (lambda - wp.lambda_prime) / (zj - wp.lambda_prime);
    const cplx one_minus = 1.0 - z;
    if (one_minus == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
    acc += std::log(one_minus);
    cplx zp = 1.0;
    for (int m = 1; m < wp.k; ++m) {
      zp *= z;
      acc += zp / static_cast<double>(m);
    }
  }
  return acc;
}

cplx phi_eval(const WeierstrassProduct& wp, cplx lambda) {
  const cplx l = phi_log(wp, lambda);
  if (std::isinf(l.real())) return 0.0;
  return std::exp(l);
}

CarlemanReport carleman_check(const CompanionOperator& comp, const WeierstrassProduct& wp, double radius,
                              int n_samples) {
  if (!comp.pencil) throw Error(ErrorCode::InvalidInput, "companion operator has no pencil");
  if (!(radius > 0) || n_samples < 4) throw Error(ErrorCode::InvalidInput, "need radius > 0 and n_samples >= 4");
  const DiscretePencil& p = *comp.pencil;
  const cplx lp = wp.lambda_prime;
  const CMat Kh = companion_scaled(p, shifted_companion_inverse(p, lp));
  const Eigen::Index m = Kh.rows();
  const CMat I = CMat::Identity(m, m);

  auto lhs = [&](cplx lambda) {
    const cplx ph = phi_eval(wp, lambda);
    Eigen::PartialPivLU<CMat> lu(I - (lambda - lp) * Kh);
    return std::abs(ph) * top_singular_value(lu.inverse());
  };

  std::vector<cplx> pts;
  for (int j = 0; j < n_samples; ++j) pts.push_back(lp + radius * std::polar(1.0, kTwoPi * j / n_samples));
  std::vector<cplx> probes;
  {
    std::vector<cplx> inside;
    for (const auto& z : wp.zeros) {
      if (std::abs(z - lp) >= radius) continue;
      bool seen = false;
      for (const auto& w : inside) seen = seen || std::abs(w - z) <= 1e-9 * (1.0 + std::abs(z));
      if (!seen) inside.push_back(z);
    }
    for (const auto& z : inside)
      for (int j = 0; j < 4; ++j) probes.push_back(z + 1e-3 * std::polar(1.0, kTwoPi * (j + 0.5) / 4));
  }
  std::vector<double> vals(pts.size() + probes.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = lhs(i < pts.size() ? pts[i] : probes[i - pts.size()]); });

  CarlemanReport rep;
  const std::vector<double> circle(vals.begin(), vals.begin() + static_cast<long>(pts.size()));
  rep.max_lhs = *std::max_element(circle.begin(), circle.end());
  rep.median_lhs = median(circle);
  rep.near_pole_samples = static_cast<int>(probes.size());
  for (std::size_t i = pts.size(); i < vals.size(); ++i) rep.near_pole_max = std::max(rep.near_pole_max, vals[i]);
  const RVec s = Eigen::BDCSVD<CMat>(Kh).singularValues();
  for (Eigen::Index i = s.size(); i-- > 0;) rep.schatten_p += std::pow(s(i), wp.p);
  const double expo = std::pow(radius, wp.p) * rep.schatten_p;
  rep.bound_rhs = std::exp(expo);
  rep.measured_constant = expo > 0 ? std::log(std::max(rep.max_lhs, rep.near_pole_max)) / expo : 0.0;
  return rep;
}

GrowthFit carleman_growth(const CompanionOperator& comp, const WeierstrassProduct& wp,
                          const std::vector<double>& radii, int n_samples) {
  GrowthFit g;
  g.radii = radii;
  std::vector<double> x, y;
  for (double r : radii) {
    const CarlemanReport rep = carleman_check(comp, wp, r, n_samples);
    g.max_values.push_back(rep.max_lhs);
    const double lm = std::log(rep.max_lhs);
    if (lm > 0) {
      x.push_back(std::log(r));
      y.push_back(std::log(lm));
    }
  }
  if (x.size() < 2) {
    g.bounded = true;
    return g;
  }
  g.exponent = lsq_slope(x, y);
  return g;
}

CircleGrowthReport circle_growth_scan(const DiscretePencil& pencil, const std::vector<double>& band_starts,
                                      const std::vector<cplx>& poles, double p, double eps, int n_samples,
                                      double gap_fraction) {
  if (n_samples < 4) throw Error(ErrorCode::InvalidInput, "n_samples must be at least 4");
  if (!(eps > 0) || !(gap_fraction > 0)) throw Error(ErrorCode::InvalidInput, "eps and gap_fraction must be positive");
  CircleGrowthReport rep;
  rep.p = p;
  rep.eps = eps;
  for (double b : band_starts) {
    if (!(b > 0)) throw Error(ErrorCode::InvalidInput, "band starts must be positive");
    double best_r = b, best_d = -1.0;
    for (int k = 0; k < 32; ++k) {
      const double r = b * (1.0 + k / 32.0);
      double d = std::numeric_limits<double>::infinity();
      for (const auto& z : poles) d = std::min(d, std::abs(std::abs(z) - r));
      if (d > best_d) {
        best_d = d;
        best_r = r;
      }
    }
    if (best_d < gap_fraction * best_r)
      throw Error(ErrorCode::InvalidInput, "no admissible radius in band starting at " + std::to_string(b));
    std::vector<double> lg(static_cast<std::size_t>(n_samples));
    parallel_for(lg.size(), [&](std::size_t j) {
      lg[j] = std::log(resolvent_norm(pencil, best_r * std::polar(1.0, kTwoPi * (j + 0.5) / n_samples)));
    });
    rep.circles.push_back({best_r, *std::max_element(lg.begin(), lg.end()), best_d});
  }
  std::vector<double> x, y;
  for (const auto& c : rep.circles)
    if (c.max_log_norm > 0) {
      x.push_back(std::log(c.radius));
      y.push_back(std::log(c.max_log_norm));
    }
  if (x.size() < 2)
    rep.bounded = true;
  else
    rep.exponent = lsq_slope(x, y);
  rep.passed = rep.bounded || rep.exponent <= p + eps;
  return rep;
}

const CMat& LaurentData::coefficient(int n) const {
  for (std::size_t i = 0; i < indices.size(); ++i)
    if (indices[i] == n) return C[i];
  throw Error(ErrorCode::InvalidInput, "coefficient index out of range");
}

LaurentData laurent_coefficients(const DiscretePencil& pencil, cplx lambda0, double radius, int n_coeffs, int n_quad,
                                 const std::vector<cplx>& eigenvalues) {
  if (!(radius > 0)) throw Error(ErrorCode::InvalidInput, "radius must be positive");
  if (n_coeffs < 1) throw Error(ErrorCode::InvalidInput, "n_coeffs must be positive");
  if (n_quad < 16 || n_quad % 2) throw Error(ErrorCode::InvalidInput, "n_quad must be even and at least 16");
  {
    std::vector<cplx> inside;
    for (const auto& z : eigenvalues) {
      const double d = std::abs(z - lambda0);
      if (std::abs(d - radius) < 1e-3 * radius) throw Error(ErrorCode::Singular, "contour passes near a pole");
      if (d < radius) inside.push_back(z);
    }
    for (std::size_t i = 0; i < inside.size(); ++i)
      for (std::size_t j = i + 1; j < inside.size(); ++j)
        if (std::abs(inside[i] - inside[j]) > 1e-6 * (1.0 + std::max(std::abs(inside[i]), std::abs(inside[j]))))
          throw Error(ErrorCode::InvalidInput, "cluster ambiguity: the contour encloses more than one eigenvalue cluster");
  }

  const Eigen::Index n = pencil.dim();
  std::vector<CMat> inv(static_cast<std::size_t>(n_quad));
  parallel_for(inv.size(), [&](std::size_t k) {
    const cplx lam = lambda0 + radius * std::polar(1.0, kTwoPi * static_cast<double>(k) / n_quad);
    inv[k] = factor_at(pencil, lam, "T is singular on the contour").inverse();
  });

  // G_n = (1/n_quad) sum_k F^-1(lambda_k) (r e^{i theta_k})^-n, full and even-index rules.
  const int total = 2 * n_coeffs;
  std::vector<CMat> full(static_cast<std::size_t>(total), CMat::Zero(n, n));
  std::vector<CMat> half(static_cast<std::size_t>(total), CMat::Zero(n, n));
  for (int k = 0; k < n_quad; ++k) {
    const double th = kTwoPi * k / n_quad;
    for (int t = 0; t < total; ++t) {
      const int idx = t - n_coeffs;
      const cplx w = std::pow(radius, -idx) * std::polar(1.0, -idx * th);
      full[static_cast<std::size_t>(t)] += (w / static_cast<double>(n_quad)) * inv[static_cast<std::size_t>(k)];
      if (k % 2 == 0) half[static_cast<std::size_t>(t)] += (2.0 * w / static_cast<double>(n_quad)) * inv[static_cast<std::size_t>(k)];
    }
  }

  const RVec sw = pencil.sqrt_weights();
  auto nodal = [&](const CMat& G) -> CMat { return pencil.factored ? CMat(pencil.S0 * G) : G; };
  auto wnorm = [&](const CMat& C) {
    return (sw.cast<cplx>().asDiagonal() * C * sw.cwiseInverse().cast<cplx>().asDiagonal()).norm();
  };
  std::vector<double> norms(static_cast<std::size_t>(total));
  LaurentData d;
  d.lambda0 = lambda0;
  d.radius = radius;
  d.n_quad = n_quad;
  for (int t = 0; t < total; ++t) {
    norms[static_cast<std::size_t>(t)] = wnorm(nodal(full[static_cast<std::size_t>(t)]));
    d.max_norm = std::max(d.max_norm, norms[static_cast<std::size_t>(t)]);
  }
  d.noise_floor = 1e-8 * d.max_norm;
  double diff = 0.0;
  for (int t = 0; t < total; ++t)
    diff = std::max(diff, wnorm(nodal(full[static_cast<std::size_t>(t)] - half[static_cast<std::size_t>(t)])));
  d.convergence_error = d.max_norm > 0 ? diff / d.max_norm : 0.0;
  if (d.convergence_error > 1e-6) throw Error(ErrorCode::Convergence, "contour quadrature did not converge");

  for (int m = 1; m <= n_coeffs; ++m)
    if (norms[static_cast<std::size_t>(n_coeffs - m)] > d.noise_floor) d.order = m;
  if (d.order == n_coeffs) throw Error(ErrorCode::Convergence, "pole order reaches n_coeffs; increase n_coeffs");
  for (int idx = -d.order; idx < n_coeffs; ++idx) {
    const auto& G = full[static_cast<std::size_t>(idx + n_coeffs)];
    d.indices.push_back(idx);
    d.G.push_back(G);
    d.C.push_back(nodal(G));
  }
  return d;
}

std::vector<double> laurent_relations(const DiscretePencil& pencil, const LaurentData& data) {
  const cplx l0 = data.lambda0;
  const CMat B[3] = {pencil.factored_at(l0), pencil.F1 + 2.0 * l0 * pencil.F2, pencil.F2};
  double gmax = 0.0;
  for (const auto& G : data.G) gmax = std::max(gmax, G.norm());
  const double scale = pencil_scale(pencil, l0) * gmax;
  std::vector<double> out;
  const int N = data.order;
  for (int k = 0; k < N; ++k) {
    CMat acc = CMat::Zero(pencil.dim(), pencil.dim());
    for (int j = std::max(0, k - 2); j <= k; ++j) acc += B[k - j] * data.G[static_cast<std::size_t>(j)];
    out.push_back(scale > 0 ? acc.norm() / scale : 0.0);
  }
  return out;
}

double laurent_range_angle(const DiscretePencil& pencil, const LaurentData& data, const std::vector<CVec>& vectors) {
  if (data.order == 0) return 0.0;
  if (vectors.empty()) throw Error(ErrorCode::InvalidInput, "no chain vectors given");
  const CVec sw = pencil.sqrt_weights().cast<cplx>();
  const Eigen::Index n = pencil.dim();
  CMat U(n, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) U.col(static_cast<Eigen::Index>(j)) = sw.asDiagonal() * vectors[j];
  Eigen::ColPivHouseholderQR<CMat> qr(U);
  qr.setThreshold(1e-10);
  const CMat Q = qr.householderQ() * CMat::Identity(n, qr.rank());
  double worst = 0.0;
  for (int m = 1; m <= data.order; ++m) {
    const CMat M = sw.asDiagonal() * data.coefficient(-m) * sw.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<CMat> svd(M, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > data.noise_floor) ++r;
    if (r == 0) continue;
    const CMat V = svd.matrixU().leftCols(r);
    const CMat perp = V - Q * (Q.adjoint() * V);
    worst = std::max(worst, top_singular_value(perp));
  }
  return worst;
}

TInfinity t_infinity_estimate(const DiscretePencil& pencil, double radius, int n_samples,
                              const std::vector<cplx>& poles) {
  if (!(radius > 0) || n_samples < 4) throw Error(ErrorCode::InvalidInput, "need radius > 0 and n_samples >= 4");
  std::vector<double> lp(static_cast<std::size_t>(n_samples), 0.0);
  std::vector<char> masked(lp.size(), 0);
  parallel_for(lp.size(), [&](std::size_t j) {
    const cplx lam = radius * std::polar(1.0, kTwoPi * (static_cast<double>(j) + 0.5) / n_samples);
    for (const auto& z : poles)
      if (std::abs(z - lam) < 1e-6 * (1.0 + radius)) {
        masked[j] = 1;
        return;
      }
    try {
      lp[j] = std::max(0.0, std::log(resolvent_norm(pencil, lam)));
    } catch (const Error&) {
      masked[j] = 1;
    }
  });
  TInfinity t;
  int used = 0;
  double acc = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j)
    if (!masked[j]) {
      acc += lp[j];
      ++used;
    }
  t.masked_fraction = 1.0 - static_cast<double>(used) / n_samples;
  if (t.masked_fraction > 0.05) throw Error(ErrorCode::Singular, "too many circle samples sit on poles");
  t.log_plus_mean = acc / used;
  int at_zero = 0;
  for (const auto& z : poles) {
    const double a = std::abs(z);
    if (a <= 1e-12)
      ++at_zero;
    else if (a < radius)
      t.pole_term += std::log(radius / a);
  }
  t.pole_term += at_zero * std::log(radius);
  t.value = t.log_plus_mean + t.pole_term;
  return t;
}

}  // namespace itep
