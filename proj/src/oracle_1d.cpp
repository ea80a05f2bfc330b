#include "itep/oracle_1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

namespace itep {

namespace {

// cosh(sqrt(mu) x), sinh(sqrt(mu) x)/sqrt(mu) and their mu-derivatives. All four
// are entire in mu, so the basis has no branch cut.
struct Entire {
  cplx c, s, dc, ds;
};

Entire entire_at(cplx mu, double x) {
  Entire e;
  const double x2 = x * x;
  if (std::abs(mu) * x2 < 1.0) {
    // Series: c = sum mu^k x^2k/(2k)!, s = sum mu^k x^(2k+1)/(2k+1)!.
    cplx c = 0.0, s = 0.0, ds = 0.0;
    cplx mk = 1.0;        // mu^k
    cplx mk1 = 0.0;       // mu^(k-1)
    double fc = 1.0;      // x^2k/(2k)!
    double fs = x;        // x^(2k+1)/(2k+1)!
    for (int k = 0; k < 30; ++k) {
      c += mk * fc;
      s += mk * fs;
      if (k >= 1) ds += static_cast<double>(k) * mk1 * fs;
      mk1 = mk;
      mk *= mu;
      fc *= x2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
      fs *= x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    e.c = c;
    e.s = s;
    e.ds = ds;
  } else {
    const cplx r = std::sqrt(mu);
    e.c = std::cosh(r * x);
    e.s = std::sinh(r * x) / r;
    e.ds = (x * e.c - e.s) / (2.0 * mu);
  }
  e.dc = 0.5 * x * e.s;
  return e;
}

// m-th x-derivative of c and s (values) and of their mu-derivatives.
struct Traces {
  cplx c, s, dc, ds;
};

Traces traces(cplx mu, double x, int m) {
  const Entire e = entire_at(mu, x);
  switch (m) {
    case 0:
      return {e.c, e.s, e.dc, e.ds};
    case 1:
      return {mu * e.s, e.c, e.s + mu * e.ds, e.dc};
    case 2:
      return {mu * e.c, mu * e.s, e.c + mu * e.dc, e.s + mu * e.ds};
    default:
      return {mu * mu * e.s, mu * e.c, 2.0 * mu * e.s + mu * mu * e.ds, e.c + mu * e.dc};
  }
}

cplx mu3_of(const CharacteristicFunction& cf, cplx lambda) {
  return cf.kind == PencilKind::Helmholtz ? lambda * (1.0 + 1.0 / cf.q) : lambda - 1.0 / cf.q;
}

double growth_rate(const CharacteristicFunction& cf, cplx lambda) {
  return std::max(std::sqrt(lambda).real(), std::sqrt(mu3_of(cf, lambda)).real());
}

cplx det_scaled(const CharacteristicFunction& cf, cplx lambda, DetBranch branch, double rho) {
  const cplx mu1 = lambda;
  const cplx mu3 = mu3_of(cf, lambda);
  bool confluent = branch == DetBranch::Confluent;
  if (branch == DetBranch::Auto) {
    const double gap = std::abs(std::sqrt(mu3) - std::sqrt(mu1));
    confluent = gap < 1e-6 * std::sqrt(1.0 + std::abs(lambda));
  }
  const cplx mid = 0.5 * (mu1 + mu3);
  const int orders[2] = {cf.bc.m1, cf.bc.m2};
  const double xs[2] = {0.0, cf.L};
  const double scale = std::exp(-rho * cf.L);
  Eigen::Matrix4cd M;
  for (int side = 0; side < 2; ++side)
    for (int k = 0; k < 2; ++k) {
      const int row = 2 * side + k;
      const Traces t1 = traces(mu1, xs[side], orders[k]);
      cplx c3, s3;
      if (confluent) {
        const Traces tm = traces(mid, xs[side], orders[k]);
        c3 = tm.dc;
        s3 = tm.ds;
      } else {
        const Traces t3 = traces(mu3, xs[side], orders[k]);
        c3 = (t3.c - t1.c) / (mu3 - mu1);
        s3 = (t3.s - t1.s) / (mu3 - mu1);
      }
      M(row, 0) = t1.c;
      M(row, 1) = t1.s;
      M(row, 2) = c3;
      M(row, 3) = s3;
      if (side == 1) M.row(row) *= scale;
    }
  return M.determinant();
}

constexpr double kTwoPi = 2.0 * M_PI;

struct Winding {
  bool ok = false;
  int value = 0;
};

struct Sample {
  cplx z, f;
  double reach;  // |f / f'|, a local estimate of the distance to the nearest zero
};

// h is tied to the local sample spacing so the estimate stays meaningful on tiny rectangles.
Sample sample_at(const CharacteristicFunction& cf, cplx z, double spacing) {
  const double rho = growth_rate(cf, z);
  const double h = std::min(1e-6 * std::max(1.0, std::abs(z)), 1e-3 * spacing);
  const cplx f = det_scaled(cf, z, DetBranch::Auto, rho);
  const cplx fp = (det_scaled(cf, z + h, DetBranch::Auto, rho) - det_scaled(cf, z - h, DetBranch::Auto, rho)) / (2.0 * h);
  const double reach = std::abs(fp) > 0 ? std::abs(f) / std::abs(fp) : std::numeric_limits<double>::infinity();
  return {z, f, reach};
}

// Argument increment along [a, b], halving until each piece turns by less than
// pi/4 and is short compared to the local distance to a zero.
bool arg_increment(const CharacteristicFunction& cf, const Sample& a, const Sample& b, int depth, double& acc,
                   long& budget) {
  if (a.f == 0.0 || b.f == 0.0 || !std::isfinite(std::abs(a.f)) || !std::isfinite(std::abs(b.f))) return false;
  const double d = std::arg(b.f / a.f);
  const double len = std::abs(b.z - a.z);
  if (std::abs(d) < M_PI / 4 && len <= 0.5 * std::min(a.reach, b.reach)) {
    acc += d;
    return true;
  }
  if (depth >= 24 || --budget < 0) return false;
  const Sample m = sample_at(cf, 0.5 * (a.z + b.z), 0.5 * len);
  return arg_increment(cf, a, m, depth + 1, acc, budget) && arg_increment(cf, m, b, depth + 1, acc, budget);
}

Winding try_winding_once(const CharacteristicFunction& cf, const SearchRect& r, int n) {
  std::vector<cplx> pts;
  pts.reserve(static_cast<std::size_t>(4 * n));
  const cplx z0(r.re_min, r.im_min), z1(r.re_max, r.im_min), z2(r.re_max, r.im_max), z3(r.re_min, r.im_max);
  const cplx corners[5] = {z0, z1, z2, z3, z0};
  for (int side = 0; side < 4; ++side)
    for (int j = 0; j < n; ++j) pts.push_back(corners[side] + (corners[side + 1] - corners[side]) * (double(j) / n));
  std::vector<Sample> f;
  f.reserve(pts.size());
  const double spacing = std::max(r.re_max - r.re_min, r.im_max - r.im_min) / n;
  for (const auto& z : pts) f.push_back(sample_at(cf, z, spacing));
  double total = 0.0;
  long budget = 50000;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!arg_increment(cf, f[i], f[(i + 1) % f.size()], 0, total, budget)) return {};
  const double w = total / kTwoPi;
  const double rw = std::round(w);
  if (std::abs(w - rw) > 0.05) return {};
  return {true, static_cast<int>(rw)};
}

Winding try_winding(const CharacteristicFunction& cf, const SearchRect& r, int n, int n_max = 512) {
  for (int m = n; m <= n_max; m *= 2) {
    const Winding w = try_winding_once(cf, r, m);
    if (w.ok) return w;
  }
  return {};
}

int winding_or_throw(const CharacteristicFunction& cf, const SearchRect& r, int n) {
  const Winding w = try_winding(cf, r, n, 1024);
  if (w.ok) return w.value;
  throw Error(ErrorCode::Convergence, "winding number inconsistent on the rectangle boundary");
}

bool inside(const SearchRect& r, cplx z, double slack) {
  return z.real() >= r.re_min - slack && z.real() <= r.re_max + slack && z.imag() >= r.im_min - slack &&
         z.imag() <= r.im_max + slack;
}

// Newton with multiplicity m; residual is the last step relative to max(1, |lambda|).
// A root of multiplicity m is only determined to about eps^(1/m), so multiple
// roots stop at the noise floor and use a looser acceptance threshold.
bool newton(const CharacteristicFunction& cf, cplx& lam, int m, double& residual) {
  const double accept = m == 1 ? 1e-10 : 1e-6;
  residual = 1.0;
  cplx best = lam;
  double best_res = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < 80; ++it) {
    const double rho = growth_rate(cf, lam);
    const double h = 1e-5 * std::max(std::abs(lam), 1e-12);
    const cplx f = det_scaled(cf, lam, DetBranch::Auto, rho);
    if (f == 0.0) {
      best = lam;
      best_res = 0.0;
      break;
    }
    const cplx fp = (det_scaled(cf, lam + h, DetBranch::Auto, rho) - det_scaled(cf, lam - h, DetBranch::Auto, rho)) / (2.0 * h);
    if (fp == 0.0 || !std::isfinite(std::abs(fp))) break;
    const cplx step = static_cast<double>(m) * f / fp;
    const cplx next = lam - step;
    const double res = std::abs(step) / std::max(1.0, std::abs(next));
    if (!std::isfinite(res)) break;
    lam = next;
    if (res < best_res) {
      best_res = res;
      best = lam;
      stalled = 0;
    } else if (++stalled >= 3) {
      break;
    }
    if (res <= 1e-14) break;
  }
  lam = best;
  residual = best_res;
  return best_res <= accept;
}

// Centroid of the w roots near lam. With g = f / (z - lam)^w zero-free on the disc,
//   mean - lam = -(1 / 2 pi i w) int Log g dz,
// and Log g is periodic on the circle, so the trapezoid rule needs no derivatives.
// The radius is the largest tried whose disc, and the disc of twice the radius,
// hold exactly the w roots: f is then far above its rounding floor.
bool circle_log(const CharacteristicFunction& cf, cplx c, double rad, int w, int M, double rho, cplx& moment) {
  cplx acc = 0.0, prev = 0.0;
  double phase = 0.0;
  for (int k = 0; k <= M; ++k) {
    const cplx d = rad * std::polar(1.0, kTwoPi * (k + 0.5) / M);
    const cplx f = det_scaled(cf, c + d, DetBranch::Auto, rho);
    if (f == 0.0 || !std::isfinite(std::abs(f))) return false;
    const cplx g = f / std::pow(d, w);
    if (k > 0) {
      const double step = std::arg(g / prev);
      if (std::abs(step) > 0.5 * M_PI) return false;
      phase += step;
    }
    prev = g;
    if (k < M) acc += d * cplx(std::log(std::abs(g)), phase);
  }
  if (std::abs(phase) > 0.5 * M_PI) return false;  // other roots inside
  moment = acc / static_cast<double>(M);
  return true;
}

void refine_cluster(const CharacteristicFunction& cf, const SearchRect& r, int w, cplx& lam, double& res) {
  const double room = std::min({lam.real() - r.re_min, r.re_max - lam.real(), lam.imag() - r.im_min, r.im_max - lam.imag()});
  const int M = 64;
  const double rho = growth_rate(cf, lam);
  for (double rel = 1e-1; rel >= 0.99e-4; rel /= 4.0) {
    const double rad = std::min(rel * (1.0 + std::abs(lam)), 0.5 * room);
    if (!(rad > 0)) return;
    cplx moment, outer;
    if (!circle_log(cf, lam, 2.0 * rad, w, 2 * M, rho, outer)) continue;
    if (!circle_log(cf, lam, rad, w, M, rho, moment)) continue;
    const cplx shift = -moment / static_cast<double>(w);
    if (!(std::abs(shift) < 0.1 * rad)) continue;
    lam += shift;
    res = std::abs(shift) / std::max(1.0, std::abs(lam));
    return;
  }
}

void subdivide(const CharacteristicFunction& cf, const SearchRect& r, int w, int depth, std::vector<OracleRoot>& out) {
  if (w == 0) return;
  if (w < 0) throw Error(ErrorCode::Convergence, "negative winding number");
  if (depth > 200) throw Error(ErrorCode::Convergence, "root subdivision exceeded the depth limit");
  const double wdt = r.re_max - r.re_min, hgt = r.im_max - r.im_min;
  const cplx c(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max));
  const double diam = std::hypot(wdt, hgt);
  const double tiny = 1e-7 * (1.0 + std::abs(c));

  {
    // A converged multiplicity-w Newton step is accepted for w > 1 only when a
    // small box around the limit carries the whole winding number.
    cplx lam = c;
    double res = 1.0;
    const bool ok = newton(cf, lam, w, res);
    if (ok && inside(r, lam, 1e-9 * (1.0 + std::abs(lam)))) {
      bool accept = w == 1;
      // Smallest box that resolves; the determinant loses relative accuracy very close to a multiple root.
      for (double rel = 1e-7; !accept && rel <= 1.01e-4; rel *= 10.0) {
        const double e = rel * (1.0 + std::abs(lam));
        if (e > 0.25 * diam) break;
        const SearchRect box{lam.real() - e, lam.real() + 1.01 * e, lam.imag() - 0.99 * e, lam.imag() + e};
        const Winding wb = try_winding(cf, box, 32, 128);
        accept = wb.ok && wb.value == w;
      }
      if (accept) {
        // Repeat while the centroid correction keeps shrinking.
        for (int pass = 0; w > 1 && pass < 4; ++pass) {
          cplx next = lam;
          double next_res = res;
          refine_cluster(cf, r, w, next, next_res);
          if (pass > 0 && !(next_res < 0.5 * res)) break;
          lam = next;
          res = next_res;
        }
        out.push_back({lam, w, res});
        return;
      }
    }
    if (diam < tiny) {
      out.push_back({c, w, std::max(res, diam / std::max(1.0, std::abs(c)))});
      return;
    }
  }

  static const double fractions[] = {0.5, 0.4731, 0.5269, 0.4417, 0.5583, 0.4089, 0.5911};
  for (double t : fractions) {
    SearchRect a = r, b = r;
    if (wdt >= hgt) {
      const double cut = r.re_min + t * wdt;
      a.re_max = cut;
      b.re_min = cut;
    } else {
      const double cut = r.im_min + t * hgt;
      a.im_max = cut;
      b.im_min = cut;
    }
    const Winding wa = try_winding(cf, a, 128);
    const Winding wb = try_winding(cf, b, 128);
    if (!wa.ok || !wb.ok || wa.value + wb.value != w || wa.value < 0 || wb.value < 0) continue;
    subdivide(cf, a, wa.value, depth + 1, out);
    subdivide(cf, b, wb.value, depth + 1, out);
    return;
  }
  throw Error(ErrorCode::Convergence, "could not split the rectangle consistently near " + std::to_string(c.real()) +
                                          (c.imag() < 0 ? "" : "+") + std::to_string(c.imag()) + "i, winding " +
                                          std::to_string(w));
}

}  // namespace

void validate(const CharacteristicFunction& cf) {
  if (!(cf.q > 0) || !std::isfinite(cf.q)) throw Error(ErrorCode::InvalidInput, "q must be positive");
  if (!(cf.L > 0) || !std::isfinite(cf.L)) throw Error(ErrorCode::InvalidInput, "L must be positive");
  validate(cf.bc);
}

cplx char_det(const CharacteristicFunction& cf, cplx lambda, DetBranch branch) {
  validate(cf);
  const double rho = growth_rate(cf, lambda);
  if (rho * cf.L > 600.0) throw Error(ErrorCode::InvalidInput, "|lambda| too large for the determinant");
  return det_scaled(cf, lambda, branch, rho);
}

int winding_number(const CharacteristicFunction& cf, const SearchRect& rect, int points_per_side) {
  validate(cf);
  if (!(rect.re_max > rect.re_min) || !(rect.im_max > rect.im_min))
    throw Error(ErrorCode::InvalidInput, "rectangle must have positive width and height");
  if (points_per_side < 4) throw Error(ErrorCode::InvalidInput, "points_per_side must be at least 4");
  return winding_or_throw(cf, rect, points_per_side);
}

RootSearch search_roots(const CharacteristicFunction& cf, SearchRect rect, int max_roots) {
  validate(cf);
  if (!(rect.re_max > rect.re_min) || !(rect.im_max > rect.im_min))
    throw Error(ErrorCode::InvalidInput, "rectangle must have positive width and height");
  const double span = std::max(rect.re_max - rect.re_min, rect.im_max - rect.im_min);
  RootSearch rs;
  bool found = false;
  for (int attempt = 0; attempt < 12 && !found; ++attempt) {
    const double d = attempt * 1.37e-4 * span;
    SearchRect r{rect.re_min - d, rect.re_max + 0.9 * d, rect.im_min - 1.1 * d, rect.im_max + d};
    const Winding w = try_winding(cf, r, 128);
    if (w.ok) {
      rs.rect = r;
      rs.winding = w.value;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::Convergence, "no nudged rectangle gave a consistent winding number");
  if (rs.winding > max_roots) throw Error(ErrorCode::InvalidInput, "rectangle holds more than max_roots roots");
  subdivide(cf, rs.rect, rs.winding, 0, rs.roots);
  std::sort(rs.roots.begin(), rs.roots.end(), [](const OracleRoot& a, const OracleRoot& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  return rs;
}

std::vector<OracleRoot> find_roots(const CharacteristicFunction& cf, SearchRect rect, int max_roots) {
  return search_roots(cf, rect, max_roots).roots;
}

}  // namespace itep
