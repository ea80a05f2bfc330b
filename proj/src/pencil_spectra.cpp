#include "itep/pencil_spectra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "schur.hpp"

namespace itep {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

CMat orthonormal_basis(const CMat& A, double tol) {
  Eigen::ColPivHouseholderQR<CMat> qr(A);
  qr.setThreshold(tol);
  return qr.householderQ() * CMat::Identity(A.rows(), qr.rank());
}

CMat null_space(const CMat& A, double tol) {
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

// Jordan chains of a nearly nilpotent m x m matrix, longest first.
std::vector<std::vector<CVec>> staircase_chains(const CMat& Nil, double tol) {
  const Eigen::Index m = Nil.rows();
  const double scale = std::max(Nil.norm(), tol);
  std::vector<CMat> kernels;  // kernels[j] = ker Nil^{j}, j >= 1; kernels[0] = {0}
  kernels.push_back(CMat::Zero(m, 0));
  CMat power = CMat::Identity(m, m);
  for (Eigen::Index j = 1; j <= m; ++j) {
    power = Nil * power;
    CMat K = null_space(power, tol * std::pow(scale, static_cast<double>(j - 1)));
    if (K.cols() <= kernels.back().cols()) {
      // No growth: remaining directions are numerically generic, close the ladder.
      K = CMat::Identity(m, m);
    }
    kernels.push_back(K);
    if (K.cols() == m) break;
  }
  const std::size_t k = kernels.size() - 1;

  std::vector<std::vector<CVec>> chains;
  std::vector<std::pair<std::size_t, CVec>> tops;  // (level, top vector)
  for (std::size_t level = k; level >= 1; --level) {
    CMat B(m, 0);
    auto append = [&](const CMat& cols) {
      CMat nb(m, B.cols() + cols.cols());
      nb << B, cols;
      B = nb;
    };
    append(kernels[level - 1]);
    for (const auto& [lv, top] : tops) {
      CVec v = top;
      for (std::size_t s = level; s < lv; ++s) v = Nil * v;
      append(v);
    }
    const CMat& K = kernels[level];
    const Eigen::Index want = K.cols() - B.cols();
    if (want > 0) {
      CMat P = K;
      if (B.cols() > 0) {
        const CMat Bq = orthonormal_basis(B, 1e-10);
        P -= Bq * (Bq.adjoint() * K);
      }
      Eigen::JacobiSVD<CMat> svd(P, Eigen::ComputeFullV);
      for (Eigen::Index c = 0; c < want; ++c) {
        CVec top = K * svd.matrixV().col(c);
        tops.emplace_back(level, top / top.norm());
      }
    }
    if (level == 1) break;
  }
  for (const auto& [lv, top] : tops) {
    std::vector<CVec> chain(lv);
    CVec v = top;
    for (std::size_t s = lv; s-- > 0;) {
      chain[s] = v;
      v = Nil * v;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace

int EigenCluster::chain_length() const {
  int len = 0;
  for (const auto& c : chains) len = std::max(len, static_cast<int>(c.vectors.size()));
  return len;
}

std::vector<cplx> EigenSolution::trusted_eigenvalues(bool with_multiplicity) const {
  std::vector<cplx> out;
  for (const auto& c : clusters) {
    if (!c.trusted) continue;
    const int reps = with_multiplicity ? c.multiplicity : 1;
    for (int r = 0; r < reps; ++r) out.push_back(c.lambda);
  }
  return out;
}

CompanionOperator linearize(const DiscretePencil& pencil) {
  const Eigen::Index n = pencil.dim();
  Eigen::PartialPivLU<CMat> lu(pencil.A2);
  if (!(lu_rcond(lu) > 1e-14)) throw Error(ErrorCode::Singular, "A2 is singular; the pencil cannot be linearized");
  const CMat A2inv = lu.inverse();
  CompanionOperator c;
  c.pencil = std::make_shared<const DiscretePencil>(pencil);
  c.matrix = CMat::Zero(2 * n, 2 * n);
  c.matrix.topRightCorner(n, n) = A2inv;
  c.matrix.bottomLeftCorner(n, n) = -pencil.A0;
  c.matrix.bottomRightCorner(n, n) = -pencil.A1 * A2inv;
  return c;
}

CMat shifted_companion_inverse(const DiscretePencil& p, cplx s) {
  const Eigen::Index n = p.dim();
  Eigen::PartialPivLU<CMat> lu(p.factored_at(s));
  if (!(lu_rcond(lu) > 1e-15)) throw Error(ErrorCode::Singular, "T is singular at the shift");
  const CMat Ti = lu.inverse();
  CMat K(2 * n, 2 * n);
  K.topLeftCorner(n, n) = -Ti * (p.F1 + s * p.F2);
  K.topRightCorner(n, n) = -Ti;
  K.bottomLeftCorner(n, n) = p.F2 - p.F2 * Ti * (s * p.F1 + (s * s) * p.F2);
  K.bottomRightCorner(n, n) = -s * (p.F2 * Ti);
  return K;
}

CMat companion_scaled(const DiscretePencil& p, const CMat& M) {
  const Eigen::Index n = p.dim();
  const CMat& R = p.h2_factor();
  const CVec sw = p.sqrt_weights().cast<cplx>();
  CMat B = M;
  B.topRows(n) = R * M.topRows(n);
  B.bottomRows(n) = sw.asDiagonal() * M.bottomRows(n);
  // right-multiply by P^-1
  CMat C = B;
  C.leftCols(n) = R.transpose().triangularView<Eigen::Lower>().solve(B.leftCols(n).transpose()).transpose();
  C.rightCols(n) = B.rightCols(n) * sw.cwiseInverse().asDiagonal();
  return C;
}

RVec companion_singular_values(const DiscretePencil& p, const CMat& M) {
  const CMat C = companion_scaled(p, M);
  return Eigen::BDCSVD<CMat>(C).singularValues();
}

double companion_norm(const DiscretePencil& p, const CMat& M) { return companion_singular_values(p, M)(0); }

std::vector<cplx> companion_eigenvalues(const DiscretePencil& pencil, cplx sigma) {
  const CMat K = shifted_companion_inverse(pencil, sigma);
  Eigen::ComplexEigenSolver<CMat> es(K, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::Convergence, "eigensolver did not converge");
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(K.rows()));
  for (Eigen::Index i = 0; i < K.rows(); ++i) out.push_back(sigma + 1.0 / es.eigenvalues()(i));
  return out;
}

cplx default_lambda_prime(const DiscretePencil& pencil) {
  std::vector<double> rc;
  for (int r = 1; r <= 16; ++r) {
    Eigen::PartialPivLU<CMat> lu(pencil.factored_at(cplx(r)));
    rc.push_back(lu_rcond(lu));
  }
  const double best = *std::max_element(rc.begin(), rc.end());
  for (int r = 1; r <= 16; ++r)
    if (rc[static_cast<std::size_t>(r - 1)] >= 0.1 * best) return cplx(r);
  return cplx(1.0);
}

std::vector<double> verify_chain(const DiscretePencil& pencil, const KeldyshChain& chain) {
  if (chain.vectors.empty()) throw Error(ErrorCode::InvalidInput, "empty chain");
  const cplx l0 = chain.lambda0;
  const bool use_coords = pencil.factored && chain.coords.size() == chain.vectors.size();
  const CMat& M0 = use_coords ? pencil.F0 : pencil.A0;
  const CMat& M1 = use_coords ? pencil.F1 : pencil.A1;
  const CMat& M2 = use_coords ? pencil.F2 : pencil.A2;
  const std::vector<CVec>& x = use_coords ? chain.coords : chain.vectors;
  const CMat B0 = M0 + l0 * M1 + (l0 * l0) * M2;
  const CMat B1 = M1 + 2.0 * l0 * M2;
  double scale = 0.0;
  for (const auto& v : x) scale = std::max(scale, v.norm());
  if (scale == 0.0) throw Error(ErrorCode::InvalidInput, "chain vectors vanish");
  double bsize = 1.0;
  if (use_coords) {
    const double* fn = pencil.cache->f_norms;
    const double n0 = fn[0], n1 = fn[1], n2 = fn[2];
    const double a = std::abs(l0);
    bsize = (n0 + a * n1 + a * a * n2) + (n1 + 2.0 * a * n2) + n2;
  }
  std::vector<double> res;
  for (std::size_t k = 0; k < x.size(); ++k) {
    CVec acc = B0 * x[k];
    if (k >= 1) acc += B1 * x[k - 1];
    if (k >= 2) acc += M2 * x[k - 2];
    res.push_back(acc.norm() / (scale * bsize));
  }
  return res;
}

KeldyshChain keldysh_from_jordan(const CompanionOperator& comp, const DiscretePencil& pencil, cplx lambda0,
                                 const JordanChain& chain) {
  const Eigen::Index n = pencil.dim();
  if (comp.dim() != 2 * n) throw Error(ErrorCode::InvalidInput, "companion and pencil sizes differ");
  if (chain.empty()) throw Error(ErrorCode::InvalidInput, "empty Jordan chain");
  KeldyshChain kc;
  kc.lambda0 = lambda0;
  double unorm = 0.0, vnorm = 0.0;
  for (const auto& x : chain) {
    if (x.size() != 2 * n) throw Error(ErrorCode::InvalidInput, "Jordan vector has the wrong size");
    unorm = std::max(unorm, x.head(n).norm());
    vnorm = std::max(vnorm, x.tail(n).norm());
  }
  const double a2 = norm2_estimate(pencil.A2);
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const CVec u = chain[j].head(n);
    CVec expect = lambda0 * u;
    if (j > 0) expect += chain[j - 1].head(n);
    const double gap = (chain[j].tail(n) - pencil.A2 * expect).norm();
    if (gap > 1e-6 * (a2 * (1.0 + std::abs(lambda0)) * unorm + vnorm))
      throw Error(ErrorCode::InvalidInput, "Jordan chain violates v_j = A2 (u_{j-1} + lambda0 u_j)");
    kc.vectors.push_back(u);
    if (pencil.factored) kc.coords.push_back(pencil.to_coords(u));
  }
  kc.residuals = verify_chain(pencil, kc);
  return kc;
}

JordanChain jordan_from_keldysh(const DiscretePencil& pencil, const KeldyshChain& chain) {
  const Eigen::Index n = pencil.dim();
  JordanChain out;
  for (std::size_t j = 0; j < chain.vectors.size(); ++j) {
    const CVec& u = chain.vectors[j];
    if (u.size() != n) throw Error(ErrorCode::InvalidInput, "chain vector has the wrong size");
    CVec w = chain.lambda0 * u;
    if (j > 0) w += chain.vectors[j - 1];
    CVec x(2 * n);
    x << u, pencil.A2 * w;
    out.push_back(std::move(x));
  }
  return out;
}

EigenSolution eigen(const CompanionOperator& comp, const EigenOptions& opt) {
  if (!comp.pencil) throw Error(ErrorCode::InvalidInput, "companion operator has no pencil");
  const DiscretePencil& P = *comp.pencil;
  const Eigen::Index n = P.dim();
  if (2 * n > opt.max_dim) throw Error(ErrorCode::InvalidInput, "companion dimension exceeds the configured cap");
  const cplx sigma = opt.lambda_prime ? *opt.lambda_prime : default_lambda_prime(P);

  const CMat K = shifted_companion_inverse(P, sigma);
  const detail::SchurForm sf = detail::schur(K);
  const Eigen::Index dim = K.rows();
  std::vector<cplx> lam(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) lam[static_cast<std::size_t>(i)] = sigma + 1.0 / sf.T(i, i);

  // Cluster by distance, then merge nearly parallel eigenvectors of close
  // eigenvalues (split Jordan blocks spread like eps^(1/k)).
  UnionFind uf(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < lam.size(); ++i)
    for (std::size_t j = i + 1; j < lam.size(); ++j) {
      const double scale = 1.0 + std::max(std::abs(lam[i]), std::abs(lam[j]));
      if (std::abs(lam[i] - lam[j]) <= opt.cluster_tol * scale) uf.unite(i, j);
    }
  {
    std::vector<CVec> vecs(lam.size());
    auto vec = [&](std::size_t i) -> const CVec& {
      if (vecs[i].size() == 0) vecs[i] = detail::schur_eigenvector(sf, static_cast<Eigen::Index>(i));
      return vecs[i];
    };
    for (std::size_t i = 0; i < lam.size(); ++i)
      for (std::size_t j = i + 1; j < lam.size(); ++j) {
        if (uf.find(i) == uf.find(j)) continue;
        const double scale = 1.0 + std::max(std::abs(lam[i]), std::abs(lam[j]));
        if (std::abs(lam[i] - lam[j]) > 1e-3 * scale) continue;
        const double c = std::abs(vec(i).dot(vec(j)));
        if (std::sqrt(std::max(0.0, 1.0 - c * c)) <= 1e-3) uf.unite(i, j);
      }
  }
  std::vector<std::vector<Eigen::Index>> groups;
  {
    std::vector<long> slot(lam.size(), -1);
    for (std::size_t i = 0; i < lam.size(); ++i) {
      const std::size_t r = uf.find(i);
      if (slot[r] < 0) {
        slot[r] = static_cast<long>(groups.size());
        groups.emplace_back();
      }
      groups[static_cast<std::size_t>(slot[r])].push_back(static_cast<Eigen::Index>(i));
    }
  }

  std::vector<cplx> ref_lam;
  if (opt.reference) ref_lam = companion_eigenvalues(*opt.reference, sigma);

  const RVec sw = P.sqrt_weights();
  std::vector<EigenCluster> clusters(groups.size());
  parallel_for(groups.size(), [&](std::size_t g) {
    const auto& pos = groups[g];
    EigenCluster cl;
    cl.multiplicity = static_cast<int>(pos.size());
    std::vector<std::vector<CVec>> chains;  // factored companion coordinates (xi, v)
    if (pos.size() == 1) {
      cl.lambda = lam[static_cast<std::size_t>(pos[0])];
      chains.push_back({detail::schur_eigenvector(sf, pos[0])});
    } else {
      const detail::InvariantSubspace inv = detail::invariant_subspace(sf, pos);
      const Eigen::Index m = inv.M.rows();
      const CMat MA = sigma * CMat::Identity(m, m) + inv.M.inverse();
      cl.lambda = MA.trace() / static_cast<double>(m);
      const CMat Nil = MA - cl.lambda * CMat::Identity(m, m);
      const double tol = opt.cluster_tol * (1.0 + std::abs(cl.lambda));
      for (const auto& ych : staircase_chains(Nil, tol)) {
        std::vector<CVec> xch;
        for (const auto& y : ych) xch.push_back(inv.X * y);
        chains.push_back(std::move(xch));
      }
    }
    for (const auto i : pos) cl.spread = std::max(cl.spread, std::abs(lam[static_cast<std::size_t>(i)] - cl.lambda));

    for (auto& xch : chains) {
      KeldyshChain kc;
      kc.lambda0 = cl.lambda;
      JordanChain jc;
      double scale = 0.0;
      for (const auto& x : xch) {
        const CVec xi = x.head(n);
        const CVec u = P.to_nodal(xi);
        scale = std::max(scale, (sw.cast<cplx>().asDiagonal() * u).norm());
      }
      // Fix the phase on the largest entry of u_0 so output is reproducible.
      const CVec u0 = P.to_nodal(CVec(xch[0].head(n)));
      Eigen::Index imax = 0;
      u0.cwiseAbs().maxCoeff(&imax);
      const cplx phase = std::abs(u0(imax)) > 0 ? std::conj(u0(imax)) / std::abs(u0(imax)) : cplx(1.0);
      const cplx factor = phase / (scale > 0 ? scale : 1.0);
      for (auto& x : xch) {
        x *= factor;
        const CVec xi = x.head(n);
        const CVec u = P.to_nodal(xi);
        kc.vectors.push_back(u);
        if (P.factored) kc.coords.push_back(xi);
        CVec jx(2 * n);
        jx << u, x.tail(n);
        jc.push_back(std::move(jx));
      }
      kc.residuals = verify_chain(P, kc);
      for (double r : kc.residuals) cl.residual = std::max(cl.residual, r);
      cl.chains.push_back(std::move(kc));
      cl.jordan.push_back(std::move(jc));
    }
    std::stable_sort(cl.chains.begin(), cl.chains.end(),
                     [](const KeldyshChain& a, const KeldyshChain& b) { return a.vectors.size() > b.vectors.size(); });

    bool ok = cl.residual <= opt.residual_tol;
    if (opt.reference) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : ref_lam) best = std::min(best, std::abs(r - cl.lambda));
      ok = ok && best <= opt.trust_tol * (1.0 + std::abs(cl.lambda));
    }
    cl.trusted = ok;
    clusters[g] = std::move(cl);
  });

  std::stable_sort(clusters.begin(), clusters.end(), [&](const EigenCluster& a, const EigenCluster& b) {
    const double da = std::abs(a.lambda - sigma), db = std::abs(b.lambda - sigma);
    if (da != db) return da < db;
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });

  EigenSolution sol;
  sol.lambda_prime = sigma;
  sol.right_vectors.resize(n, static_cast<Eigen::Index>(clusters.size()));
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    sol.right_vectors.col(static_cast<Eigen::Index>(c)) = clusters[c].chains.front().vectors.front();
    sol.trust_mask.push_back(clusters[c].trusted);
  }
  sol.clusters = std::move(clusters);
  return sol;
}

double schatten_norm(const CMat& M, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidInput, "Schatten index must be at least 1");
  if (M.size() == 0) return 0.0;
  const RVec s = Eigen::BDCSVD<CMat>(M).singularValues();
  const double smax = s.maxCoeff();
  if (smax == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s(i) / smax, p);
  return smax * std::pow(acc, 1.0 / p);
}

TorusSum torus_embedding_sum(int n, double p, long long cutoff) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "dimension must be positive");
  if (!(p > 0.5 * n)) throw Error(ErrorCode::InvalidInput, "sum diverges unless p > n/2");
  if (cutoff < 1) throw Error(ErrorCode::InvalidInput, "cutoff must be at least 1");
  const double side = 2.0 * static_cast<double>(cutoff) + 1.0;
  if (std::pow(side, n) > 4e8) throw Error(ErrorCode::InvalidInput, "cutoff too large for direct summation");

  // Neumaier summation over the cube |xi|_inf <= cutoff, outermost shells first.
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  };
  std::vector<long long> idx(static_cast<std::size_t>(n), -cutoff);
  if (n == 1) {
    for (long long k = cutoff; k >= 1; --k) add(2.0 * std::pow(1.0 + static_cast<double>(k) * k, -p));
    add(1.0);
  } else {
    while (true) {
      double r2 = 0.0;
      for (auto v : idx) r2 += static_cast<double>(v) * v;
      add(std::pow(1.0 + r2, -p));
      std::size_t d = 0;
      while (d < idx.size() && idx[d] == cutoff) idx[d++] = -cutoff;
      if (d == idx.size()) break;
      ++idx[d];
    }
  }
  TorusSum out;
  out.partial = sum + comp;
  // Unit cubes centred at the omitted lattice points cover |x| > cutoff + 1/2, and
  // 1 + |x|^2 <= (1 + n)(1 + |xi|^2) on each cube.
  const double R = static_cast<double>(cutoff) + 0.5;
  const double w = 1.0 / (1.0 + R * R);
  const double radial = 0.5 * boost::math::beta(p - 0.5 * n, 0.5 * n, w);
  const double sphere = 2.0 * std::pow(M_PI, 0.5 * n) / boost::math::tgamma(0.5 * n);
  out.tail_bound = std::pow(1.0 + n, p) * sphere * radial;
  return out;
}

CountingReport counting(const EigenSolution& eig, cplx lambda_prime, double p, const std::vector<double>& t_values,
                        const CompanionOperator* comp) {
  if (!(p > 0)) throw Error(ErrorCode::InvalidInput, "p must be positive");
  if (comp && comp->pencil && comp->pencil->spatial_dim > 0 && !(p > 0.5 * comp->pencil->spatial_dim))
    throw Error(ErrorCode::InvalidInput, "p must exceed n/2");
  const std::vector<cplx> ev = eig.trusted_eigenvalues(true);
  for (const auto& l : ev)
    if (std::abs(l - lambda_prime) <= 1e-10 * (1.0 + std::abs(lambda_prime)))
      throw Error(ErrorCode::InvalidInput, "lambda' coincides with an eigenvalue");
  std::vector<double> dist;
  for (const auto& l : ev) dist.push_back(std::abs(l - lambda_prime));
  std::sort(dist.begin(), dist.end());
  double inv_sum = 0.0;
  for (auto it = dist.rbegin(); it != dist.rend(); ++it) inv_sum += std::pow(*it, -p);

  double schatten_p = std::numeric_limits<double>::quiet_NaN();
  if (comp && comp->pencil) {
    const CMat K = shifted_companion_inverse(*comp->pencil, lambda_prime);
    const RVec s = companion_singular_values(*comp->pencil, K);
    schatten_p = 0.0;
    for (Eigen::Index i = s.size(); i-- > 0;) schatten_p += std::pow(s(i), p);
  }

  CountingReport rep;
  rep.p = p;
  rep.lambda_prime = lambda_prime;
  rep.t_values = t_values;
  for (double t : t_values) {
    const int cnt = static_cast<int>(std::upper_bound(dist.begin(), dist.end(), t) - dist.begin());
    rep.counts.push_back(cnt);
    const double tp = std::pow(t, p);
    rep.discrete_bound.push_back(tp * inv_sum);
    rep.schatten_bound.push_back(tp * schatten_p);
    if (static_cast<double>(cnt) > tp * inv_sum) rep.certified = false;
  }
  return rep;
}

CompletenessResult completeness_residual(const EigenSolution& eig, const DiscretePencil& pencil, const CVec& f,
                                         int m) {
  if (f.size() != pencil.dim()) throw Error(ErrorCode::InvalidInput, "f has the wrong size");
  std::vector<const EigenCluster*> trusted;
  for (const auto& c : eig.clusters)
    if (c.trusted) trusted.push_back(&c);
  if (m < 0 || m > static_cast<int>(trusted.size()))
    throw Error(ErrorCode::InvalidInput, "m exceeds the number of trusted eigenvalues");
  const CVec sw = pencil.sqrt_weights().cast<cplx>();
  const double fn = (sw.asDiagonal() * f).norm();
  if (fn == 0.0) throw Error(ErrorCode::InvalidInput, "f must be nonzero");

  // Sequential projection onto a growing orthonormal basis keeps nested spans nested.
  CVec r = sw.asDiagonal() * f;
  std::vector<CVec> basis;
  CompletenessResult out;
  for (int c = 0; c < m; ++c) {
    for (const auto& chain : trusted[static_cast<std::size_t>(c)]->chains) {
      for (const auto& u : chain.vectors) {
        ++out.columns;
        CVec v = sw.asDiagonal() * u;
        const double v0 = v.norm();
        if (v0 == 0.0) {
          out.rank_deficient = true;
          continue;
        }
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& q : basis) v -= q * q.dot(v);
        if (v.norm() <= 1e-10 * v0) {
          out.rank_deficient = true;
          continue;
        }
        v /= v.norm();
        r -= v * v.dot(r);
        basis.push_back(std::move(v));
      }
    }
  }
  out.rank = static_cast<int>(basis.size());
  out.residual = r.norm() / fn;
  return out;
}

CVec completeness_sample(const DiscretePencil& pencil, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = pencil.dim();
  CVec f(n);
  if (pencil.spatial_dim == 0) {
    for (Eigen::Index i = 0; i < n; ++i) f(i) = normal(rng);
    return f;
  }
  auto factor = [&](const Grid1D& g) {
    std::array<double, 6> c{};
    for (int k = 0; k < 6; ++k) c[static_cast<std::size_t>(k)] = normal(rng) / ((1.0 + k) * (1.0 + k));
    return [c, a = g.a, len = g.b - g.a](double x) {
      const double y = (x - a) / len;
      if (y <= 0.0 || y >= 1.0) return 0.0;
      const double t = 2.0 * y - 1.0;
      double tkm1 = 1.0, tk = t, sum = c[0] + c[1] * t;
      for (std::size_t k = 2; k < c.size(); ++k) {
        const double next = 2.0 * t * tk - tkm1;
        tkm1 = tk;
        tk = next;
        sum += c[k] * tk;
      }
      return std::exp(-0.25 / (y * (1.0 - y))) * sum;
    };
  };
  const auto fx = factor(pencil.grid_x);
  if (pencil.spatial_dim == 1) {
    for (Eigen::Index i = 0; i < n; ++i) f(i) = fx(pencil.nodes_x(i));
    return f;
  }
  const auto fy = factor(pencil.grid_y);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = fx(pencil.nodes_x(i)) * fy(pencil.nodes_y(i));
  return f;
}

}  // namespace itep
