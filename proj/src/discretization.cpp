#include "itep/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace itep {

namespace {

// E(i, k) = T_k(t_i).
RMat cheb_eval(int M, const RVec& t) {
  RMat E(t.size(), M);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    double tm1 = 1.0, tk = t(i);
    if (M > 0) E(i, 0) = 1.0;
    if (M > 1) E(i, 1) = tk;
    for (int k = 2; k < M; ++k) {
      const double tn = 2.0 * t(i) * tk - tm1;
      E(i, k) = tn;
      tm1 = tk;
      tk = tn;
    }
  }
  return E;
}

// Coefficients of a length-M series -> its antiderivative (length M+1) vanishing at t = -1.
RMat integration_matrix(int M) {
  RMat J = RMat::Zero(M + 1, M);
  for (int k = 0; k < M; ++k) {
    if (k == 0) {
      J(1, 0) += 1.0;
    } else if (k == 1) {
      J(2, 1) += 0.25;
    } else {
      J(k + 1, k) += 1.0 / (2.0 * (k + 1));
      J(k - 1, k) -= 1.0 / (2.0 * (k - 1));
    }
  }
  for (int k = 0; k < M; ++k) {
    double at_minus_one = 0.0;
    for (int j = 0; j <= M; ++j) at_minus_one += ((j % 2) ? -1.0 : 1.0) * J(j, k);
    J(0, k) -= at_minus_one;
  }
  return J;
}

// Rows of d^m/dx^m applied to the cubic monomials in t, x = a + h (t + 1).
RMat cubic_rows(int m, const RVec& t, double h) {
  RMat V = RMat::Zero(t.size(), 4);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    for (int j = m; j < 4; ++j) {
      double c = 1.0;
      for (int l = j - m + 1; l <= j; ++l) c *= l;
      V(i, j) = c * std::pow(t(i), j - m) / std::pow(h, m);
    }
  }
  return V;
}

RMat kron(const RMat& A, const RMat& B) {
  RMat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

RVec kron(const RVec& a, const RVec& b) {
  RVec k(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) k.segment(i * b.size(), b.size()) = a(i) * b;
  return k;
}

struct QValues {
  RVec q, qx, qxx, qy, qyy;
};

// Chebyshev coefficients of the interpolant through values on the Lobatto grid.
RVec lobatto_coefficients(const RVec& f) {
  const int n = static_cast<int>(f.size());
  const int M = n - 1;
  RVec c = RVec::Zero(n);
  for (int k = 0; k <= M; ++k) {
    double s = 0.0;
    for (int j = 0; j <= M; ++j) {
      // increasing grid: t_j = -cos(pi j / M), so T_k(t_j) = (-1)^k cos(pi j k / M)
      double v = f(j) * std::cos(M_PI * j * k / M) * ((k % 2) ? -1.0 : 1.0);
      if (j == 0 || j == M) v *= 0.5;
      s += v;
    }
    c(k) = 2.0 * s / M;
  }
  c(0) *= 0.5;
  c(M) *= 0.5;
  return c;
}

RVec cheb_derivative(const RVec& c) {
  const Eigen::Index n = c.size();
  RVec d = RVec::Zero(n);
  for (Eigen::Index k = n - 1; k >= 1; --k) {
    const double next = (k + 1 < n) ? d(k + 1) : 0.0;
    d(k - 1) = next + 2.0 * k * c(k);
  }
  d(0) *= 0.5;
  return d;
}

QValues eval_q_1d(const CoefficientSpec& spec, const Grid1D& grid, const RVec& x) {
  QValues v;
  const Eigen::Index n = x.size();
  v.q = RVec::Zero(n);
  v.qx = RVec::Zero(n);
  v.qxx = RVec::Zero(n);
  switch (spec.type) {
    case CoefficientSpec::Type::Constant:
      if (spec.data.size() != 1) throw Error(ErrorCode::InvalidInput, "constant q needs exactly one value");
      v.q.setConstant(spec.data[0]);
      break;
    case CoefficientSpec::Type::Polynomial: {
      if (spec.data.empty()) throw Error(ErrorCode::InvalidInput, "polynomial q needs coefficients");
      for (Eigen::Index i = 0; i < n; ++i) {
        double p = 0, dp = 0, ddp = 0;
        for (auto it = spec.data.rbegin(); it != spec.data.rend(); ++it) {
          ddp = ddp * x(i) + 2.0 * dp;
          dp = dp * x(i) + p;
          p = p * x(i) + *it;
        }
        v.q(i) = p;
        v.qx(i) = dp;
        v.qxx(i) = ddp;
      }
      break;
    }
    case CoefficientSpec::Type::Samples: {
      if (static_cast<int>(spec.data.size()) != grid.n_pts)
        throw Error(ErrorCode::InvalidInput, "sampled q needs one value per grid node (" + std::to_string(grid.n_pts) + ")");
      const RVec f = Eigen::Map<const RVec>(spec.data.data(), grid.n_pts);
      const RVec c = lobatto_coefficients(f);
      const RVec c1 = cheb_derivative(c);
      const RVec c2 = cheb_derivative(c1);
      const double h = 0.5 * (grid.b - grid.a);
      const RVec t = ((x.array() - grid.a) / h - 1.0).matrix();
      const RMat E = cheb_eval(static_cast<int>(c.size()), t);
      v.q = E * c;
      v.qx = E * c1 / h;
      v.qxx = E * c2 / (h * h);
      break;
    }
  }
  return v;
}

QValues eval_q_2d(const CoefficientSpec& spec, const RVec& x, const RVec& y) {
  QValues v;
  const Eigen::Index n = x.size();
  v.q = RVec::Zero(n);
  v.qx = RVec::Zero(n);
  v.qy = RVec::Zero(n);
  v.qxx = RVec::Zero(n);
  v.qyy = RVec::Zero(n);
  if (spec.type == CoefficientSpec::Type::Constant) {
    if (spec.data.size() != 1) throw Error(ErrorCode::InvalidInput, "constant q needs exactly one value");
    v.q.setConstant(spec.data[0]);
    return v;
  }
  if (spec.type != CoefficientSpec::Type::Polynomial)
    throw Error(ErrorCode::InvalidInput, "2D profiles support constant or polynomial q");
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(spec.data.size()))));
  if (d * d != static_cast<int>(spec.data.size()) || d == 0)
    throw Error(ErrorCode::InvalidInput, "2D polynomial q needs a square coefficient table");
  auto pw = [](double b, int e) { return e < 0 ? 0.0 : std::pow(b, e); };
  for (Eigen::Index k = 0; k < n; ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double c = spec.data[static_cast<std::size_t>(i * d + j)];
        v.q(k) += c * pw(x(k), i) * pw(y(k), j);
        v.qx(k) += c * i * pw(x(k), i - 1) * pw(y(k), j);
        v.qy(k) += c * j * pw(x(k), i) * pw(y(k), j - 1);
        v.qxx(k) += c * i * (i - 1) * pw(x(k), i - 2) * pw(y(k), j);
        v.qyy(k) += c * j * (j - 1) * pw(x(k), i) * pw(y(k), j - 2);
      }
    }
  }
  return v;
}

void check_bounds(const MediumProfile& profile, const RVec& samples) {
  const double lo = samples.minCoeff();
  const double hi = samples.maxCoeff();
  const double q_min = profile.q_min.value_or(lo);
  const double q_max = profile.q_max.value_or(hi);
  if (!(q_min > 0)) throw Error(ErrorCode::InvalidInput, "q must be bounded away from zero");
  if (q_max < q_min) throw Error(ErrorCode::InvalidInput, "q_max below q_min");
  const double slack = 1e-12 * std::max(1.0, q_max);
  if (lo < q_min - slack || hi > q_max + slack)
    throw Error(ErrorCode::InvalidInput, "q out of bounds [" + std::to_string(q_min) + ", " + std::to_string(q_max) +
                                             "]: sampled range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

CMat cx(const RMat& m) { return m.cast<cplx>(); }

DiscretePencil finalize(DiscretePencil p) {
  auto cache = std::make_shared<DiscretePencil::Cache>();
  if (p.factored) cache->s0_lu.compute(p.S0);
  const RVec sw = p.sqrt_weights();
  const Eigen::Index n = p.dim();
  CMat stack(n * static_cast<Eigen::Index>(p.sobolev.size()), n);
  for (std::size_t k = 0; k < p.sobolev.size(); ++k) stack.middleRows(static_cast<Eigen::Index>(k) * n, n) = sw.asDiagonal() * p.sobolev[k];
  Eigen::HouseholderQR<CMat> qr(stack);
  cache->h2 = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  cache->f_norms[0] = norm2_estimate(p.F0);
  cache->f_norms[1] = norm2_estimate(p.F1);
  cache->f_norms[2] = norm2_estimate(p.F2);
  p.cache = cache;
  return p;
}

}  // namespace

CVec DiscretePencil::to_coords(const CVec& u) const {
  if (!factored) return u;
  return cache->s0_lu.solve(u);
}

Grid1D make_grid(double a, double b, int n_pts) {
  if (n_pts < 8) throw Error(ErrorCode::InvalidInput, "n_pts must be at least 8");
  if (!(a < b)) throw Error(ErrorCode::InvalidInput, "grid needs a < b");
  Grid1D g;
  g.a = a;
  g.b = b;
  g.n_pts = n_pts;
  const int M = n_pts - 1;
  g.nodes.resize(n_pts);
  g.weights.resize(n_pts);
  const double h = 0.5 * (b - a);
  for (int j = 0; j <= M; ++j) g.nodes(j) = a + h * (1.0 - std::cos(M_PI * j / M));
  g.nodes(0) = a;
  g.nodes(M) = b;
  // Clenshaw-Curtis
  RVec v = RVec::Ones(std::max(M - 1, 0));
  double w_end;
  if (M % 2 == 0) {
    w_end = 1.0 / (M * M - 1.0);
    for (int k = 1; k < M / 2; ++k)
      for (int j = 1; j < M; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * M_PI * j / M) / (4.0 * k * k - 1.0);
    for (int j = 1; j < M; ++j) v(j - 1) -= std::cos(M * M_PI * j / M) / (M * M - 1.0);
  } else {
    w_end = 1.0 / (static_cast<double>(M) * M);
    for (int k = 1; k <= (M - 1) / 2; ++k)
      for (int j = 1; j < M; ++j) v(j - 1) -= 2.0 * std::cos(2.0 * k * M_PI * j / M) / (4.0 * k * k - 1.0);
  }
  g.weights(0) = g.weights(M) = w_end * h;
  for (int j = 1; j < M; ++j) g.weights(j) = 2.0 * v(j - 1) / M * h;
  return g;
}

namespace detail {

RVec fejer_weights(int N) {
  RVec w(N);
  for (int i = 0; i < N; ++i) {
    const double th = M_PI * (2.0 * i + 1.0) / (2.0 * N);
    double s = 0.0;
    for (int k = 1; k <= N / 2; ++k) s += std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
    w(i) = 2.0 / N * (1.0 - 2.0 * s);
  }
  return w;
}

RMat FactoredBasis::rows(int m, const RVec& x) const {
  const RVec tt = ((x.array() - a) / h - 1.0).matrix();
  RMat block(tt.size(), N + 4);
  block.leftCols(N) = cheb_eval(N + 4 - m, tt) * J[static_cast<std::size_t>(4 - m)] * C;
  block.rightCols(4) = cubic_rows(m, tt, h);
  return block * Z;
}

FactoredBasis make_factored_basis(double a, double b, int N, const BoundaryPair& bc) {
  validate(bc);
  if (N < 4) throw Error(ErrorCode::InvalidInput, "too few unknowns for a fourth-order operator");
  FactoredBasis B;
  B.N = N;
  B.a = a;
  B.b = b;
  B.h = 0.5 * (b - a);
  B.t.resize(N);
  for (int i = 0; i < N; ++i) B.t(i) = -std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * N));
  B.y = (a + B.h * (B.t.array() + 1.0)).matrix();
  B.w = fejer_weights(N) * B.h;

  B.C = cheb_eval(N, B.t).transpose() * (2.0 / N);
  B.C.row(0) *= 0.5;

  B.J.push_back(RMat::Identity(N, N));
  for (int k = 1; k <= 4; ++k) B.J.push_back(B.h * integration_matrix(N + k - 1) * B.J.back());

  RMat Bc(4, N + 4);
  int r = 0;
  for (double e : {-1.0, 1.0}) {
    for (int m : {bc.m1, bc.m2}) {
      RVec te(1);
      te(0) = e;
      Bc.block(r, 0, 1, N) = cheb_eval(N + 4 - m, te) * B.J[static_cast<std::size_t>(4 - m)] * B.C;
      Bc.block(r, N, 1, 4) = cubic_rows(m, te, B.h);
      ++r;
    }
  }
  Eigen::ColPivHouseholderQR<RMat> rank_check(Bc.transpose());
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < 4) throw Error(ErrorCode::InvalidInput, "boundary rows are rank-deficient");
  Eigen::HouseholderQR<RMat> qr(Bc.transpose());
  const RMat Q = qr.householderQ() * RMat::Identity(N + 4, N + 4);
  B.Z = Q.rightCols(N);

  for (int m = 0; m <= 4; ++m) {
    RMat block(N, N + 4);
    block.leftCols(N) = cheb_eval(N + 4 - m, B.t) * B.J[static_cast<std::size_t>(4 - m)] * B.C;
    block.rightCols(4) = cubic_rows(m, B.t, B.h);
    B.S.push_back(block * B.Z);
  }
  return B;
}

}  // namespace detail

DiscretePencil assemble_pencil(const MediumProfile& profile, const Grid1D& grid, const BoundaryPair& bc) {
  validate(bc);
  if (grid.n_pts < 8) throw Error(ErrorCode::InvalidInput, "n_pts must be at least 8");
  auto basis = std::make_shared<detail::FactoredBasis>(detail::make_factored_basis(grid.a, grid.b, grid.n_pts - 4, bc));
  const auto& S = basis->S;
  const int N = basis->N;

  const QValues qv = eval_q_1d(profile.q, grid, basis->y);
  RVec all(N + grid.n_pts);
  all << qv.q, eval_q_1d(profile.q, grid, grid.nodes).q;
  check_bounds(profile, all);

  const auto Q = qv.q.asDiagonal();
  const auto Q1 = qv.qx.asDiagonal();
  const auto Q2 = qv.qxx.asDiagonal();
  // d2(q d2 u) = q u'''' + 2 q' u''' + q'' u''
  const RMat qlap = Q * S[4] + 2.0 * (Q1 * S[3]) + Q2 * S[2];
  // d2(q u) + q d2 u
  const RMat lap_q = Q2 * S[0] + 2.0 * (Q1 * S[1]) + 2.0 * (Q * S[2]);

  DiscretePencil p;
  p.kind = profile.kind;
  p.bc = bc;
  p.spatial_dim = 1;
  p.factored = true;
  p.grid_x = grid;
  p.q_nodes = qv.q;
  p.nodes_x = basis->y;
  p.weights = basis->w;
  RVec a2;
  if (profile.kind == PencilKind::Helmholtz) {
    p.F0 = cx(qlap);
    p.F1 = cx(-(lap_q + S[2]));
    a2 = (1.0 + qv.q.array()).matrix();
  } else {
    p.F0 = cx(qlap + S[2]);
    p.F1 = cx(-(lap_q + S[0]));
    a2 = qv.q;
  }
  p.F2 = cx(a2.asDiagonal() * S[0]);
  p.S0 = cx(S[0]);
  p.sobolev = {cx(S[0]), cx(S[1]), cx(S[2])};

  Eigen::PartialPivLU<CMat> lu_t(p.S0.transpose());
  p.A0 = lu_t.solve(p.F0.transpose()).transpose();
  p.A1 = lu_t.solve(p.F1.transpose()).transpose();
  p.A2 = cx(RMat(a2.asDiagonal()));

  p = finalize(std::move(p));
  auto cache = std::const_pointer_cast<DiscretePencil::Cache>(p.cache);
  cache->basis_x = basis;
  return p;
}

DiscretePencil assemble_pencil_2d(const MediumProfile& profile, const Grid1D& grid_x, const Grid1D& grid_y,
                                  const BoundaryPair& bc, int max_unknowns) {
  validate(bc);
  if (grid_x.n_pts < 8 || grid_y.n_pts < 8) throw Error(ErrorCode::InvalidInput, "n_pts must be at least 8");
  const long long unknowns = static_cast<long long>(grid_x.n_pts - 4) * (grid_y.n_pts - 4);
  if (unknowns > max_unknowns)
    throw Error(ErrorCode::InvalidInput, "2D pencil needs " + std::to_string(unknowns) + " unknowns, cap is " +
                                             std::to_string(max_unknowns));
  auto bx = std::make_shared<detail::FactoredBasis>(detail::make_factored_basis(grid_x.a, grid_x.b, grid_x.n_pts - 4, bc));
  auto by = std::make_shared<detail::FactoredBasis>(detail::make_factored_basis(grid_y.a, grid_y.b, grid_y.n_pts - 4, bc));
  const int Nx = bx->N, Ny = by->N, N = Nx * Ny;

  RVec xs(N), ys(N);
  for (int i = 0; i < Nx; ++i)
    for (int j = 0; j < Ny; ++j) {
      xs(i * Ny + j) = bx->y(i);
      ys(i * Ny + j) = by->y(j);
    }
  const QValues qv = eval_q_2d(profile.q, xs, ys);
  check_bounds(profile, qv.q);

  auto S = [&](int i, int j) { return kron(bx->S[static_cast<std::size_t>(i)], by->S[static_cast<std::size_t>(j)]); };
  const RMat S00 = S(0, 0), S10 = S(1, 0), S01 = S(0, 1), S20 = S(2, 0), S02 = S(0, 2), S11 = S(1, 1);
  const RMat lap = S20 + S02;
  const RMat bilap = S(4, 0) + 2.0 * S(2, 2) + S(0, 4);
  const RMat grad_lap_x = S(3, 0) + S(1, 2);
  const RMat grad_lap_y = S(2, 1) + S(0, 3);
  const auto Q = qv.q.asDiagonal();
  const auto Qx = qv.qx.asDiagonal();
  const auto Qy = qv.qy.asDiagonal();
  const RVec lq = qv.qxx + qv.qyy;
  const auto LQ = lq.asDiagonal();
  // Laplacian of (q w) with w = Laplacian of u, and Laplacian of (q u) + q Laplacian u.
  const RMat qlap = Q * bilap + 2.0 * (Qx * grad_lap_x + Qy * grad_lap_y) + LQ * lap;
  const RMat lap_q = LQ * S00 + 2.0 * (Qx * S10 + Qy * S01) + 2.0 * (Q * lap);

  DiscretePencil p;
  p.kind = profile.kind;
  p.bc = bc;
  p.spatial_dim = 2;
  p.factored = true;
  p.grid_x = grid_x;
  p.grid_y = grid_y;
  p.q_nodes = qv.q;
  p.nodes_x = xs;
  p.nodes_y = ys;
  p.weights = kron(bx->w, by->w);
  RVec a2;
  if (profile.kind == PencilKind::Helmholtz) {
    p.F0 = cx(qlap);
    p.F1 = cx(-(lap_q + lap));
    a2 = (1.0 + qv.q.array()).matrix();
  } else {
    p.F0 = cx(qlap + lap);
    p.F1 = cx(-(lap_q + S00));
    a2 = qv.q;
  }
  p.F2 = cx(a2.asDiagonal() * S00);
  p.S0 = cx(S00);
  p.sobolev = {cx(S00), cx(S10), cx(S01), cx(S20), cx(S11), cx(S02)};
  Eigen::PartialPivLU<CMat> lu_t(p.S0.transpose());
  p.A0 = lu_t.solve(p.F0.transpose()).transpose();
  p.A1 = lu_t.solve(p.F1.transpose()).transpose();
  p.A2 = cx(RMat(a2.asDiagonal()));

  p = finalize(std::move(p));
  auto cache = std::const_pointer_cast<DiscretePencil::Cache>(p.cache);
  cache->basis_x = bx;
  cache->basis_y = by;
  return p;
}

DiscretePencil make_matrix_pencil(const CMat& A0, const CMat& A1, const CMat& A2, const RVec& weights) {
  const Eigen::Index n = A0.rows();
  if (n == 0 || A0.cols() != n || A1.rows() != n || A1.cols() != n || A2.rows() != n || A2.cols() != n)
    throw Error(ErrorCode::InvalidInput, "pencil matrices must be square and of equal size");
  DiscretePencil p;
  p.spatial_dim = 0;
  p.factored = false;
  p.A0 = A0;
  p.A1 = A1;
  p.A2 = A2;
  p.F0 = A0;
  p.F1 = A1;
  p.F2 = A2;
  p.S0 = CMat::Identity(n, n);
  p.sobolev = {p.S0};
  if (weights.size() == 0) {
    p.weights = RVec::Ones(n);
  } else {
    if (weights.size() != n || (weights.array() <= 0).any())
      throw Error(ErrorCode::InvalidInput, "weights must be positive, one per row");
    p.weights = weights;
  }
  return finalize(std::move(p));
}

CVec apply_pencil(const DiscretePencil& pencil, cplx lambda, const CVec& u) {
  if (u.size() != pencil.dim()) throw Error(ErrorCode::InvalidInput, "dimension mismatch in apply_pencil");
  return pencil.A0 * u + lambda * (pencil.A1 * u) + (lambda * lambda) * (pencil.A2 * u);
}

CMat derivative_rows(const DiscretePencil& pencil, int m, const RVec& x) {
  if (pencil.spatial_dim != 1 || !pencil.cache || !pencil.cache->basis_x)
    throw Error(ErrorCode::InvalidInput, "derivative_rows needs an assembled 1D pencil");
  if (m < 0 || m > 4) throw Error(ErrorCode::InvalidInput, "derivative order must be in 0..4");
  return pencil.cache->basis_x->rows(m, x).cast<cplx>();
}

}  // namespace itep
