#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "itep/discretization.hpp"
#include "itep/pencil_spectra.hpp"
#include "../support/generators.hpp"

using namespace itep;
using itep::testing::Gen;

namespace {

// Dense real polynomials, coefficient k multiplies x^k.
using Poly = std::vector<double>;

Poly deriv(const Poly& p) {
  Poly d;
  for (std::size_t k = 1; k < p.size(); ++k) d.push_back(static_cast<double>(k) * p[k]);
  return d.empty() ? Poly{0.0} : d;
}
Poly deriv(const Poly& p, int m) {
  Poly d = p;
  for (int i = 0; i < m; ++i) d = deriv(d);
  return d;
}
Poly mul(const Poly& a, const Poly& b) {
  Poly c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}
Poly add(const Poly& a, const Poly& b, double sb = 1.0) {
  Poly c(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) c[i] += sb * b[i];
  return c;
}
double eval(const Poly& p, double x) {
  double s = 0.0;
  for (std::size_t k = p.size(); k-- > 0;) s = s * x + p[k];
  return s;
}

// T(lambda) u for polynomial q and u, straight from the operator definitions.
// Returns the three coefficient polynomials (A0 u, A1 u, A2 u).
std::array<Poly, 3> operator_by_hand(PencilKind kind, const Poly& q, const Poly& u) {
  const Poly u2 = deriv(u, 2);
  const Poly d2qd2 = deriv(mul(q, u2), 2);
  const Poly d2q = deriv(mul(q, u), 2);
  const Poly qd2 = mul(q, u2);
  if (kind == PencilKind::Helmholtz) {
    const Poly a1 = add(add(d2q, qd2), u2);
    return {d2qd2, add(Poly{0.0}, a1, -1.0), add(u, mul(q, u))};
  }
  const Poly a1 = add(add(d2q, qd2), u);
  return {add(d2qd2, u2), add(Poly{0.0}, a1, -1.0), mul(q, u)};
}

CVec sample(const Poly& p, const RVec& x) {
  CVec v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = eval(p, x(i));
  return v;
}

MediumProfile constant_profile(PencilKind kind, double q) {
  MediumProfile p;
  p.kind = kind;
  p.q.data = {q};
  return p;
}

std::vector<cplx> sorted_by_modulus(std::vector<cplx> v) {
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a.imag() < b.imag();
  });
  return v;
}

double nearest(const std::vector<cplx>& v, cplx z) {
  double best = std::numeric_limits<double>::infinity();
  for (cplx w : v) best = std::min(best, std::abs(w - z));
  return best;
}

}  // namespace

TEST_CASE("grid examples") {
  const Grid1D g = make_grid(0.0, 1.0, 8);
  REQUIRE(g.nodes.size() == 8);
  CHECK(g.nodes(0) == 0.0);
  CHECK(std::abs(g.nodes(7) - 1.0) < 1e-15);
  const Grid1D s = make_grid(-1.0, 1.0, 16);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(s.nodes(i) + s.nodes(15 - i)) < 1e-15);
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 7), Error);
  CHECK_THROWS_AS(make_grid(1.0, 1.0, 16), Error);
}

TEST_CASE("property: grids are increasing with positive weights summing to the length") {
  Gen g(21);
  for (int t = 0; t < 100; ++t) {
    const double a = g.uniform(-5.0, 5.0), b = a + g.uniform(0.1, 10.0);
    const Grid1D gr = make_grid(a, b, g.integer(8, 80));
    for (Eigen::Index i = 1; i < gr.nodes.size(); ++i) CHECK(gr.nodes(i) > gr.nodes(i - 1));
    CHECK(gr.nodes(0) >= a);
    CHECK(gr.nodes(gr.nodes.size() - 1) <= b + 1e-12);
    CHECK((gr.weights.array() > 0).all());
    CHECK(std::abs(gr.weights.sum() - (b - a)) <= 1e-10 * (b - a));
  }
}

TEST_CASE("pencil reproduces the differential operator on polynomials") {
  // x^2 (1-x)^2 (1 + x/2) satisfies u = u' = 0 at both ends; x - 2x^3 + x^4 satisfies u = u'' = 0.
  // Nodal matrices of a fourth-order operator amplify rounding roughly like n^8, so the
  // grid stays small here; the factored check below covers larger grids.
  const Poly clamped = mul(Poly{0, 0, 1, -2, 1}, Poly{1, 0.5});
  const Poly hinged = Poly{0, 1, 0, -2, 1};
  struct Case {
    BoundaryPair bc;
    Poly u;
  };
  for (const auto& c : {Case{{0, 1}, clamped}, Case{{0, 2}, hinged}}) {
    for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger}) {
      MediumProfile prof;
      prof.kind = kind;
      prof.q.type = CoefficientSpec::Type::Polynomial;
      prof.q.data = {1.0, 0.5, 0.25};
      const DiscretePencil P = assemble_pencil(prof, make_grid(0.0, 1.0, 16), c.bc);
      const auto A = operator_by_hand(kind, prof.q.data, c.u);
      const CVec u = sample(c.u, P.nodes_x);
      for (cplx l : {cplx(0.0), cplx(1.5, -2.0), cplx(-30.0, 4.0)}) {
        const CVec want = sample(A[0], P.nodes_x) + l * sample(A[1], P.nodes_x) + l * l * sample(A[2], P.nodes_x);
        const CVec got = apply_pencil(P, l, u);
        CHECK((got - want).norm() <= 1e-6 * want.norm());
      }
    }
  }
}

TEST_CASE("property: factored matrices follow the product rule") {
  // F0 xi = (q u'')'' = q'' u'' + 2 q' u''' + q u'''' with u = S0 xi, at the collocation nodes.
  Gen g(25);
  for (int t = 0; t < 10; ++t) {
    MediumProfile prof;
    prof.kind = t % 2 ? PencilKind::Schrodinger : PencilKind::Helmholtz;
    prof.q.type = CoefficientSpec::Type::Polynomial;
    const Poly q{g.uniform(1.0, 2.0), g.uniform(-0.5, 0.5), g.uniform(-0.3, 0.3)};
    prof.q.data = q;
    const BoundaryPair bc = t % 3 == 0 ? BoundaryPair{0, 1} : (t % 3 == 1 ? BoundaryPair{1, 3} : BoundaryPair{0, 2});
    const DiscretePencil P = assemble_pencil(prof, make_grid(0.0, 1.0, g.integer(24, 64)), bc);
    const CVec xi = g.vector(P.dim());
    const RVec& x = P.nodes_x;
    CVec d[5];
    for (int m = 0; m <= 4; ++m) d[m] = derivative_rows(P, m, x) * xi;
    const CVec qv = sample(q, x), q1 = sample(deriv(q), x), q2 = sample(deriv(q, 2), x);
    CVec f0 = q2.cwiseProduct(d[2]) + 2.0 * q1.cwiseProduct(d[3]) + qv.cwiseProduct(d[4]);
    // (q u)'' + q u''
    CVec f1 = q2.cwiseProduct(d[0]) + 2.0 * q1.cwiseProduct(d[1]) + 2.0 * qv.cwiseProduct(d[2]);
    CVec f2;
    if (prof.kind == PencilKind::Helmholtz) {
      f1 = -(f1 + d[2]);
      f2 = d[0] + qv.cwiseProduct(d[0]);
    } else {
      f0 += d[2];
      f1 = -(f1 + d[0]);
      f2 = qv.cwiseProduct(d[0]);
    }
    CHECK((P.F0 * xi - f0).norm() <= 1e-10 * f0.norm());
    CHECK((P.F1 * xi - f1).norm() <= 1e-10 * f1.norm());
    CHECK((P.F2 * xi - f2).norm() <= 1e-10 * f2.norm());
    CHECK((P.S0 * xi - d[0]).norm() <= 1e-12 * d[0].norm());
  }
}

TEST_CASE("Rayleigh quotient of sine modes matches the full symbol") {
  // With u = u'' = 0 the modes sin(k pi x) diagonalize d^2, so T(lambda) acts on them
  // through the full constant-coefficient symbol.
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger}) {
    const double q = 1.7;
    const DiscretePencil P = assemble_pencil(constant_profile(kind, q), make_grid(0.0, 1.0, 40), {0, 2});
    const CVec w = P.weights.cast<cplx>();
    for (int k = 1; k <= 3; ++k) {
      const double mu = std::pow(k * M_PI, 2);
      CVec u(P.dim());
      for (int i = 0; i < P.dim(); ++i) u(i) = std::sin(k * M_PI * P.nodes_x(i));
      const cplx l(2.0, 1.0);
      const cplx want = kind == PencilKind::Helmholtz
                            ? q * mu * mu + l * (2 * q + 1) * mu + l * l * (1 + q)
                            : q * mu * mu - mu + l * (2 * q * mu - 1.0) + l * l * q;
      const CVec Tu = apply_pencil(P, l, u);
      const cplx got = (w.asDiagonal() * u).dot(Tu) / (w.asDiagonal() * u).dot(u);
      CHECK(std::abs(got - want) <= 1e-8 * std::abs(want));
    }
  }
}

TEST_CASE("property: recombined basis vectors satisfy the boundary conditions") {
  Gen g(22);
  const BoundaryPair pairs[] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto& bc : pairs) {
    for (int t = 0; t < 5; ++t) {
      const double a = g.uniform(-1.0, 1.0), b = a + g.uniform(0.5, 3.0);
      const DiscretePencil P =
          assemble_pencil(constant_profile(PencilKind::Helmholtz, g.uniform(0.5, 2.0)), make_grid(a, b, g.integer(12, 48)), bc);
      const RVec ends = (RVec(2) << a, b).finished();
      const CVec xi = g.vector(P.dim());
      const double un = P.to_nodal(xi).cwiseAbs().maxCoeff();
      for (int m : {bc.m1, bc.m2}) CHECK((derivative_rows(P, m, ends) * xi).cwiseAbs().maxCoeff() <= 1e-8 * un);
    }
  }
}

TEST_CASE("apply_pencil is linear in u and quadratic in lambda") {
  Gen g(23);
  const DiscretePencil P = assemble_pencil(constant_profile(PencilKind::Schrodinger, 1.3), make_grid(0.0, 2.0, 24), {1, 3});
  for (int t = 0; t < 20; ++t) {
    const CVec u = g.vector(P.dim()), v = g.vector(P.dim());
    const cplx l = g.complex_normal() * 4.0, h = g.complex_normal();
    const CVec lin = apply_pencil(P, l, u + v) - apply_pencil(P, l, u) - apply_pencil(P, l, v);
    CHECK(lin.norm() <= 1e-12 * apply_pencil(P, l, u).norm());
    const CVec second = apply_pencil(P, l + h, u) - 2.0 * apply_pencil(P, l, u) + apply_pencil(P, l - h, u);
    const CVec want = 2.0 * h * h * (P.A2 * u);
    CHECK((second - want).norm() <= 1e-8 * (apply_pencil(P, l, u).norm() + want.norm()));
    CHECK((apply_pencil(P, 0.0, u) - P.A0 * u).norm() <= 1e-13 * (P.A0 * u).norm());
  }
  CHECK_THROWS_AS(apply_pencil(P, 0.0, CVec::Zero(P.dim() + 1)), Error);
}

TEST_CASE("leading coefficient is the diagonal of 1 + q or q") {
  MediumProfile prof;
  prof.q.type = CoefficientSpec::Type::Polynomial;
  prof.q.data = {1.0, 1.0};
  prof.q_min = 1.0;
  prof.q_max = 2.0;
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger}) {
    prof.kind = kind;
    const DiscretePencil P = assemble_pencil(prof, make_grid(0.0, 1.0, 32), {0, 1});
    const RVec want = kind == PencilKind::Helmholtz ? RVec(1.0 + P.q_nodes.array()) : P.q_nodes;
    const CMat D = want.cast<cplx>().asDiagonal();
    CHECK((P.A2 - D).norm() <= 1e-9 * D.norm());
    const double cond = want.maxCoeff() / want.minCoeff();
    const double bound = kind == PencilKind::Helmholtz ? 3.0 / 2.0 : 2.0;
    CHECK(cond <= bound * (1 + 1e-12));
  }
}

TEST_CASE("q bounds and sizes are enforced") {
  MediumProfile prof;
  prof.q.type = CoefficientSpec::Type::Polynomial;
  prof.q.data = {1.0, 1.0};
  prof.q_max = 1.5;
  CHECK_THROWS_AS(assemble_pencil(prof, make_grid(0.0, 1.0, 16), {0, 1}), Error);
  CHECK_THROWS_AS(assemble_pencil(constant_profile(PencilKind::Helmholtz, -1.0), make_grid(0.0, 1.0, 16), {0, 1}), Error);
  MediumProfile sampled;
  sampled.q.type = CoefficientSpec::Type::Samples;
  sampled.q.data = std::vector<double>(10, 1.0);
  CHECK_THROWS_AS(assemble_pencil(sampled, make_grid(0.0, 1.0, 16), {0, 1}), Error);
  CHECK_THROWS_AS(assemble_pencil_2d(constant_profile(PencilKind::Helmholtz, 1.0), make_grid(0, 1, 70),
                                     make_grid(0, 1, 70), {0, 1}),
                  Error);
}

TEST_CASE("tensor pencil dimensions and leading coefficient") {
  const DiscretePencil P =
      assemble_pencil_2d(constant_profile(PencilKind::Helmholtz, 0.8), make_grid(0, 1, 12), make_grid(0, 2, 10), {0, 1});
  CHECK(P.dim() == 8 * 6);
  const CMat off = P.A2 - CMat(P.A2.diagonal().asDiagonal());
  CHECK(off.norm() <= 1e-9 * P.A2.norm());
  CHECK(P.A2.diagonal().real().minCoeff() >= 1.8 - 1e-9);
}

TEST_CASE("tensor spectrum matches separation of variables on the square") {
  // u = u'' = 0 on every side: modes sin(j pi x) sin(k pi y) with
  // lambda = -mu and lambda = -mu q / (1 + q), mu = pi^2 (j^2 + k^2).
  const double q = 1.0;
  const DiscretePencil P =
      assemble_pencil_2d(constant_profile(PencilKind::Helmholtz, q), make_grid(0, 1, 20), make_grid(0, 1, 20), {0, 2});
  const auto eig = companion_eigenvalues(P, default_lambda_prime(P));
  std::vector<cplx> predicted;
  for (int j = 1; j <= 6; ++j)
    for (int k = 1; k <= 6; ++k) {
      const double mu = M_PI * M_PI * (j * j + k * k);
      predicted.push_back(-mu);
      predicted.push_back(-mu * q / (1.0 + q));
    }
  int checked = 0;
  for (cplx z : predicted) {
    if (std::abs(z) > 60.0) continue;
    CHECK(nearest(eig, z) <= 1e-7 * std::abs(z));
    ++checked;
  }
  CHECK(checked >= 6);
  for (cplx z : eig)
    if (std::abs(z) <= 60.0) CHECK(nearest(predicted, z) <= 1e-7 * std::abs(z));
}

TEST_CASE("leading eigenvalues converge under grid refinement") {
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger}) {
    const auto prof = constant_profile(kind, 1.5);
    const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, 64), {0, 1});
    const DiscretePencil R = assemble_pencil(prof, make_grid(0, 1, 72), {0, 1});
    const auto a = sorted_by_modulus(companion_eigenvalues(P, default_lambda_prime(P)));
    const auto b = companion_eigenvalues(R, default_lambda_prime(R));
    for (int i = 0; i < 5; ++i) CHECK(nearest(b, a[static_cast<std::size_t>(i)]) <= 1e-8 * std::abs(a[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("matrix pencils keep their matrices") {
  Gen g(24);
  const CMat A0 = g.matrix(4, 4), A1 = g.matrix(4, 4), A2 = CMat::Identity(4, 4);
  const DiscretePencil P = make_matrix_pencil(A0, A1, A2);
  CHECK(P.spatial_dim == 0);
  CHECK((P.at(2.0) - (A0 + 2.0 * A1 + 4.0 * A2)).norm() < 1e-13);
  CHECK((P.weights.array() == 1.0).all());
  CHECK_THROWS_AS(make_matrix_pencil(A0, A1, CMat::Identity(3, 3)), Error);
}
