#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "doctest.h"
#include "itep/oracle_1d.hpp"
#include "../support/generators.hpp"

using namespace itep;
using itep::testing::Gen;

namespace {

int total(const std::vector<OracleRoot>& roots) {
  int n = 0;
  for (const auto& r : roots) n += r.multiplicity;
  return n;
}

// Boundary matrix in the exponential basis exp(+-r x), columns normalized; growing
// exponentials are anchored at the far end so nothing overflows.
double exp_basis_sigma_ratio(const CharacteristicFunction& cf, cplx lambda) {
  const cplx mu3 = cf.kind == PencilKind::Helmholtz ? lambda * (1.0 + 1.0 / cf.q) : lambda - 1.0 / cf.q;
  const cplx r1 = std::sqrt(lambda), r3 = std::sqrt(mu3);
  const cplx rs[4] = {r1, -r1, r3, -r3};
  const int orders[2] = {cf.bc.m1, cf.bc.m2};
  Eigen::Matrix4cd M;
  for (int j = 0; j < 4; ++j) {
    const cplx r = rs[j];
    const double anchor = r.real() > 0 ? cf.L : 0.0;
    for (int side = 0; side < 2; ++side) {
      const double x = side == 0 ? 0.0 : cf.L;
      for (int k = 0; k < 2; ++k) M(2 * side + k, j) = std::pow(r, orders[k]) * std::exp(r * (x - anchor));
    }
    M.col(j).normalize();
  }
  const auto s = Eigen::JacobiSVD<Eigen::Matrix4cd>(M).singularValues();
  return s(3) / s(0);
}

}  // namespace

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(CharacteristicFunction{PencilKind::Helmholtz, -1.0, 1.0, {0, 1}}), Error);
  CHECK_THROWS_AS(validate(CharacteristicFunction{PencilKind::Helmholtz, 1.0, 0.0, {0, 1}}), Error);
  CHECK_THROWS_AS(validate(CharacteristicFunction{PencilKind::Helmholtz, 1.0, 1.0, {2, 2}}), Error);
}

TEST_CASE("hinged roots match the sine-mode formula") {
  for (PencilKind kind : {PencilKind::Helmholtz, PencilKind::Schrodinger}) {
    const double q = 0.7;
    const CharacteristicFunction cf{kind, q, 1.0, {0, 2}};
    const RootSearch s = search_roots(cf, {-300.3, 50.2, -10.1, 10.4});
    std::vector<double> want;
    for (int k = 1; k <= 12; ++k) {
      const double mu = std::pow(k * M_PI, 2);
      for (double w : {-mu, kind == PencilKind::Helmholtz ? -mu * q / (1 + q) : 1.0 / q - mu})
        if (w > s.rect.re_min && w < s.rect.re_max) want.push_back(w);
    }
    CHECK(total(s.roots) == static_cast<int>(want.size()));
    CHECK(s.winding == total(s.roots));
    for (const auto& r : s.roots) {
      double best = std::numeric_limits<double>::infinity();
      for (double w : want) best = std::min(best, std::abs(r.lambda - w) / std::max(1.0, std::abs(w)));
      CHECK(best <= 1e-10);
    }
  }
}

TEST_CASE("Schrodinger free ends carry double roots") {
  const CharacteristicFunction cf{PencilKind::Schrodinger, 2.0, 1.0, {2, 3}};
  const auto roots = find_roots(cf, {-1.1, 1.2, -1.3, 1.4});
  int at0 = 0, at_half = 0;
  for (const auto& r : roots) {
    if (std::abs(r.lambda) < 1e-12) at0 += r.multiplicity;
    if (std::abs(r.lambda - 0.5) < 1e-12) at_half += r.multiplicity;
  }
  CHECK(at0 == 2);
  CHECK(at_half == 2);
  CHECK(total(roots) == 4);
}

TEST_CASE("property: roots annihilate the exponential-basis boundary matrix") {
  Gen g(51);
  for (int t = 0; t < 12; ++t) {
    const PencilKind kind = t % 2 ? PencilKind::Schrodinger : PencilKind::Helmholtz;
    int m1 = g.integer(0, 3), m2 = g.integer(0, 3);
    if (m1 == m2) m2 = (m1 + 1) % 4;
    const CharacteristicFunction cf{kind, g.uniform(0.5, 2.0), g.uniform(0.7, 1.5), {m1, m2}};
    const auto roots = find_roots(cf, {-150.3, 150.2, -150.1, 150.4});
    for (const auto& r : roots) {
      CHECK(r.newton_residual <= 1e-10);
      // The exponential basis degenerates at lambda = 0 and where mu3 = 0.
      if (std::abs(r.lambda) < 1e-3 || std::abs(r.lambda - (kind == PencilKind::Schrodinger ? 1.0 / cf.q : 0.0)) < 1e-3)
        continue;
      CHECK(exp_basis_sigma_ratio(cf, r.lambda) <= 1e-9);
    }
  }
}

TEST_CASE("property: Helmholtz roots scale like 1/L^2") {
  Gen g(52);
  for (int t = 0; t < 6; ++t) {
    const double q = g.uniform(0.5, 2.0), L = g.uniform(0.5, 2.0);
    BoundaryPair bc{g.integer(0, 1), g.integer(2, 3)};
    const CharacteristicFunction unit{PencilKind::Helmholtz, q, 1.0, bc};
    const CharacteristicFunction scaled{PencilKind::Helmholtz, q, L, bc};
    const SearchRect r1{-200.3, 200.2, -200.1, 200.4};
    const SearchRect rL{r1.re_min / (L * L), r1.re_max / (L * L), r1.im_min / (L * L), r1.im_max / (L * L)};
    const auto a = find_roots(unit, r1), b = find_roots(scaled, rL);
    REQUIRE(a.size() == b.size());
    CHECK(total(a) == total(b));
    for (const auto& ra : a) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& rb : b) best = std::min(best, std::abs(rb.lambda * (L * L) - ra.lambda));
      CHECK(best <= 1e-9 * std::max(1.0, std::abs(ra.lambda)));
    }
  }
}

TEST_CASE("property: winding number equals the root count") {
  Gen g(53);
  for (int t = 0; t < 16; ++t) {
    const PencilKind kind = t % 2 ? PencilKind::Schrodinger : PencilKind::Helmholtz;
    int m1 = g.integer(0, 3), m2 = g.integer(0, 3);
    if (m1 == m2) m2 = (m1 + 1) % 4;
    const CharacteristicFunction cf{kind, g.uniform(0.3, 3.0), 1.0, {m1, m2}};
    const double x0 = g.uniform(-120, 20), y0 = g.uniform(-60, 40);
    const RootSearch s = search_roots(cf, {x0, x0 + g.uniform(5, 100), y0, y0 + g.uniform(5, 60)});
    CHECK(s.winding == total(s.roots));
  }
}

TEST_CASE("property: distinct and confluent bases agree near confluence") {
  // Schrodinger with large q puts mu3 = lambda - 1/q next to mu1 = lambda; the two
  // bases differ only at first order in the gap.
  Gen g(54);
  for (int t = 0; t < 50; ++t) {
    const double q = std::exp(g.uniform(std::log(1e4), std::log(1e6)));
    int m1 = g.integer(0, 3), m2 = g.integer(0, 3);
    if (m1 == m2) m2 = (m1 + 1) % 4;
    const CharacteristicFunction cf{PencilKind::Schrodinger, q, 1.0, {m1, m2}};
    const cplx l = g.complex_normal() * 10.0;
    const cplx d = char_det(cf, l, DetBranch::Distinct);
    const cplx c = char_det(cf, l, DetBranch::Confluent);
    const double scale = std::abs(c) + std::abs(d);
    CHECK(std::abs(d - c) <= 1e-2 * std::pow(1.0 + std::abs(l), 2) / q * scale);
  }
}

TEST_CASE("root search is reproducible and sorted") {
  const CharacteristicFunction cf{PencilKind::Helmholtz, 1.0, 1.0, {0, 1}};
  const SearchRect rect{-100.3, 100.2, -100.1, 100.4};
  const auto a = find_roots(cf, rect), b = find_roots(cf, rect);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].lambda == b[i].lambda);
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK((a[i - 1].lambda.real() < a[i].lambda.real() ||
           (a[i - 1].lambda.real() == a[i].lambda.real() && a[i - 1].lambda.imag() <= a[i].lambda.imag())));
}

TEST_CASE("edges through roots are nudged") {
  // -pi^2 is a hinged root; put it exactly on the left edge.
  const CharacteristicFunction cf{PencilKind::Helmholtz, 1.0, 1.0, {0, 2}};
  const double r = -M_PI * M_PI;
  const RootSearch s = search_roots(cf, {r, 0.5, -1.0, 1.0});
  CHECK(s.rect.re_min < r);
  CHECK(s.winding == total(s.roots));
}
