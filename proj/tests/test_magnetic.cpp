#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"

#include "bloch/magnetic.hpp"

using namespace bloch;

namespace {

Lattice square() {
  return make_lattice(2, {Vector3d(2.0 * M_PI, 0, 0), Vector3d(0, 2.0 * M_PI, 0)});
}

// V = 2cos x + 2cos y quantizes to the classic symbol 2cos K1 + 2cos K2
HarperSymbol cos_symbol() {
  FourierPotential V = potential_from_coeffs(
      square(),
      {{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 1.0}, {{0, 1, 0}, 1.0}, {{0, -1, 0}, 1.0}}, true);
  return potential_symbol(V);
}

}  // namespace

TEST_SUITE("magnetic") {

TEST_CASE("flux fractions reduce and enumerate like a Farey list") {
  Flux f = make_flux(2, 4);
  CHECK(f.p == 1);
  CHECK(f.q == 2);
  CHECK(make_flux(0, 5).q == 1);
  // totient sum: 1+1+2+2+4+2+6+4+6+4
  CHECK(flux_list(10).size() == 32);
  for (const Flux& x : flux_list(10)) {
    CHECK(x.q <= 10);
    CHECK(x.p >= 0);
    CHECK(x.p < std::max(x.q, 1));
  }
}

TEST_CASE("half-flux fibers match the closed form") {
  HarperModel m{cos_symbol(), make_flux(1, 2)};
  for (double k1 : {0.0, 0.3, 1.1})
    for (double k2 : {0.0, 0.7, 2.9}) {
      MatC H = harper_matrix(m, k1, k2);
      Eigen::SelfAdjointEigenSolver<MatC> es(H);
      double want = 2.0 * std::sqrt(std::cos(k1) * std::cos(k1) + std::cos(k2) * std::cos(k2));
      CHECK(std::abs(es.eigenvalues()[0] + want) < 1e-12);
      CHECK(std::abs(es.eigenvalues()[1] - want) < 1e-12);
    }
}

TEST_CASE("boundary-phase placement is isospectral") {
  HarperModel m{cos_symbol(), make_flux(2, 5)};
  Eigen::SelfAdjointEigenSolver<MatC> ref(harper_matrix(m, 0.21, 1.3, 4));
  for (int corner = 0; corner < 4; ++corner) {
    Eigen::SelfAdjointEigenSolver<MatC> es(harper_matrix(m, 0.21, 1.3, corner));
    CHECK((es.eigenvalues() - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fiber traces are kappa-independent") {
  HarperModel m{cos_symbol(), make_flux(1, 3)};
  for (double k1 : {0.0, 0.5})
    for (double k2 : {0.1, 2.0}) {
      cplx tr = harper_matrix(m, k1, k2).trace();
      CHECK(std::abs(tr) < 1e-13);  // q * h(0,0), and the symbol has no mean
    }
}

TEST_CASE("third-flux intervals hit the algebraic edges") {
  // roots of E^3 - 6E = +-4: bands [-1-sqrt3, -2], [1-sqrt3, sqrt3-1], [2, 1+sqrt3]
  auto rows = butterfly_scan(cos_symbol(), 3, 96, 96);
  const double s3 = std::sqrt(3.0);
  const double want[3][2] = {{-1.0 - s3, -2.0}, {1.0 - s3, s3 - 1.0}, {2.0, 1.0 + s3}};
  bool seen = false;
  for (const auto& row : rows) {
    if (row.flux.p != 1 || row.flux.q != 3) continue;
    seen = true;
    REQUIRE(row.intervals.size() == 3);
    for (int b = 0; b < 3; ++b) {
      CHECK(std::abs(row.intervals[b].lo - want[b][0]) < 1e-9);
      CHECK(std::abs(row.intervals[b].hi - want[b][1]) < 1e-9);
    }
  }
  CHECK(seen);
}

TEST_CASE("touching intervals stay separate at half flux") {
  auto rows = butterfly_scan(cos_symbol(), 2, 64, 64);
  for (const auto& row : rows) {
    if (row.flux.q != 2) continue;
    REQUIRE(row.intervals.size() == 2);  // bands touch at zero yet are not merged
    CHECK(std::abs(row.intervals[0].hi - 0.0) < 1e-12);
    CHECK(std::abs(row.intervals[1].lo - 0.0) < 1e-12);
  }
}

TEST_CASE("symbol indices map with the second axis negated") {
  FourierPotential V = potential_from_coeffs(
      square(),
      {{{1, 2, 0}, cplx(0.3, 0.1)}, {{-1, -2, 0}, cplx(0.3, -0.1)}}, true);
  HarperSymbol s = potential_symbol(V);
  bool found = false;
  for (const auto& [key, val] : s.h) {
    if (key[0] == 1 && key[1] == -2) {
      CHECK(std::abs(val - cplx(0.3, 0.1)) < 1e-14);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("magnetic band Cherns at third flux sum to zero") {
  HarperModel m{cos_symbol(), make_flux(1, 3)};
  int c0 = magnetic_band_chern(m, 0, 24);
  int c1 = magnetic_band_chern(m, 1, 24);
  int c2 = magnetic_band_chern(m, 2, 24);
  CHECK(c0 + c1 + c2 == 0);
  CHECK(c0 == c2);  // symbol symmetry pairs outer bands
}

TEST_CASE("landau levels broaden by the scaled harper spectrum") {
  FourierPotential V = potential_from_coeffs(
      square(),
      {{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 1.0}, {{0, 1, 0}, 1.0}, {{0, -1, 0}, 1.0}}, true);
  LandauSpectrum ls = landau_effective_spectrum(V, 2.0 * M_PI / 3.0, 0, 8, 48);
  CHECK(ls.flux.p == 1);
  CHECK(ls.flux.q == 3);
  CHECK(ls.approx_error < 1e-12);
  REQUIRE(!ls.intervals.empty());
  // affine image of the harper range: (level + 1/2) + eta * [lo, hi]
  const double s3 = std::sqrt(3.0);
  double lo = 0.5 + 2.0 * M_PI / 3.0 * (-1.0 - s3);
  double hi = 0.5 + 2.0 * M_PI / 3.0 * (1.0 + s3);
  CHECK(ls.intervals.front().lo == doctest::Approx(lo).epsilon(1e-3));
  CHECK(ls.intervals.back().hi == doctest::Approx(hi).epsilon(1e-3));
}

}  // TEST_SUITE
