#include <cmath>
#include <vector>

#include "doctest.h"

#include "bloch/dynamics.hpp"
#include "bloch/errors.hpp"
#include "bloch/fiber.hpp"
#include "bloch/fields.hpp"
#include "bloch/geometry.hpp"
#include "bloch/interpolant.hpp"
#include "bloch/wavepacket.hpp"
#include "bloch/zak.hpp"

using namespace bloch;

namespace {

Lattice chain() { return make_lattice(1, {Vector3d(2.0 * M_PI, 0, 0)}); }

FourierPotential cos_chain() {
  return potential_from_coeffs(chain(), {{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 1.0}}, true);
}

Lattice square() {
  return make_lattice(2, {Vector3d(2.0 * M_PI, 0, 0), Vector3d(0, 2.0 * M_PI, 0)});
}

FourierPotential square_potential() {
  return potential_from_coeffs(
      square(),
      {{{1, 0, 0}, cplx(0.35, 0.15)}, {{-1, 0, 0}, cplx(0.35, -0.15)},
       {{0, 1, 0}, cplx(0.35, -0.1)}, {{0, -1, 0}, cplx(0.35, 0.1)},
       {{1, 1, 0}, cplx(0.25, 0.2)}, {{-1, -1, 0}, cplx(0.25, -0.2)}},
      true);
}

ScalarField linear_phi(double ex, double ey = 0.0) {
  ScalarField phi;
  FieldTerm tx;
  tx.kind = FieldTerm::Kind::poly;
  tx.coeff = -ex;
  tx.expo = {1, 0, 0};
  if (ex != 0.0) phi.terms.push_back(tx);
  FieldTerm ty;
  ty.kind = FieldTerm::Kind::poly;
  ty.coeff = -ey;
  ty.expo = {0, 1, 0};
  if (ey != 0.0) phi.terms.push_back(ty);
  return phi;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("field terms differentiate consistently") {
  ScalarField f;
  FieldTerm poly;
  poly.kind = FieldTerm::Kind::poly;
  poly.coeff = 0.8;
  poly.expo = {2, 1, 0};
  f.terms.push_back(poly);
  FieldTerm trig;
  trig.kind = FieldTerm::Kind::trig;
  trig.coeff = 0.5;
  trig.wave = Vector3d(0.3, -0.7, 0.0);
  trig.phase = 0.4;
  f.terms.push_back(trig);

  Vector3d r(0.7, -1.2, 0.0);
  double h = 1e-5;
  for (int j = 0; j < 2; ++j) {
    Vector3d dp = Vector3d::Zero(), dm = Vector3d::Zero();
    dp[j] = h;
    dm[j] = -h;
    double fd = (f.value(r + dp) - f.value(r + dm)) / (2 * h);
    CHECK(std::abs(f.grad(r)[j] - fd) < 1e-8);
    for (int i = 0; i < 2; ++i) {
      double fg = (f.grad(r + dp)[i] - f.grad(r + dm)[i]) / (2 * h);
      CHECK(std::abs(f.hess(r)(i, j) - fg) < 1e-7);
    }
  }
}

TEST_CASE("external fields expose E and B consistently") {
  ScalarField phi = linear_phi(0.3, -0.1);
  std::array<ScalarField, 3> A;
  FieldTerm a1;  // A_1 = -0.2 r_2 -> uniform B_3 = 0.2
  a1.kind = FieldTerm::Kind::poly;
  a1.coeff = -0.2;
  a1.expo = {0, 1, 0};
  A[0].terms.push_back(a1);
  ExternalFields f = make_fields(2, 0.1, phi, A);
  Vector3d r(0.4, 0.9, 0.0);
  CHECK((f.Efield(r) - Vector3d(0.3, -0.1, 0.0)).norm() < 1e-12);
  CHECK((f.Bfield(r) - Vector3d(0.0, 0.0, 0.2)).norm() < 1e-12);
  CHECK(f.has_A());

  // terms reaching beyond the declared dimension are rejected
  ScalarField bad;
  FieldTerm tz;
  tz.kind = FieldTerm::Kind::poly;
  tz.coeff = 1.0;
  tz.expo = {0, 0, 1};
  bad.terms.push_back(tz);
  CHECK_THROWS_AS(make_fields(2, 0.1, bad, {}), config_error);
}

TEST_CASE("band interpolants reproduce nodes and stay periodic") {
  Lattice lat = chain();
  KGrid grid = bz_grid(lat, {32, 1, 1});
  PlaneWaveBasis basis = make_basis(lat, 8.5);
  BandData bd = band_structure(cos_chain(), grid, basis, 2, false);
  BandGeometry geom = band_geometry(bd, 0, false);
  for (int m = 0; m < grid.total; ++m)
    CHECK(std::abs(geom.E.value(grid.point(m)) - bd.E[m][0]) < 1e-12);
  Vector3d k(0.1743, 0, 0);
  CHECK(std::abs(geom.E.value(k) - geom.E.value(k + lat.dual_vector(0))) < 1e-12);
}

TEST_CASE("band velocity has zero zone average") {
  Lattice lat = chain();
  KGrid grid = bz_grid(lat, {32, 1, 1});
  PlaneWaveBasis basis = make_basis(lat, 8.5);
  BandData bd = band_structure(cos_chain(), grid, basis, 2, false);
  BandGeometry geom = band_geometry(bd, 0, false);
  double mean = 0.0;
  for (int m = 0; m < grid.total; ++m) mean += geom.E.grad(grid.point(m))[0];
  CHECK(std::abs(mean / grid.total) < 1e-9);
}

TEST_CASE("h0 and h1 gradients match fourth-order differences") {
  Lattice lat = square();
  KGrid grid = bz_grid(lat, {16, 16, 1});
  PlaneWaveBasis basis = make_basis(lat, 3.5);
  BandData bd = band_structure(square_potential(), grid, basis, 2, false);
  BandGeometry geom = band_geometry(bd, 0, true);
  REQUIRE(geom.has_geometry);

  ScalarField phi = linear_phi(0.2, 0.1);
  std::array<ScalarField, 3> A;
  FieldTerm a1;
  a1.kind = FieldTerm::Kind::poly;
  a1.coeff = -0.15;
  a1.expo = {0, 1, 0};
  A[0].terms.push_back(a1);
  ExternalFields f = make_fields(2, 0.05, phi, A);

  Vector3d r(0.31, -0.22, 0.0);
  Vector3d k(0.12, 0.27, 0.0);
  const double h = 1e-3;
  const double w[4] = {1.0 / 12, -2.0 / 3, 2.0 / 3, -1.0 / 12};
  const double off[4] = {-2 * h, -h, h, 2 * h};

  for (auto eval : {h0_eval, h1_eval}) {
    HamiltonianEval e = eval(geom, f, r, k);
    for (int j = 0; j < 2; ++j) {
      double fdk = 0.0, fdr = 0.0;
      for (int t = 0; t < 4; ++t) {
        Vector3d kk = k, rr = r;
        kk[j] += off[t];
        rr[j] += off[t];
        fdk += w[t] * eval(geom, f, r, kk).h / h;
        fdr += w[t] * eval(geom, f, rr, k).h / h;
      }
      CHECK(std::abs(e.dk[j] - fdk) < 1e-7);
      CHECK(std::abs(e.dr[j] - fdr) < 1e-7);
    }
  }
}

TEST_CASE("semiclassics integrates constant force exactly") {
  Lattice lat = chain();
  KGrid grid = bz_grid(lat, {64, 1, 1});
  PlaneWaveBasis basis = make_basis(lat, 8.5);
  BandData bd = band_structure(cos_chain(), grid, basis, 2, false);
  BandGeometry geom = band_geometry(bd, 0, false);
  ExternalFields f = make_fields(1, 0.05, linear_phi(0.25), {});

  SemiclassicalState s0;
  s0.r = Vector3d(0.2, 0, 0);
  s0.k = Vector3d(0.05, 0, 0);
  Trajectory tr = integrate_semiclassics(geom, f, s0, 0, 1.0, 1e-3);
  REQUIRE(!tr.s.empty());
  // k(s) = k0 + E s, reduced to the zone
  double kend = tr.k.back()[0];
  CHECK(std::abs(kend - (0.05 + 0.25 * tr.s.back())) < 1e-10);
  // h = E(k) + phi(r) is conserved along the flow
  double h0 = tr.energy.front();
  for (double e : tr.energy) CHECK(std::abs(e - h0) < 1e-9);
}

TEST_CASE("fit_order recovers synthetic slopes") {
  std::vector<double> eps{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  std::vector<double> err;
  for (double e : eps) err.push_back(3.7 * std::pow(e, 1.7));
  CHECK(fit_order(eps, err) == doctest::Approx(1.7).epsilon(1e-10));
}

TEST_CASE("packets track the order-0 flow in a magnetic field") {
  // 2-d packet in uniform B: the leading flow stays near the measured center,
  // and the order-1 flow conserves its own Hamiltonian
  Lattice lat = square();
  FourierPotential V = square_potential();
  IVec cells{24, 24, 1};
  IVec samples{8, 8, 1};
  KGrid grid = bz_grid(lat, cells);
  PlaneWaveBasis basis = make_basis(lat, 3.5);
  BandData bd = band_structure(V, grid, basis, 2, false);
  BlochFrame frame = fix_gauge(make_frame(bd, 0, 1));
  BandGeometry geom = band_geometry(bd, 0, true);
  BoxGrid box = make_box(lat, cells, samples);

  double eps = 1.0 / 16;
  Vector3d x0 = 12.0 * (lat.vector(0) + lat.vector(1));  // mid-box lattice translate
  std::array<ScalarField, 3> A;
  FieldTerm a1;  // A_1 = -0.3 (r_2 - c): uniform B = 0.3, gauge centered on the packet
  a1.kind = FieldTerm::Kind::poly;
  a1.coeff = -0.3;
  a1.expo = {0, 1, 0};
  A[0].terms.push_back(a1);
  FieldTerm a0;
  a0.kind = FieldTerm::Kind::poly;
  a0.coeff = 0.3 * eps * x0[1];
  a0.expo = {0, 0, 0};
  A[0].terms.push_back(a0);
  ExternalFields fields = make_fields(2, eps, ScalarField{}, A);

  // k-width 0.1 keeps the real-space tail ~6 sigma clear of the boundary shell
  double sigma = 0.4 * std::sqrt(eps);
  Vector3d k0 = 0.2 * lat.dual_vector(0) + 0.1 * lat.dual_vector(1);
  auto env = [&](const Vector3d& k) {
    double d = bz_distance(lat, k, k0);
    return std::polar(std::exp(-0.5 * d * d / (sigma * sigma)), -k.dot(x0));
  };
  WavePacket wp = band_wavepacket(frame, 0, box, env);

  double horizon = 0.5;
  double ds = 0.05;
  int nout = 10;
  long stride = 250;
  double tmicro = horizon / eps;
  double dt = tmicro / (nout * stride);
  Observables obs = split_step_propagate(wp, V, fields, tmicro, dt, stride);

  SemiclassicalState s0;
  s0.r = eps * obs.x.front();
  s0.k = obs.k.front();
  Trajectory t0 = integrate_semiclassics(geom, fields, s0, 0, horizon, ds);
  CenterErrors e0 = compare_centers(obs, t0);
  REQUIRE(e0.matched >= 5);
  CHECK(e0.x < 0.02);

  // the order-1 flow is canonical for h0 + eps h1, so its own energy is a
  // strict invariant of the integration
  Trajectory t1 = integrate_semiclassics(geom, fields, s0, 1, horizon, ds);
  CHECK(std::abs(h1_eval(geom, fields, s0.r, s0.k).h) > 1e-4);
  double drift = 0.0;
  for (double e : t1.energy) drift = std::max(drift, std::abs(e - t1.energy.front()));
  CHECK(drift < 1e-8);
}

TEST_CASE("order-1 flow is equivariant under gauge changes of A") {
  Lattice lat = square();
  KGrid grid = bz_grid(lat, {12, 12, 1});
  PlaneWaveBasis basis = make_basis(lat, 3.5);
  BandData bd = band_structure(square_potential(), grid, basis, 2, false);
  BandGeometry geom = band_geometry(bd, 0, true);

  auto poly = [](double coeff, int e1, int e2) {
    FieldTerm t;
    t.kind = FieldTerm::Kind::poly;
    t.coeff = coeff;
    t.expo = {e1, e2, 0};
    return t;
  };
  double eps = 1.0 / 16;
  std::array<ScalarField, 3> A;
  A[0].terms.push_back(poly(-0.3, 0, 1));  // uniform B = 0.3
  ExternalFields f0 = make_fields(2, eps, ScalarField{}, A);
  // chi = 0.1 r1 r2 leaves B alone; the flow must follow in (r, k - A)
  std::array<ScalarField, 3> Ag = A;
  Ag[0].terms.push_back(poly(0.1, 0, 1));
  Ag[1].terms.push_back(poly(0.1, 1, 0));
  ExternalFields f1 = make_fields(2, eps, ScalarField{}, Ag);

  SemiclassicalState s0;
  s0.r = Vector3d(0.3, -0.2, 0);
  s0.k = Vector3d(0.12, 0.07, 0);
  SemiclassicalState s1 = s0;
  s1.k += Vector3d(0.1 * s0.r[1], 0.1 * s0.r[0], 0);
  Trajectory a = integrate_semiclassics(geom, f0, s0, 1, 0.5, 2e-3);
  Trajectory b = integrate_semiclassics(geom, f1, s1, 1, 0.5, 2e-3);
  REQUIRE(a.r.size() == b.r.size());
  double dr = 0.0, dk = 0.0;
  for (size_t i = 0; i < a.r.size(); ++i) {
    dr = std::max(dr, (a.r[i] - b.r[i]).norm());
    Vector3d ka = a.k[i] - f0.Avec(a.r[i]);
    Vector3d kb = b.k[i] - f1.Avec(b.r[i]);
    dk = std::max(dk, bz_distance(lat, ka, kb));
  }
  CHECK(dr < 1e-9);
  CHECK(dk < 1e-9);
}

}  // TEST_SUITE
