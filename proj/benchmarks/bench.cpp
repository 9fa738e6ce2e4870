// Microbenchmarks for the hot paths: fiber assembly/diagonalization, grid
// sweeps, magnetic spectra, curvature, split-step stepping, and the pump
// density. Fixtures are built once per benchmark outside the timed loop.
#include <benchmark/benchmark.h>

#include <cmath>

#include "bloch/dynamics.hpp"
#include "bloch/fiber.hpp"
#include "bloch/geometry.hpp"
#include "bloch/magnetic.hpp"
#include "bloch/potential.hpp"
#include "bloch/pump.hpp"
#include "bloch/wavepacket.hpp"

namespace {

using namespace bloch;

Lattice chain() { return make_lattice(1, {Vector3d(2.0 * M_PI, 0.0, 0.0)}); }

Lattice square() {
  return make_lattice(2, {Vector3d(2.0 * M_PI, 0.0, 0.0), Vector3d(0.0, 2.0 * M_PI, 0.0)});
}

FourierPotential cos_chain(const Lattice& lat) {
  return potential_from_coeffs(
      lat, {{IVec{1, 0, 0}, cplx(1.0, 0.0)}, {IVec{-1, 0, 0}, cplx(1.0, 0.0)}}, true);
}

FourierPotential two_harmonic(const Lattice& lat) {
  return potential_from_coeffs(lat,
                               {{IVec{1, 0, 0}, cplx(0.35, 0.15)},
                                {IVec{-1, 0, 0}, cplx(0.35, -0.15)},
                                {IVec{0, 1, 0}, cplx(0.35, -0.1)},
                                {IVec{0, -1, 0}, cplx(0.35, 0.1)},
                                {IVec{1, 1, 0}, cplx(0.25, 0.2)},
                                {IVec{-1, -1, 0}, cplx(0.25, -0.2)}},
                               true);
}

void BM_FiberSolve(benchmark::State& state) {
  Lattice lat = chain();
  FourierPotential V = cos_chain(lat);
  PlaneWaveBasis basis = make_basis(lat, static_cast<double>(state.range(0)) + 0.5);
  Vector3d k = 0.17 * lat.dual_vector(0);
  for (auto _ : state) {
    FiberSolution sol = solve_fiber(build_fiber(V, k, basis, false), 8);
    benchmark::DoNotOptimize(sol.E.data());
  }
  state.SetLabel(std::to_string(basis.size()) + " modes");
}
BENCHMARK(BM_FiberSolve)->Arg(20)->Arg(40);

void BM_BandSweep2D(benchmark::State& state) {
  Lattice lat = square();
  FourierPotential V = two_harmonic(lat);
  PlaneWaveBasis basis = make_basis(lat, 3.5);
  int n = static_cast<int>(state.range(0));
  KGrid grid = bz_grid(lat, IVec{n, n, 1});
  for (auto _ : state) {
    BandData bd = band_structure(V, grid, basis, 3, false);
    benchmark::DoNotOptimize(bd.E.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.total);
}
BENCHMARK(BM_BandSweep2D)->Arg(16)->Arg(32);

void BM_HarperFluxRow(benchmark::State& state) {
  HarperSymbol sym = make_symbol(
      {{{1, 0}, 1.0}, {{-1, 0}, 1.0}, {{0, 1}, 1.0}, {{0, -1}, 1.0}});
  int q = static_cast<int>(state.range(0));
  for (auto _ : state) {
    std::vector<ButterflyRow> rows = butterfly_scan(sym, q, 32, 32);
    benchmark::DoNotOptimize(rows.data());
  }
}
BENCHMARK(BM_HarperFluxRow)->Arg(5)->Arg(12);

void BM_BerryCurvature(benchmark::State& state) {
  Lattice lat = square();
  FourierPotential V = two_harmonic(lat);
  PlaneWaveBasis basis = make_basis(lat, 3.5);
  int n = static_cast<int>(state.range(0));
  KGrid grid = bz_grid(lat, IVec{n, n, 1});
  BandData bd = band_structure(V, grid, basis, 2, false);
  BlochFrame frame = fix_gauge(make_frame(bd, 0, 1));
  for (auto _ : state) {
    BerryField f = berry_curvature(frame);
    benchmark::DoNotOptimize(f.F.data());
  }
}
BENCHMARK(BM_BerryCurvature)->Arg(32)->Arg(64);

void BM_SplitStep(benchmark::State& state) {
  Lattice lat = chain();
  FourierPotential V = cos_chain(lat);
  PlaneWaveBasis basis = make_basis(lat, 8.5);
  KGrid grid = bz_grid(lat, IVec{64, 1, 1});
  BandData bd = band_structure(V, grid, basis, 4, false);
  BlochFrame frame = fix_gauge(make_frame(bd, 2, 1));
  BoxGrid box = make_box(lat, IVec{64, 1, 1}, IVec{20, 1, 1});
  double sigma = 0.05;
  Vector3d k0 = 0.15 * lat.dual_vector(0);
  WavePacket wp = band_wavepacket(frame, 0, box, [&](const Vector3d& k) {
    double r = bz_distance(lat, k, k0);
    return cplx(std::exp(-0.5 * r * r / (sigma * sigma)), 0.0);
  });
  ExternalFields fields = make_fields(1, 1.0 / 32, ScalarField{}, {});
  const int steps = 200;
  for (auto _ : state) {
    Observables obs = split_step_propagate(wp, V, fields, steps * 0.01, 0.01, steps);
    benchmark::DoNotOptimize(obs.x.data());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SplitStep);

void BM_ThetaField(benchmark::State& state) {
  Lattice lat = chain();
  PumpPath path = slider_path(cos_chain(lat), 1.0, 16, 1);
  KGrid grid = bz_grid(lat, IVec{16, 1, 1});
  ProjectorField pf = snapshot_projectors(path, grid, 16, 5.5);
  for (auto _ : state) {
    ThetaField tf = theta_field(pf);
    benchmark::DoNotOptimize(tf.theta.data());
  }
}
BENCHMARK(BM_ThetaField);

}  // namespace

BENCHMARK_MAIN();
