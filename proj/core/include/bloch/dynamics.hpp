#pragma once

#include "bloch/fiber.hpp"
#include "bloch/fields.hpp"
#include "bloch/interpolant.hpp"

namespace bloch {

// Interpolated per-band data driving the effective flow: the band energy
// always, and (optionally) the connection and orbital-moment tables taken
// from a gauge-fixed single-band frame.
struct BandGeometry {
  int band = 0;
  int dim = 1;
  FourierInterpolant E;
  std::array<FourierInterpolant, 2> Aconn;
  FourierInterpolant Mz;
  bool has_geometry = false;
};

BandGeometry band_geometry(const BandData& bd, int band, bool with_geometry = true,
                           int halfwidth = 1);

struct SemiclassicalState {
  Vector3d r = Vector3d::Zero();  // macroscopic position
  Vector3d k = Vector3d::Zero();  // quasimomentum, kept reduced to the BZ
  int band = 0;
};

struct HamiltonianEval {
  double h = 0.0;
  Vector3d dk = Vector3d::Zero();
  Vector3d dr = Vector3d::Zero();
};

// h0 = E(k - A(r)) + phi(r), with analytic gradients.
HamiltonianEval h0_eval(const BandGeometry& g, const ExternalFields& f, const Vector3d& r,
                        const Vector3d& k);

// h1 = (grad phi - grad E ^ B) . Aconn - B . M at the shifted momentum.
HamiltonianEval h1_eval(const BandGeometry& g, const ExternalFields& f, const Vector3d& r,
                        const Vector3d& k);

struct Trajectory {
  std::vector<double> s;  // macroscopic time
  std::vector<Vector3d> r;
  std::vector<Vector3d> k;
  std::vector<double> energy;
};

// Fixed-step RK4 for the canonical flow of h0 (+ eps h1 at order 1) in
// macroscopic time.
Trajectory integrate_semiclassics(const BandGeometry& g, const ExternalFields& f,
                                  const SemiclassicalState& s0, int order, double T,
                                  double dt);

// Least-squares slope of log(err) against log(eps).
double fit_order(const std::vector<double>& eps, const std::vector<double>& err);

}  // namespace bloch
