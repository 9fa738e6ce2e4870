#pragma once

#include <functional>

#include "bloch/dynamics.hpp"
#include "bloch/geometry.hpp"
#include "bloch/zak.hpp"

namespace bloch {

struct WavePacket {
  BoxGrid box;
  std::vector<cplx> psi;  // box flatten order, box_norm = 1
};

// psi built from envelope(k) times one frame column through the inverse
// fiber transform, then normalized. Guards: the cell sampling must resolve
// every basis mode, the packet must clear the box boundary, and the result
// must sit in the band to 1e-6.
WavePacket band_wavepacket(const BlochFrame& frame, int column, const BoxGrid& box,
                           const std::function<cplx(const Vector3d&)>& envelope);

struct Observables {
  Lattice lat;
  double eps = 0.0;
  std::vector<double> t;    // microscopic time
  std::vector<double> s;    // eps * t
  std::vector<double> norm;
  std::vector<double> energy;
  std::vector<Vector3d> x;  // microscopic center, unwrapped across the box seam
  std::vector<Vector3d> k;  // BZ-folded mean quasimomentum
};

// Strang splitting of 1/2 |p - A(eps x)|^2 + V(x) + phi(eps x). With A = 0
// the kinetic factor is a plain Fourier multiplier; otherwise each axis is
// handled in its own mixed representation (requires A_j independent of r_j
// and an axis-aligned lattice) and the axis factors are themselves
// symmetrically split. Aborts on norm drift or boundary contact.
Observables split_step_propagate(const WavePacket& w0, const FourierPotential& V,
                                 const ExternalFields& fields, double T, double dt,
                                 int stride = 1);

struct CenterErrors {
  double x = 0.0;
  double k = 0.0;
  int matched = 0;
};

// Sup over shared macroscopic times of |eps <x> - r_sc| and of the BZ
// distance between momentum centers.
CenterErrors compare_centers(const Observables& full, const Trajectory& sc);

}  // namespace bloch
