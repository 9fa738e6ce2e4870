#pragma once

#include <vector>

#include "bloch/fiber.hpp"
#include "bloch/potential.hpp"

namespace bloch {

// V(x - (t/period) a_0): coefficient n gains e^{-2 pi i n_0 t/period}.
// Keyframes at j*period/nframes, endpoint repeated, so the path is cyclic
// and the nodes sample the analytic slide exactly.
PumpPath slider_path(const FourierPotential& v0, double period, int nframes,
                     int occupied);

// Occupied Bloch frames of the snapshot potentials on a (k, t) grid. Time
// nodes are j*period/nt for cyclic paths (closure by periodicity) and
// j*period/(nt-1) otherwise. The projector at a node is frame * frame^dag.
struct ProjectorField {
  KGrid grid;
  std::vector<double> times;
  double period = 0.0;
  bool cyclic = true;
  int occupied = 1;
  PlaneWaveBasis basis;
  std::vector<MatC> U;      // time-major: it * grid.total + k_flat
  std::vector<double> gap;  // per time node, minimized over k

  int nt() const { return static_cast<int>(times.size()); }
  const MatC& frame(int it, int k_flat) const { return U[it * grid.total + k_flat]; }
  MatC projector(int it, int k_flat) const;
};

ProjectorField snapshot_projectors(const PumpPath& path, const KGrid& grid, int nt,
                                   double g_max, int threads = 0);

// Theta(k,t) = -i tr(P [dP/dt, dP/dk]); gauge-free polarization density in
// velocity units, one component per lattice direction.
struct ThetaField {
  KGrid grid;
  std::vector<double> times;
  double period = 0.0;
  bool cyclic = true;
  std::vector<Vector3d> theta;  // time-major, like ProjectorField::U

  int nt() const { return static_cast<int>(times.size()); }
  const Vector3d& at(int it, int k_flat) const { return theta[it * grid.total + k_flat]; }
  Vector3d bz_mean(int it) const;
};

// Projector derivatives: k by centered stencils of order 2*halfwidth with
// dual-shift relabeling across the zone seam (halfwidth 0 picks
// min(5, (N-1)/2) per axis); t spectrally when cyclic, else by centered/
// one-sided differences. Plain low-order differences lose four orders of
// accuracy here, which the polarization quadrature cannot absorb.
ThetaField theta_field(const ProjectorField& pf, int halfwidth = 0);

struct Polarization {
  Vector3d raw = Vector3d::Zero();     // -(2pi)^-d int dt int dk Theta
  Vector3d quanta = Vector3d::Zero();  // cell-normalized; equals raw when d = 1
};

// Rectangle rule in k (exact for the periodic integrand); rectangle in t
// when cyclic, trapezoid otherwise.
Polarization ksv_polarization(const ThetaField& tf);

// Chern number of the occupied frames over the (k, t) torus, d = 1 cyclic
// paths. Orientation: a pump sliding toward +x reports +1, matching the
// sign of ksv_polarization quanta.
int pump_chern(const ProjectorField& pf);

// Theta for a single occupied band from a smooth periodic frame:
// -d/dt A_k - d/dk phi_B with A_k = i<u, du/dk> and phi_B = -i<u, du/dt>.
// Needs a trivial bundle (pump_chern = 0) for the global frame to exist;
// cross-checks theta_field through an independent formula.
ThetaField frame_theta(const ProjectorField& pf, int halfwidth = 0);

// Filled-band time-dependent fiber evolution i eps du/ds = H(k,s) u over one
// cycle in slow time s, Magnus midpoint steps (exactly unitary). J is the
// BZ-averaged velocity expectation; raw = int J dt_micro = (1/eps) int J ds,
// quanta = raw / cell length.
struct PropagatedPump {
  double eps = 0.0;
  double period = 0.0;
  std::vector<double> times;    // slow-time sample nodes (strided)
  std::vector<double> current;  // J at the sample nodes
  double raw = 0.0;
  double quanta = 0.0;
};

PropagatedPump propagated_polarization(const PumpPath& path, int nk, double g_max,
                                       double eps, double dt, int threads = 0);

}  // namespace bloch
