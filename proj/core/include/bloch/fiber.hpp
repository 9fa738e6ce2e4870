#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bloch/lattice.hpp"
#include "bloch/potential.hpp"

namespace bloch {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

// Plane waves with |G| <= g_max, ordered by (|G|^2, n_1, n_2, n_3).
// The ball is closed under G -> -G and contains G = 0, so time-reversal
// and inversion act within the truncated basis exactly.
struct PlaneWaveBasis {
  Lattice lat;
  double g_max = 0.0;
  std::vector<IVec> index;
  std::vector<Eigen::Vector3d> g;

  int size() const { return static_cast<int>(index.size()); }
  int find(const IVec& n) const;  // -1 when absent
};

PlaneWaveBasis make_basis(const Lattice& lat, double g_max);

// Smallest cutoff whose ball strictly contains the current one.
double next_shell_cutoff(const PlaneWaveBasis& b);

// H_{GG'}(k) = 1/2 |k+G|^2 delta_{GG'} + Vhat(G-G'). With spin_orbit the
// basis doubles (row 2g+s, spin fastest) and gains
// 1/4 sigma . (i Vhat(G-G') (G-G') x (k+G')), the plane-wave form of
// 1/4 sigma . (grad V x (-i grad + k)).
struct FiberMatrix {
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  const PlaneWaveBasis* basis = nullptr;
  bool spin_orbit = false;
  MatC H;
};

FiberMatrix build_fiber(const FourierPotential& V, const Eigen::Vector3d& k,
                        const PlaneWaveBasis& basis, bool spin_orbit);

struct FiberSolution {
  Eigen::VectorXd E;  // ascending
  MatC U;             // orthonormal columns, one per band
};

// Deterministic ordering: within clusters split by less than 1e-9 the
// columns sort by descending |largest plane-wave component|, ties by that
// component's basis row.
FiberSolution solve_fiber(const FiberMatrix& F, int n_bands);

struct BandData {
  KGrid grid;
  PlaneWaveBasis basis;
  bool spin_orbit = false;
  int n_bands = 0;
  std::vector<Eigen::VectorXd> E;  // per flattened k
  std::vector<MatC> U;
};

BandData band_structure(const FourierPotential& V, const KGrid& grid,
                        const PlaneWaveBasis& basis, int n_bands, bool spin_orbit,
                        int threads = 0);

// Distance from the window [first, first+count) to the rest of the spectrum,
// minimized over the grid. The band just above the window must have been
// computed, otherwise the gap cannot be bounded.
double check_gap(const BandData& bd, int first, int count);

}  // namespace bloch
