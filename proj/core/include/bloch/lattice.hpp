#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace bloch {

// All geometric vectors are Eigen::Vector3d regardless of the physical
// dimension d in {1,2,3}; components with index >= d are identically zero.
// Integer lattice / dual-lattice coordinates use std::array<int,3> the same
// way. Grids flatten row-major with the last axis fastest.

using IVec = std::array<int, 3>;
using Vector3d = Eigen::Vector3d;

// Bravais lattice with its dual. Dual vectors satisfy
// dual_i . basis_j = 2*pi*delta_ij; columns >= dim are padded with the
// canonical axes (basis) and 2*pi times them (dual) so 3x3 algebra stays
// nonsingular without special cases.
struct Lattice {
  int dim = 0;
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d dual = Eigen::Matrix3d::Identity();
  double cell_volume = 0.0;

  Eigen::Vector3d vector(int j) const { return basis.col(j); }
  Eigen::Vector3d dual_vector(int j) const { return dual.col(j); }

  // beta with k = sum_j beta_j dual_j (zero for axes >= dim).
  Eigen::Vector3d dual_coords(const Eigen::Vector3d& k) const;
  // c with x = sum_j c_j basis_j.
  Eigen::Vector3d lattice_coords(const Eigen::Vector3d& x) const;

  Eigen::Vector3d dual_point(const IVec& n) const;
  Eigen::Vector3d lattice_point(const IVec& c) const;
};

// Throws config_error for dim outside {1,2,3}, wrong vector count, nonzero
// components beyond dim, or a (numerically) singular basis.
Lattice make_lattice(int dim, const std::vector<Eigen::Vector3d>& vectors);

// Uniform Brillouin-zone grid: k(m) = sum_j (m_j/N_j - 1/2) dual_j with
// m_j in [0, N_j). Fractional coordinates live in the half-open box
// [-1/2, 1/2)^d, so the zone-edge point -dual_j/2 is on the grid and its
// positive partner is identified with it. k = 0 is on the grid iff every
// N_j is even. The grid is closed under k -> -k modulo dual translations.
struct KGrid {
  Lattice lat;
  IVec size = {1, 1, 1};
  int total = 1;

  int flatten(const IVec& m) const {
    return (m[0] * size[1] + m[1]) * size[2] + m[2];
  }
  IVec unflatten(int flat) const {
    IVec m;
    m[2] = flat % size[2];
    flat /= size[2];
    m[1] = flat % size[1];
    m[0] = flat / size[1];
    return m;
  }
  int wrap_index(int axis, int m) const {
    int n = size[axis];
    int r = m % n;
    return r < 0 ? r + n : r;
  }

  Eigen::Vector3d point(const IVec& m) const;
  Eigen::Vector3d point(int flat) const { return point(unflatten(flat)); }
  // Step vector along one axis: dual_j / N_j.
  Eigen::Vector3d step(int axis) const { return lat.dual_vector(axis) / size[axis]; }
  double step_length(int axis) const { return step(axis).norm(); }
};

// Throws config_error if any size < 1 or sizes beyond dim differ from 1.
KGrid bz_grid(const Lattice& lat, const IVec& sizes);

// Wraps k into the half-open fundamental domain spanned by the grid
// convention above: fractional coordinates in [-1/2, 1/2). The difference
// k - reduce_to_bz(k) always has integer dual coordinates; the map is
// idempotent.
Eigen::Vector3d reduce_to_bz(const Lattice& lat, const Eigen::Vector3d& k);

// Minimal distance between two k-points modulo dual-lattice translations.
double bz_distance(const Lattice& lat, const Eigen::Vector3d& ka, const Eigen::Vector3d& kb);

}  // namespace bloch
