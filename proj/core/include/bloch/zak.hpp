#pragma once

#include <vector>

#include "bloch/fiber.hpp"
#include "bloch/lattice.hpp"
#include "bloch/potential.hpp"

namespace bloch {

// Periodic simulation box: cells[j] lattice cells per axis, samples[j] points
// per cell, spacing basis_j / samples_j. Point (c, s) sits at
// sum_j (c_j + s_j / samples_j) basis_j. Flattening is row-major with the
// last axis fastest and the per-axis index j_ax = c_ax * samples_ax + s_ax.
struct BoxGrid {
  Lattice lat;
  IVec cells = {1, 1, 1};
  IVec samples = {1, 1, 1};

  int axis_points(int j) const { return cells[j] * samples[j]; }
  int total_points() const;
  int cell_points() const;
  Eigen::Vector3d point(const IVec& j) const;
  int flatten(const IVec& j) const;
  IVec unflatten(int flat) const;
  double point_measure() const;  // volume element of one sample point
};

BoxGrid make_box(const Lattice& lat, const IVec& cells, const IVec& samples);

// Fiber samples phi(k_m, y_s) on the k-grid conjugate to the box cells:
// phi(k, y) = sum_c e^{-i k.(y + c)} psi(y + c). Row = flattened k index,
// column = flattened offset inside the cell. With the box measure on psi and
// the (cell measure x normalized k sum) on phi the map is unitary.
struct ZakData {
  KGrid kgrid;
  IVec samples = {1, 1, 1};
  Eigen::MatrixXcd phi;
};

ZakData zak_forward(const BoxGrid& box, const std::vector<cplx>& psi);
std::vector<cplx> zak_inverse(const ZakData& data, const BoxGrid& box);

double box_norm(const BoxGrid& box, const std::vector<cplx>& psi);
double zak_norm(const ZakData& data, const BoxGrid& box);

}  // namespace bloch
