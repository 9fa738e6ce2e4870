#pragma once

#include <functional>
#include <vector>

#include "bloch/fiber.hpp"

namespace bloch {

// u(k + sum_j s_j dual_j) from u(k): component G of the result is component
// G+s of the input. Components pushed outside the cutoff ball drop, which is
// the truncation seam; keep a margin of shells around the bands in use.
MatC relabel_columns(const PlaneWaveBasis& basis, bool spin_orbit, const MatC& U,
                     const IVec& s);

// Unitary polar factor of a square near-unitary overlap matrix.
MatC polar_unitary(const MatC& x);

// Im log det[<u1,u2><u2,u3><u3,u4><u4,u1>]; the gauge-invariant loop phase.
// Any link with |det| < 1e-6 signals a grid too coarse for the window.
double plaquette_phase(const MatC& u1, const MatC& u2, const MatC& u3, const MatC& u4);

namespace detail {

// Frames on a periodic chain / torus with explicit closure maps: close_j
// turns the frame at index 0 into the frame one past the end along axis j
// (basis relabeling for Brillouin-zone axes, identity for literally periodic
// axes). Index layout is row-major with axis 2 fastest.
using Closure = std::function<MatC(const MatC&)>;

struct GaugeFix {
  std::vector<MatC> U;
  bool periodizable = true;
  int winding = 0;  // det-phase winding of the column holonomy (axis-2 obstruction)
};

GaugeFix fix_gauge_line(std::vector<MatC> U, const Closure& close);
GaugeFix fix_gauge_torus(std::vector<MatC> U, int n1, int n2, const Closure& close1,
                         const Closure& close2);

// Per-plaquette loop phases on the torus, plaquette (i,j) spanning
// (i,j) -> (i+1,j) -> (i+1,j+1) -> (i,j+1).
std::vector<double> plaquette_field(const std::vector<MatC>& U, int n1, int n2,
                                    const Closure& close1, const Closure& close2);

}  // namespace detail

// Eigenvector window over a k-grid. Constructed from BandData with the gap
// certified; gauge starts raw (per-k eigensolver phases).
struct BlochFrame {
  KGrid grid;
  PlaneWaveBasis basis;
  bool spin_orbit = false;
  int first_band = 0;
  int band_count = 1;
  double gap = 0.0;
  enum class Gauge { raw, periodic } gauge = Gauge::raw;
  bool periodizable = true;
  std::vector<MatC> U;
};

BlochFrame make_frame(const BandData& bd, int first_band, int band_count);

// Parallel transport along axis-1 lines then axis-2 columns, residual loop
// phases spread uniformly. d=2 frames with nonzero det-phase winding cannot
// be periodized and come back flagged.
BlochFrame fix_gauge(const BlochFrame& f);

// i<phi_b, d phi_b / dk_axis> per band via centered differences (order
// 2*halfwidth) with relabeled wrap. Demands a periodic gauge.
Eigen::MatrixXd berry_connection(const BlochFrame& f, int axis, int halfwidth = 1);

struct BerryField {
  KGrid grid;
  Eigen::VectorXd F;       // plaquette phases, flattened like the grid (d=2)
  double total = 0.0;      // sum of F
  int chern = 0;
  double residual = 0.0;   // |total/2pi - chern|
};

// Gauge-invariant plaquette curvature over the full BZ torus (d=2).
BerryField berry_curvature(const BlochFrame& f);

// Rounded quantized total; residual above 1e-9 is an error.
int chern_number(BerryField& field);

// Wilson-loop phase around the BZ cycle; d=1 frames. Gauge invariant.
double zak_phase(const BlochFrame& f);
// d=2: one Wilson phase per transverse node, looping along `axis`.
std::vector<double> zak_phase_lines(const BlochFrame& f, int axis);

struct RammalWilkinson {
  Eigen::Vector3d M = Eigen::Vector3d::Zero();
  double tail = 0.0;  // magnitude contributed by the top tenth of computed bands
};

// M_l = 1/2 i eps_{lij} <d_i phi | (H - E_n) | d_j phi> through the
// sum-over-bands form with the velocity matrix (k+G) delta_{GG'}; truncated
// at the computed band count. Near-degeneracy |E_m - E_n| < 1e-9 is an error.
RammalWilkinson rammal_wilkinson(const BandData& bd, int band, int k_flat);

}  // namespace bloch
