#pragma once

#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "bloch/lattice.hpp"

namespace bloch {

using cplx = std::complex<double>;

// Periodic potential with finite Fourier support on the dual lattice:
// V(x) = sum_n coeff[n] e^{i G(n).x}, G(n) = sum_j n_j dual_j.
// When declared_real, coeff(-n) = conj(coeff(n)) is enforced at construction,
// so every value on the real axis is real up to rounding.
struct FourierPotential {
  Lattice lat;
  std::map<IVec, cplx> coeff;
  bool declared_real = false;

  cplx coefficient(const IVec& n) const;  // 0 for absent keys
  cplx value(const Eigen::Vector3d& x) const;
  double real_value(const Eigen::Vector3d& x) const;  // requires declared_real
};

// Duplicate keys accumulate. Realness violation names the offending n.
FourierPotential potential_from_coeffs(const Lattice& lat,
                                       const std::vector<std::pair<IVec, cplx>>& entries,
                                       bool declared_real);

std::vector<cplx> sample_real_space(const FourierPotential& V,
                                    const std::vector<Eigen::Vector3d>& points);

// Slow pump drive: keyframed coefficients, piecewise linear in t between
// frames. Frames share one lattice; a cyclic path must repeat frame 0's
// coefficients at t = period exactly.
struct PumpKeyframe {
  double t = 0.0;
  FourierPotential V;
};

struct PumpPath {
  double period = 0.0;
  bool cyclic = false;
  int occupied = 1;  // bands filled below the pump gap
  std::vector<PumpKeyframe> frames;
};

PumpPath make_pump_path(double period, bool cyclic, int occupied,
                        std::vector<PumpKeyframe> frames);

// t must lie in [0, period]; coefficients of absent keys interpolate from 0.
FourierPotential potential_at_time(const PumpPath& path, double t);

}  // namespace bloch
