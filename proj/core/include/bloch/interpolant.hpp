#pragma once

#include "bloch/lattice.hpp"

namespace bloch {

using cplxv = std::complex<double>;

// Trigonometric interpolant of a real scalar sampled on a KGrid. Exactly
// dual-lattice periodic; the even-size Nyquist mode enters as a cosine so
// the interpolant stays real and its node derivatives stay consistent.
struct FourierInterpolant {
  Lattice lat;
  IVec size{1, 1, 1};
  Eigen::VectorXcd d;  // DFT bins / Ntot, KGrid flatten order

  double value(const Vector3d& k) const;
  Vector3d grad(const Vector3d& k) const;
  Eigen::Matrix3d hess(const Vector3d& k) const;

  struct Eval {
    double v = 0.0;
    Vector3d g = Vector3d::Zero();
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  };
  Eval eval(const Vector3d& k) const;  // one pass for all three
};

FourierInterpolant interpolate_on_grid(const KGrid& grid, const Eigen::VectorXd& samples);

}  // namespace bloch
