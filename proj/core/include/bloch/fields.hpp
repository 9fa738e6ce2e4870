#pragma once

#include <vector>

#include "bloch/lattice.hpp"

namespace bloch {

// Closed-form term of a slowly varying field: either a monomial
// c * x0^e0 x1^e1 x2^e2 or a wave c * cos(w.x + phase). Twice differentiable
// by construction, which the semiclassical flow relies on.
struct FieldTerm {
  enum class Kind { poly, trig } kind = Kind::poly;
  double coeff = 0.0;
  std::array<int, 3> expo{0, 0, 0};
  Vector3d wave = Vector3d::Zero();
  double phase = 0.0;

  double value(const Vector3d& r) const;
  Vector3d grad(const Vector3d& r) const;
  Eigen::Matrix3d hess(const Vector3d& r) const;
};

struct ScalarField {
  std::vector<FieldTerm> terms;

  double value(const Vector3d& r) const;
  Vector3d grad(const Vector3d& r) const;
  Eigen::Matrix3d hess(const Vector3d& r) const;
};

struct ExternalFields {
  int dim = 1;
  double eps = 0.0;      // slow scale; 0 means fields off entirely
  ScalarField phi;       // scalar potential of the macroscopic variable
  std::array<ScalarField, 3> A;  // vector potential components

  Vector3d Efield(const Vector3d& r) const;  // -grad phi
  // curl A; in d=2 only the normal component survives, in d=1 it vanishes.
  Vector3d Bfield(const Vector3d& r) const;
  Vector3d Avec(const Vector3d& r) const;
  // dA_i/dr_j
  Eigen::Matrix3d Ajac(const Vector3d& r) const;
  // grad of B component i
  Eigen::Matrix3d Bjac(const Vector3d& r) const;
  bool has_A() const;
};

// Validates that no term depends on coordinates beyond dim and that A
// components beyond dim vanish.
ExternalFields make_fields(int dim, double eps, ScalarField phi,
                           std::array<ScalarField, 3> A);

}  // namespace bloch
