#include "bloch/fields.hpp"

#include <cmath>

#include "bloch/errors.hpp"

namespace bloch {
namespace {

double int_pow(double x, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= x;
  return v;
}

}  // namespace

double FieldTerm::value(const Vector3d& r) const {
  if (kind == Kind::poly) {
    double v = coeff;
    for (int j = 0; j < 3; ++j) v *= int_pow(r[j], expo[j]);
    return v;
  }
  return coeff * std::cos(wave.dot(r) + phase);
}

Vector3d FieldTerm::grad(const Vector3d& r) const {
  Vector3d g = Vector3d::Zero();
  if (kind == Kind::poly) {
    for (int j = 0; j < 3; ++j) {
      if (expo[j] == 0) continue;
      double v = coeff * expo[j] * int_pow(r[j], expo[j] - 1);
      for (int l = 0; l < 3; ++l)
        if (l != j) v *= int_pow(r[l], expo[l]);
      g[j] = v;
    }
    return g;
  }
  return (-coeff * std::sin(wave.dot(r) + phase)) * wave;
}

Eigen::Matrix3d FieldTerm::hess(const Vector3d& r) const {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  if (kind == Kind::poly) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        std::array<int, 3> e = expo;
        double f = coeff;
        f *= e[a];
        if (e[a] > 0) --e[a];
        f *= e[b];
        if (e[b] > 0) --e[b];
        if (f == 0.0) continue;
        for (int l = 0; l < 3; ++l) f *= int_pow(r[l], e[l]);
        h(a, b) = f;
      }
    }
    return h;
  }
  return (-coeff * std::cos(wave.dot(r) + phase)) * (wave * wave.transpose());
}

double ScalarField::value(const Vector3d& r) const {
  double v = 0.0;
  for (const auto& t : terms) v += t.value(r);
  return v;
}

Vector3d ScalarField::grad(const Vector3d& r) const {
  Vector3d g = Vector3d::Zero();
  for (const auto& t : terms) g += t.grad(r);
  return g;
}

Eigen::Matrix3d ScalarField::hess(const Vector3d& r) const {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (const auto& t : terms) h += t.hess(r);
  return h;
}

Vector3d ExternalFields::Efield(const Vector3d& r) const { return -phi.grad(r); }

Vector3d ExternalFields::Avec(const Vector3d& r) const {
  return Vector3d(A[0].value(r), A[1].value(r), A[2].value(r));
}

Eigen::Matrix3d ExternalFields::Ajac(const Vector3d& r) const {
  Eigen::Matrix3d j;
  for (int i = 0; i < 3; ++i) j.row(i) = A[i].grad(r).transpose();
  return j;
}

Vector3d ExternalFields::Bfield(const Vector3d& r) const {
  Eigen::Matrix3d j = Ajac(r);
  return Vector3d(j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1));
}

Eigen::Matrix3d ExternalFields::Bjac(const Vector3d& r) const {
  std::array<Eigen::Matrix3d, 3> h;
  for (int i = 0; i < 3; ++i) h[i] = A[i].hess(r);
  Eigen::Matrix3d out;
  for (int b = 0; b < 3; ++b) {
    out(0, b) = h[2](1, b) - h[1](2, b);
    out(1, b) = h[0](2, b) - h[2](0, b);
    out(2, b) = h[1](0, b) - h[0](1, b);
  }
  return out;
}

bool ExternalFields::has_A() const {
  for (const auto& c : A)
    if (!c.terms.empty()) return true;
  return false;
}

ExternalFields make_fields(int dim, double eps, ScalarField phi,
                           std::array<ScalarField, 3> A) {
  if (dim < 1 || dim > 3) throw config_error("field dimension must be 1, 2 or 3");
  if (eps < 0.0) throw config_error("eps must be nonnegative");
  auto uses_high_axis = [dim](const FieldTerm& t) {
    for (int j = dim; j < 3; ++j)
      if (t.expo[j] != 0 || t.wave[j] != 0.0) return true;
    return false;
  };
  for (const auto& t : phi.terms)
    if (uses_high_axis(t))
      throw config_error("scalar potential depends on a coordinate beyond the lattice dimension");
  for (int i = 0; i < 3; ++i)
    for (const auto& t : A[i].terms) {
      if (uses_high_axis(t))
        throw config_error("vector potential depends on a coordinate beyond the lattice dimension");
      if (i >= dim && t.coeff != 0.0)
        throw config_error("vector potential component beyond the lattice dimension must vanish");
    }
  ExternalFields f;
  f.dim = dim;
  f.eps = eps;
  f.phi = std::move(phi);
  f.A = std::move(A);
  return f;
}

}  // namespace bloch
