#include "bloch/dynamics.hpp"

#include <cmath>

#include "bloch/errors.hpp"
#include "bloch/geometry.hpp"

namespace bloch {

BandGeometry band_geometry(const BandData& bd, int band, bool with_geometry, int halfwidth) {
  BandGeometry g;
  g.band = band;
  g.dim = bd.grid.lat.dim;
  Eigen::VectorXd samples(bd.grid.total);
  for (int flat = 0; flat < bd.grid.total; ++flat) samples[flat] = bd.E[flat][band];
  g.E = interpolate_on_grid(bd.grid, samples);
  if (!with_geometry) return g;
  if (g.dim > 2) throw config_error("first-order band geometry supports dimension <= 2");

  BlochFrame frame = fix_gauge(make_frame(bd, band, 1));
  for (int axis = 0; axis < g.dim; ++axis) {
    Eigen::MatrixXd A = berry_connection(frame, axis, halfwidth);
    g.Aconn[axis] = interpolate_on_grid(bd.grid, A.col(0));
  }
  Eigen::VectorXd mz = Eigen::VectorXd::Zero(bd.grid.total);
  if (g.dim == 2)
    for (int flat = 0; flat < bd.grid.total; ++flat)
      mz[flat] = rammal_wilkinson(bd, band, flat).M[2];
  g.Mz = interpolate_on_grid(bd.grid, mz);
  g.has_geometry = true;
  return g;
}

HamiltonianEval h0_eval(const BandGeometry& g, const ExternalFields& f, const Vector3d& r,
                        const Vector3d& k) {
  Vector3d kt = k - f.Avec(r);
  FourierInterpolant::Eval e = g.E.eval(kt);
  HamiltonianEval out;
  out.h = e.v + f.phi.value(r);
  out.dk = e.g;
  out.dr = -f.Ajac(r).transpose() * e.g + f.phi.grad(r);
  return out;
}

HamiltonianEval h1_eval(const BandGeometry& g, const ExternalFields& f, const Vector3d& r,
                        const Vector3d& k) {
  if (!g.has_geometry)
    throw config_error("first-order dynamics needs connection and moment tables");
  Vector3d kt = k - f.Avec(r);
  FourierInterpolant::Eval eE = g.E.eval(kt);
  FourierInterpolant::Eval eM = g.Mz.eval(kt);
  std::array<FourierInterpolant::Eval, 2> eA;
  for (int j = 0; j < g.dim; ++j) eA[j] = g.Aconn[j].eval(kt);

  const Vector3d G = f.phi.grad(r);
  const double Bz = f.Bfield(r)[2];
  const Eigen::Matrix3d Hphi = f.phi.hess(r);
  const Eigen::Matrix3d JA = f.Ajac(r);
  const Eigen::Matrix3d JB = f.Bjac(r);

  // (grad E ^ B) has components (E_1 Bz, -E_0 Bz, 0) for normal B.
  auto wedge = [&Bz](const Vector3d& w) { return Vector3d(w[1] * Bz, -w[0] * Bz, 0.0); };
  Vector3d WB = wedge(eE.g);

  HamiltonianEval out;
  for (int j = 0; j < g.dim; ++j) out.h += (G[j] - WB[j]) * eA[j].v;
  out.h -= Bz * eM.v;

  // d/dk through the shifted momentum only.
  Vector3d dk = Vector3d::Zero();
  for (int a = 0; a < g.dim; ++a) {
    double t = 0.0;
    Vector3d dWB(eE.h(1, a) * Bz, -eE.h(0, a) * Bz, 0.0);
    for (int j = 0; j < g.dim; ++j) t += -dWB[j] * eA[j].v + (G[j] - WB[j]) * eA[j].g[a];
    t -= Bz * eM.g[a];
    dk[a] = t;
  }
  out.dk = dk;

  // d/dr: explicit field variation plus the -dA/dr chain through kt.
  Vector3d dr = Vector3d::Zero();
  for (int b = 0; b < g.dim; ++b) {
    double t = 0.0;
    double dBz = JB(2, b);
    Vector3d dWB(eE.g[1] * dBz, -eE.g[0] * dBz, 0.0);
    for (int j = 0; j < g.dim; ++j) t += (Hphi(j, b) - dWB[j]) * eA[j].v;
    t -= dBz * eM.v;
    for (int c = 0; c < g.dim; ++c) t -= dk[c] * JA(c, b);
    dr[b] = t;
  }
  out.dr = dr;
  return out;
}

Trajectory integrate_semiclassics(const BandGeometry& g, const ExternalFields& f,
                                  const SemiclassicalState& s0, int order, double T,
                                  double dt) {
  if (dt <= 0.0 || T <= 0.0) throw config_error("time horizon and step must be positive");
  if (order != 0 && order != 1) throw config_error("semiclassical order must be 0 or 1");
  const long n = std::max(1L, std::lround(T / dt));
  const double h = T / n;

  auto deriv = [&](const Vector3d& r, const Vector3d& k, Vector3d& rdot, Vector3d& kdot) {
    HamiltonianEval e = h0_eval(g, f, r, k);
    if (order == 1) {
      HamiltonianEval e1 = h1_eval(g, f, r, k);
      e.dk += f.eps * e1.dk;
      e.dr += f.eps * e1.dr;
    }
    rdot = e.dk;
    kdot = -e.dr;
  };
  auto energy = [&](const Vector3d& r, const Vector3d& k) {
    double v = h0_eval(g, f, r, k).h;
    if (order == 1) v += f.eps * h1_eval(g, f, r, k).h;
    return v;
  };

  Trajectory tr;
  tr.s.reserve(n + 1);
  tr.r.reserve(n + 1);
  tr.k.reserve(n + 1);
  tr.energy.reserve(n + 1);
  Vector3d r = s0.r, k = s0.k;
  tr.s.push_back(0.0);
  tr.r.push_back(r);
  tr.k.push_back(k);
  tr.energy.push_back(energy(r, k));

  Vector3d r1, k1, r2, k2, r3, k3, r4, k4;
  for (long i = 0; i < n; ++i) {
    deriv(r, k, r1, k1);
    deriv(r + 0.5 * h * r1, k + 0.5 * h * k1, r2, k2);
    deriv(r + 0.5 * h * r2, k + 0.5 * h * k2, r3, k3);
    deriv(r + h * r3, k + h * k3, r4, k4);
    r += (h / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    k += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    k = reduce_to_bz(g.E.lat, k);
    tr.s.push_back((i + 1) * h);
    tr.r.push_back(r);
    tr.k.push_back(k);
    tr.energy.push_back(energy(r, k));
  }
  return tr;
}

double fit_order(const std::vector<double>& eps, const std::vector<double>& err) {
  if (eps.size() != err.size() || eps.size() < 2)
    throw config_error("order fit needs matching sweeps of at least two points");
  double sx = 0.0, sy = 0.0;
  const int n = static_cast<int>(eps.size());
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    if (eps[i] <= 0.0 || err[i] <= 0.0)
      throw config_error("order fit needs positive epsilons and errors");
    x[i] = std::log(eps[i]);
    y[i] = std::log(err[i]);
    sx += x[i];
    sy += y[i];
  }
  sx /= n;
  sy /= n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (x[i] - sx) * (y[i] - sy);
    den += (x[i] - sx) * (x[i] - sx);
  }
  return num / den;
}

}  // namespace bloch
