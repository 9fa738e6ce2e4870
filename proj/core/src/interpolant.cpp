#include "bloch/interpolant.hpp"

#include <cmath>

#include <fftw3.h>

#include "bloch/errors.hpp"
#include "fftw_lock.hpp"

namespace bloch {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;

// Per-axis basis factor and its first two beta-derivatives at one bin.
// Normal bins carry exp(i 2 pi n beta) with the folded mode n and the
// (-1)^l node-offset sign; the even-N half bin becomes a cosine.
struct AxisFactor {
  cplxv f, d1, d2;
};

void axis_table(int N, int l, double beta, AxisFactor& out) {
  double sign = (l % 2 == 0) ? 1.0 : -1.0;
  if (N % 2 == 0 && l == N / 2) {
    double w = kTwoPi / 2.0 * N;  // pi N
    out.f = sign * std::cos(w * beta);
    out.d1 = -sign * w * std::sin(w * beta);
    out.d2 = -sign * w * w * std::cos(w * beta);
    return;
  }
  int n = (l <= N / 2) ? l : l - N;
  cplxv e = sign * std::polar(1.0, kTwoPi * n * beta);
  cplxv iw(0.0, kTwoPi * n);
  out.f = e;
  out.d1 = iw * e;
  out.d2 = iw * iw * e;
}

}  // namespace

FourierInterpolant interpolate_on_grid(const KGrid& grid, const Eigen::VectorXd& samples) {
  if (samples.size() != grid.total)
    throw config_error("interpolant sample count does not match the grid");
  FourierInterpolant out;
  out.lat = grid.lat;
  out.size = grid.size;
  out.d.resize(grid.total);

  std::vector<fftw_complex> buf(grid.total);
  for (int i = 0; i < grid.total; ++i) {
    buf[i][0] = samples[i];
    buf[i][1] = 0.0;
  }
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_3d(grid.size[0], grid.size[1], grid.size[2], buf.data(), buf.data(),
                            FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  for (int i = 0; i < grid.total; ++i)
    out.d[i] = cplxv(buf[i][0], buf[i][1]) / static_cast<double>(grid.total);
  return out;
}

FourierInterpolant::Eval FourierInterpolant::eval(const Vector3d& k) const {
  Vector3d beta = lat.dual_coords(k);
  const int N0 = size[0], N1 = size[1], N2 = size[2];

  std::vector<AxisFactor> t0(N0), t1(N1), t2(N2);
  for (int l = 0; l < N0; ++l) axis_table(N0, l, beta[0], t0[l]);
  for (int l = 0; l < N1; ++l) axis_table(N1, l, beta[1], t1[l]);
  for (int l = 0; l < N2; ++l) axis_table(N2, l, beta[2], t2[l]);

  // Separable partial sums; indices into acc are derivative orders per axis
  // with total order <= 2.
  cplxv v = 0.0;
  cplxv g0 = 0.0, g1 = 0.0, g2 = 0.0;
  cplxv h00 = 0.0, h11 = 0.0, h22 = 0.0, h01 = 0.0, h02 = 0.0, h12 = 0.0;
  int idx = 0;
  for (int a = 0; a < N0; ++a) {
    cplxv s_v = 0.0, s_g1 = 0.0, s_g2 = 0.0, s_h11 = 0.0, s_h22 = 0.0, s_h12 = 0.0;
    for (int b = 0; b < N1; ++b) {
      cplxv r_v = 0.0, r_g2 = 0.0, r_h22 = 0.0;
      for (int c = 0; c < N2; ++c, ++idx) {
        cplxv w = d[idx];
        r_v += w * t2[c].f;
        r_g2 += w * t2[c].d1;
        r_h22 += w * t2[c].d2;
      }
      s_v += r_v * t1[b].f;
      s_g1 += r_v * t1[b].d1;
      s_h11 += r_v * t1[b].d2;
      s_g2 += r_g2 * t1[b].f;
      s_h12 += r_g2 * t1[b].d1;
      s_h22 += r_h22 * t1[b].f;
    }
    v += s_v * t0[a].f;
    g0 += s_v * t0[a].d1;
    h00 += s_v * t0[a].d2;
    g1 += s_g1 * t0[a].f;
    h01 += s_g1 * t0[a].d1;
    g2 += s_g2 * t0[a].f;
    h02 += s_g2 * t0[a].d1;
    h11 += s_h11 * t0[a].f;
    h12 += s_h12 * t0[a].f;
    h22 += s_h22 * t0[a].f;
  }

  // Chain from dual coordinates to k: d beta_j / d k_a = basis(a,j) / 2 pi.
  Eigen::Matrix3d J = lat.basis / kTwoPi;
  Vector3d gb(g0.real(), g1.real(), g2.real());
  Eigen::Matrix3d hb;
  hb << h00.real(), h01.real(), h02.real(),
        h01.real(), h11.real(), h12.real(),
        h02.real(), h12.real(), h22.real();
  Eval out;
  out.v = v.real();
  out.g = J * gb;
  out.h = J * hb * J.transpose();
  return out;
}

double FourierInterpolant::value(const Vector3d& k) const { return eval(k).v; }
Vector3d FourierInterpolant::grad(const Vector3d& k) const { return eval(k).g; }
Eigen::Matrix3d FourierInterpolant::hess(const Vector3d& k) const { return eval(k).h; }

}  // namespace bloch
