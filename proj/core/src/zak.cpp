#include "bloch/zak.hpp"

#include <fftw3.h>

#include <cmath>

#include "bloch/errors.hpp"
#include "fftw_lock.hpp"

namespace bloch {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

int BoxGrid::total_points() const {
  return axis_points(0) * axis_points(1) * axis_points(2);
}

int BoxGrid::cell_points() const { return samples[0] * samples[1] * samples[2]; }

Eigen::Vector3d BoxGrid::point(const IVec& j) const {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int ax = 0; ax < lat.dim; ++ax)
    x += (static_cast<double>(j[ax]) / samples[ax]) * lat.basis.col(ax);
  return x;
}

int BoxGrid::flatten(const IVec& j) const {
  return (j[0] * axis_points(1) + j[1]) * axis_points(2) + j[2];
}

IVec BoxGrid::unflatten(int flat) const {
  IVec j;
  j[2] = flat % axis_points(2);
  flat /= axis_points(2);
  j[1] = flat % axis_points(1);
  j[0] = flat / axis_points(1);
  return j;
}

double BoxGrid::point_measure() const { return lat.cell_volume / cell_points(); }

BoxGrid make_box(const Lattice& lat, const IVec& cells, const IVec& samples) {
  BoxGrid b;
  b.lat = lat;
  b.cells = {1, 1, 1};
  b.samples = {1, 1, 1};
  for (int j = 0; j < lat.dim; ++j) {
    if (cells[j] < 1 || samples[j] < 1)
      throw config_error("box cells and samples per cell must be at least 1");
    b.cells[j] = cells[j];
    b.samples[j] = samples[j];
  }
  return b;
}

namespace {

// Repack box data (axis index c*S+s, last axis fastest) into cell-major
// order: row = flattened cell, column = flattened offset.
void repack_to_cells(const BoxGrid& box, const std::vector<cplx>& psi,
                     std::vector<cplx>& out) {
  const IVec L = box.cells, S = box.samples;
  out.resize(psi.size());
  for (int c0 = 0; c0 < L[0]; ++c0)
    for (int s0 = 0; s0 < S[0]; ++s0)
      for (int c1 = 0; c1 < L[1]; ++c1)
        for (int s1 = 0; s1 < S[1]; ++s1)
          for (int c2 = 0; c2 < L[2]; ++c2)
            for (int s2 = 0; s2 < S[2]; ++s2) {
              int src = box.flatten({c0 * S[0] + s0, c1 * S[1] + s1, c2 * S[2] + s2});
              int cflat = (c0 * L[1] + c1) * L[2] + c2;
              int sflat = (s0 * S[1] + s1) * S[2] + s2;
              out[cflat * box.cell_points() + sflat] = psi[src];
            }
}

void repack_from_cells(const BoxGrid& box, const std::vector<cplx>& in,
                       std::vector<cplx>& psi) {
  const IVec L = box.cells, S = box.samples;
  psi.resize(in.size());
  for (int c0 = 0; c0 < L[0]; ++c0)
    for (int s0 = 0; s0 < S[0]; ++s0)
      for (int c1 = 0; c1 < L[1]; ++c1)
        for (int s1 = 0; s1 < S[1]; ++s1)
          for (int c2 = 0; c2 < L[2]; ++c2)
            for (int s2 = 0; s2 < S[2]; ++s2) {
              int dst = box.flatten({c0 * S[0] + s0, c1 * S[1] + s1, c2 * S[2] + s2});
              int cflat = (c0 * L[1] + c1) * L[2] + c2;
              int sflat = (s0 * S[1] + s1) * S[2] + s2;
              psi[dst] = in[cflat * box.cell_points() + sflat];
            }
}

int cell_parity_sign(const IVec& c) { return ((c[0] + c[1] + c[2]) & 1) ? -1 : 1; }

void fft_over_cells(const BoxGrid& box, std::vector<cplx>& data, int sign) {
  const int S = box.cell_points();
  int n[3] = {box.cells[0], box.cells[1], box.cells[2]};
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_many_dft(3, n, S, buf, nullptr, S, 1, buf, nullptr, S, 1, sign,
                              FFTW_ESTIMATE);
  }
  if (!plan) throw numerical_error("fft-plan", "FFTW refused the cell transform");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
}

}  // namespace

ZakData zak_forward(const BoxGrid& box, const std::vector<cplx>& psi) {
  if (static_cast<int>(psi.size()) != box.total_points())
    throw config_error("wavefunction size does not match the box grid");
  ZakData z;
  z.kgrid = bz_grid(box.lat, box.cells);
  z.samples = box.samples;

  std::vector<cplx> work;
  repack_to_cells(box, psi, work);

  const int S = box.cell_points();
  const int L = z.kgrid.total;
  for (int cf = 0; cf < L; ++cf) {
    IVec c = z.kgrid.unflatten(cf);
    if (cell_parity_sign(c) < 0)
      for (int s = 0; s < S; ++s) work[cf * S + s] = -work[cf * S + s];
  }

  fft_over_cells(box, work, FFTW_FORWARD);

  z.phi.resize(L, S);
  for (int m = 0; m < L; ++m) {
    Eigen::Vector3d k = z.kgrid.point(m);
    for (int s0 = 0; s0 < box.samples[0]; ++s0)
      for (int s1 = 0; s1 < box.samples[1]; ++s1)
        for (int s2 = 0; s2 < box.samples[2]; ++s2) {
          int sflat = (s0 * box.samples[1] + s1) * box.samples[2] + s2;
          Eigen::Vector3d y = box.point({s0, s1, s2});
          z.phi(m, sflat) = work[m * S + sflat] * std::polar(1.0, -k.dot(y));
        }
  }
  return z;
}

std::vector<cplx> zak_inverse(const ZakData& data, const BoxGrid& box) {
  const int S = box.cell_points();
  const int L = data.kgrid.total;
  for (int j = 0; j < 3; ++j) {
    if (box.cells[j] != data.kgrid.size[j] || box.samples[j] != data.samples[j])
      throw config_error("fiber data and box grids are incommensurate");
  }
  if (data.phi.rows() != L || data.phi.cols() != S)
    throw config_error("fiber data shape does not match its grids");

  std::vector<cplx> work(static_cast<size_t>(L) * S);
  for (int m = 0; m < L; ++m) {
    Eigen::Vector3d k = data.kgrid.point(m);
    for (int s0 = 0; s0 < box.samples[0]; ++s0)
      for (int s1 = 0; s1 < box.samples[1]; ++s1)
        for (int s2 = 0; s2 < box.samples[2]; ++s2) {
          int sflat = (s0 * box.samples[1] + s1) * box.samples[2] + s2;
          Eigen::Vector3d y = box.point({s0, s1, s2});
          work[m * S + sflat] = data.phi(m, sflat) * std::polar(1.0, k.dot(y));
        }
  }

  fft_over_cells(box, work, FFTW_BACKWARD);

  for (int cf = 0; cf < L; ++cf) {
    IVec c = data.kgrid.unflatten(cf);
    double w = cell_parity_sign(c) / static_cast<double>(L);
    for (int s = 0; s < S; ++s) work[cf * S + s] *= w;
  }

  std::vector<cplx> psi;
  repack_from_cells(box, work, psi);
  return psi;
}

double box_norm(const BoxGrid& box, const std::vector<cplx>& psi) {
  double s = 0.0;
  for (const cplx& v : psi) s += std::norm(v);
  return std::sqrt(s * box.point_measure());
}

double zak_norm(const ZakData& data, const BoxGrid& box) {
  double s = 0.0;
  for (int m = 0; m < data.phi.rows(); ++m)
    for (int c = 0; c < data.phi.cols(); ++c) s += std::norm(data.phi(m, c));
  return std::sqrt(s * box.point_measure() / data.kgrid.total);
}

}  // namespace bloch
