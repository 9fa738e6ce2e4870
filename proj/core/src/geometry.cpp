#include "bloch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

#include "bloch/errors.hpp"
#include "bloch/stencil.hpp"

namespace bloch {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;

double wrap_pi(double x) {
  double y = std::remainder(x, kTwoPi);
  return y;
}

int floor_div(int a, int b) {
  int q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

cplx link_det(const MatC& a, const MatC& b) {
  cplx d = (a.adjoint() * b).determinant();
  if (std::abs(d) < 1e-6)
    throw numerical_error("grid-too-coarse",
                          "frame overlap determinant below 1e-6; refine the grid or widen the band window");
  return d;
}

// H^t for near-unitary H with the determinant phase on a caller-chosen branch
// (det_phase need not be principal). The det-free part takes principal
// eigenphases; an eigenvalue of that part crossing -1 between calls leaves a
// branch seam, which cannot happen for single-column frames.
MatC unitary_fraction(const MatC& H, double det_phase, double t) {
  const int m = static_cast<int>(H.rows());
  const double per = det_phase / m;
  if (m == 1) {
    MatC r(1, 1);
    r(0, 0) = std::polar(1.0, per * t);
    return r;
  }
  MatC Hsu = H * std::polar(1.0, -per);
  Eigen::ComplexSchur<MatC> schur(Hsu);
  const MatC& Z = schur.matrixU();
  VecC f(m);
  for (int i = 0; i < m; ++i)
    f[i] = std::polar(1.0, std::arg(schur.matrixT()(i, i)) * t);
  return std::polar(1.0, per * t) * (Z * f.asDiagonal() * Z.adjoint());
}

// Frame at integer node `m` of the grid, relabeled when `m` lies outside
// [0,N) along any axis.
MatC frame_at(const BlochFrame& f, IVec m) {
  IVec s{0, 0, 0};
  bool shifted = false;
  for (int j = 0; j < f.grid.lat.dim; ++j) {
    int q = floor_div(m[j], f.grid.size[j]);
    if (q != 0) {
      s[j] = q;
      m[j] -= q * f.grid.size[j];
      shifted = true;
    }
  }
  const MatC& u = f.U[f.grid.flatten(m)];
  return shifted ? relabel_columns(f.basis, f.spin_orbit, u, s) : u;
}

}  // namespace

MatC relabel_columns(const PlaneWaveBasis& basis, bool spin_orbit, const MatC& U,
                     const IVec& s) {
  const int spin = spin_orbit ? 2 : 1;
  MatC out = MatC::Zero(U.rows(), U.cols());
  for (int g = 0; g < basis.size(); ++g) {
    IVec src{basis.index[g][0] + s[0], basis.index[g][1] + s[1], basis.index[g][2] + s[2]};
    int gs = basis.find(src);
    if (gs < 0) continue;  // pushed outside the cutoff ball
    for (int sp = 0; sp < spin; ++sp) out.row(g * spin + sp) = U.row(gs * spin + sp);
  }
  return out;
}

MatC polar_unitary(const MatC& x) {
  Eigen::JacobiSVD<MatC> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double plaquette_phase(const MatC& u1, const MatC& u2, const MatC& u3, const MatC& u4) {
  cplx p = link_det(u1, u2) * link_det(u2, u3) * link_det(u3, u4) * link_det(u4, u1);
  return std::arg(p);
}

namespace detail {

GaugeFix fix_gauge_line(std::vector<MatC> U, const Closure& close) {
  const int n = static_cast<int>(U.size());
  for (int m = 1; m < n; ++m)
    U[m] = U[m] * polar_unitary(U[m].adjoint() * U[m - 1]);
  // The chain now has Hermitian-positive link overlaps; the whole loop phase
  // sits on the wrap link. Spread it so every link carries H^{1/n}.
  MatC H = polar_unitary(U[n - 1].adjoint() * close(U[0]));
  const double th = std::arg(H.determinant());
  for (int m = 1; m < n; ++m)
    U[m] = U[m] * unitary_fraction(H, th, double(m) / n);
  GaugeFix out;
  out.U = std::move(U);
  return out;
}

GaugeFix fix_gauge_torus(std::vector<MatC> U, int n1, int n2, const Closure& close1,
                         const Closure& close2) {
  std::vector<MatC> row(n1);
  for (int i = 0; i < n1; ++i) row[i] = U[i * n2];
  GaugeFix base = fix_gauge_line(std::move(row), close1);
  for (int i = 0; i < n1; ++i) U[i * n2] = base.U[i];

  for (int i = 0; i < n1; ++i)
    for (int j = 1; j < n2; ++j)
      U[i * n2 + j] = U[i * n2 + j] * polar_unitary(U[i * n2 + j].adjoint() * U[i * n2 + j - 1]);

  // Column wrap holonomies; their det phase winds around the axis-1 cycle by
  // 2 pi x (first Chern number), the obstruction to a periodic frame.
  std::vector<MatC> H(n1);
  std::vector<double> th(n1), thu(n1);
  for (int i = 0; i < n1; ++i) {
    H[i] = polar_unitary(U[i * n2 + n2 - 1].adjoint() * close2(U[i * n2]));
    th[i] = std::arg(H[i].determinant());
  }
  double acc = 0.0;
  for (int i = 0; i < n1; ++i) acc += wrap_pi(th[(i + 1) % n1] - th[i]);
  GaugeFix out;
  out.winding = static_cast<int>(std::llround(acc / kTwoPi));
  if (out.winding != 0) {
    out.periodizable = false;
    out.U = std::move(U);
    return out;
  }
  thu[0] = th[0];
  for (int i = 1; i < n1; ++i) thu[i] = thu[i - 1] + wrap_pi(th[i] - th[i - 1]);
  for (int i = 0; i < n1; ++i)
    for (int j = 1; j < n2; ++j)
      U[i * n2 + j] = U[i * n2 + j] * unitary_fraction(H[i], thu[i], double(j) / n2);
  out.U = std::move(U);
  return out;
}

std::vector<double> plaquette_field(const std::vector<MatC>& U, int n1, int n2,
                                    const Closure& close1, const Closure& close2) {
  // Link-variable form. The wrap links are computed once and reused by index,
  // so every link determinant enters the plaquette total exactly twice with
  // opposite orientation. The sum then telescopes to 2 pi x (integer) at
  // roundoff even when the closure truncates at the basis edge, and per-node
  // re-gauging cancels within each plaquette exactly.
  auto at = [&](int i, int j) -> const MatC& { return U[i * n2 + j]; };
  std::vector<cplx> lh(static_cast<size_t>(n1) * n2);  // (i,j) -> (i,j+1)
  std::vector<cplx> lv(static_cast<size_t>(n1) * n2);  // (i,j) -> (i+1,j)
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      lh[i * n2 + j] = (j + 1 < n2) ? link_det(at(i, j), at(i, j + 1))
                                    : link_det(at(i, j), close2(at(i, 0)));
      lv[i * n2 + j] = (i + 1 < n1) ? link_det(at(i, j), at(i + 1, j))
                                    : link_det(at(i, j), close1(at(0, j)));
    }
  // Traversal (i,j)->(i,j+1)->(i+1,j+1)->(i+1,j) so that column sums of F step
  // the axis-2 line phases forward: sum_j F(i,j) = zak(i+1) - zak(i) mod 2pi.
  std::vector<double> F(static_cast<size_t>(n1) * n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      cplx p = lh[i * n2 + j] * lv[i * n2 + (j + 1) % n2] *
               std::conj(lh[((i + 1) % n1) * n2 + j]) * std::conj(lv[i * n2 + j]);
      F[i * n2 + j] = std::arg(p);
    }
  return F;
}

}  // namespace detail

BlochFrame make_frame(const BandData& bd, int first_band, int band_count) {
  if (first_band < 0 || band_count < 1)
    throw config_error("band window must have first_band >= 0 and band_count >= 1");
  double g = check_gap(bd, first_band, band_count);
  double scale = 1.0;
  for (int b = first_band; b < first_band + band_count; ++b)
    scale = std::max(scale, std::abs(bd.E[0][b]));
  if (g <= 1e-12 * scale) {
    std::ostringstream w;
    w << "{\"first_band\":" << first_band << ",\"band_count\":" << band_count
      << ",\"gap\":" << g << "}";
    throw numerical_error("gapless-window", "band window is not isolated on this grid", w.str());
  }
  BlochFrame f;
  f.grid = bd.grid;
  f.basis = bd.basis;
  f.spin_orbit = bd.spin_orbit;
  f.first_band = first_band;
  f.band_count = band_count;
  f.gap = g;
  f.U.reserve(bd.U.size());
  for (const auto& u : bd.U)
    f.U.push_back(u.middleCols(first_band, band_count));
  return f;
}

BlochFrame fix_gauge(const BlochFrame& f) {
  const int dim = f.grid.lat.dim;
  if (dim > 2) throw config_error("gauge fixing is implemented for dimension <= 2");
  auto shift = [&](int axis) {
    IVec s{0, 0, 0};
    s[axis] = 1;
    return [&f, s](const MatC& u) { return relabel_columns(f.basis, f.spin_orbit, u, s); };
  };
  BlochFrame out = f;
  if (dim == 1) {
    auto r = detail::fix_gauge_line(f.U, shift(0));
    out.U = std::move(r.U);
    out.periodizable = true;
  } else {
    auto r = detail::fix_gauge_torus(f.U, f.grid.size[0], f.grid.size[1], shift(0), shift(1));
    out.U = std::move(r.U);
    out.periodizable = r.periodizable;
  }
  out.gauge = BlochFrame::Gauge::periodic;
  return out;
}

Eigen::MatrixXd berry_connection(const BlochFrame& f, int axis, int halfwidth) {
  if (f.gauge != BlochFrame::Gauge::periodic)
    throw config_error("berry_connection requires a gauge-fixed frame");
  if (!f.periodizable)
    throw numerical_error("chern-obstruction",
                          "no periodic gauge exists for this window; only gauge-invariant "
                          "quantities are defined");
  const int dim = f.grid.lat.dim;
  if (axis < 0 || axis >= dim) throw config_error("connection axis outside lattice dimension");
  const int n = f.grid.size[axis];
  if (halfwidth < 1 || 2 * halfwidth + 1 > n)
    throw config_error("connection stencil wider than the grid");
  std::vector<double> w = centered_weights(halfwidth);
  const double h = f.grid.step_length(axis);
  Eigen::MatrixXd A(f.grid.total, f.band_count);
  for (int flat = 0; flat < f.grid.total; ++flat) {
    IVec m = f.grid.unflatten(flat);
    VecC acc = VecC::Zero(f.band_count);
    for (int o = -halfwidth; o <= halfwidth; ++o) {
      if (o == 0) continue;
      IVec mm = m;
      mm[axis] += o;
      MatC nb = frame_at(f, mm);
      for (int b = 0; b < f.band_count; ++b)
        acc[b] += w[o + halfwidth] * f.U[flat].col(b).dot(nb.col(b));
    }
    for (int b = 0; b < f.band_count; ++b) A(flat, b) = -std::imag(acc[b]) / h;
  }
  return A;
}

BerryField berry_curvature(const BlochFrame& f) {
  if (f.grid.lat.dim != 2) throw config_error("berry_curvature requires a 2-d lattice");
  auto shift = [&](int axis) {
    IVec s{0, 0, 0};
    s[axis] = 1;
    return [&f, s](const MatC& u) { return relabel_columns(f.basis, f.spin_orbit, u, s); };
  };
  std::vector<double> F =
      detail::plaquette_field(f.U, f.grid.size[0], f.grid.size[1], shift(0), shift(1));
  BerryField out;
  out.grid = f.grid;
  out.F = Eigen::Map<Eigen::VectorXd>(F.data(), static_cast<long>(F.size()));
  out.total = out.F.sum();
  return out;
}

int chern_number(BerryField& field) {
  double c = field.total / kTwoPi;
  field.chern = static_cast<int>(std::llround(c));
  field.residual = std::abs(c - field.chern);
  if (field.residual > 1e-9) {
    std::ostringstream w;
    w << "{\"total_over_2pi\":" << c << ",\"residual\":" << field.residual << "}";
    throw numerical_error("curvature-not-quantized",
                          "plaquette curvature total misses an integer by more than 1e-9",
                          w.str());
  }
  return field.chern;
}

double zak_phase(const BlochFrame& f) {
  if (f.grid.lat.dim != 1) throw config_error("zak_phase requires a 1-d lattice");
  const int n = f.grid.size[0];
  cplx p = 1.0;
  for (int m = 0; m < n; ++m) {
    MatC next = (m + 1 < n) ? f.U[m + 1] : relabel_columns(f.basis, f.spin_orbit, f.U[0], {1, 0, 0});
    p *= link_det(f.U[m], next);
  }
  return -std::arg(p);
}

std::vector<double> zak_phase_lines(const BlochFrame& f, int axis) {
  if (f.grid.lat.dim != 2) throw config_error("zak_phase_lines requires a 2-d lattice");
  if (axis < 0 || axis > 1) throw config_error("loop axis must be 0 or 1");
  const int trans = 1 - axis;
  IVec s{0, 0, 0};
  s[axis] = 1;
  std::vector<double> out(f.grid.size[trans]);
  for (int t = 0; t < f.grid.size[trans]; ++t) {
    cplx p = 1.0;
    for (int m = 0; m < f.grid.size[axis]; ++m) {
      IVec a{0, 0, 0}, b{0, 0, 0};
      a[axis] = m;
      a[trans] = t;
      b = a;
      b[axis] = m + 1;
      MatC next;
      if (b[axis] < f.grid.size[axis]) {
        next = f.U[f.grid.flatten(b)];
      } else {
        b[axis] = 0;
        next = relabel_columns(f.basis, f.spin_orbit, f.U[f.grid.flatten(b)], s);
      }
      p *= link_det(f.U[f.grid.flatten(a)], next);
    }
    out[t] = -std::arg(p);
  }
  return out;
}

RammalWilkinson rammal_wilkinson(const BandData& bd, int band, int k_flat) {
  const Eigen::VectorXd& E = bd.E[k_flat];
  const MatC& U = bd.U[k_flat];
  const int nb = static_cast<int>(E.size());
  if (band < 0 || band >= nb) throw config_error("band index outside computed range");
  const Vector3d k = bd.grid.point(k_flat);
  const int spin = bd.spin_orbit ? 2 : 1;
  const int gs = bd.basis.size();

  // v_i^{nm} = <u_n, (k+G)_i u_m>; spin rows share the momentum diagonal.
  auto velocity = [&](int n, int m) {
    Eigen::Vector3cd v = Eigen::Vector3cd::Zero();
    for (int g = 0; g < gs; ++g) {
      Vector3d kg = k + bd.basis.g[g];
      cplx o = 0.0;
      for (int sp = 0; sp < spin; ++sp)
        o += std::conj(U(g * spin + sp, n)) * U(g * spin + sp, m);
      for (int i = 0; i < 3; ++i) v[i] += kg[i] * o;
    }
    return v;
  };

  RammalWilkinson out;
  const int top = std::max(1, nb / 10);
  for (int m = 0; m < nb; ++m) {
    if (m == band) continue;
    double den = E[band] - E[m];
    if (std::abs(den) < 1e-9) {
      std::ostringstream w;
      w << "{\"k_index\":" << k_flat << ",\"band\":" << band << ",\"other\":" << m
        << ",\"splitting\":" << std::abs(den) << "}";
      throw numerical_error("band-degeneracy",
                            "orbital moment undefined near a band crossing", w.str());
    }
    Eigen::Vector3cd w = velocity(band, m);
    Eigen::Vector3d term;
    term[0] = std::imag(w[1] * std::conj(w[2])) / den;
    term[1] = std::imag(w[2] * std::conj(w[0])) / den;
    term[2] = std::imag(w[0] * std::conj(w[1])) / den;
    out.M += term;
    if (m >= nb - top) out.tail += term.norm();
  }
  return out;
}

}  // namespace bloch
