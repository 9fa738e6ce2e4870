#include "bloch/pump.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "bloch/errors.hpp"
#include "bloch/geometry.hpp"
#include "bloch/parallel.hpp"
#include "bloch/stencil.hpp"

namespace bloch {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;

int floor_div(int a, int n) {
  int q = a / n;
  if ((a % n != 0) && ((a < 0) != (n < 0))) --q;
  return q;
}

std::string node_json(int it, double t, int k_flat, int axis = -1) {
  std::ostringstream o;
  o << "{\"t_index\":" << it << ",\"t\":" << t << ",\"k_index\":" << k_flat;
  if (axis >= 0) o << ",\"axis\":" << axis;
  o << "}";
  return o.str();
}

// Smallest singular value of U^dag U'; zero means the occupied subspaces
// have tipped orthogonal between neighboring nodes.
double overlap_floor(const MatC& a, const MatC& b) {
  MatC o = a.adjoint() * b;
  if (o.rows() == 1 && o.cols() == 1) return std::abs(o(0, 0));
  Eigen::JacobiSVD<MatC> svd(o);
  return svd.singularValues().minCoeff();
}

std::array<int, 3> pick_halfwidths(const KGrid& grid, int halfwidth) {
  std::array<int, 3> hw{0, 0, 0};
  for (int j = 0; j < grid.lat.dim; ++j) {
    int h = halfwidth > 0 ? halfwidth : std::min(5, (grid.size[j] - 1) / 2);
    if (h < 1 || 2 * h + 1 > grid.size[j])
      throw config_error("k grid too small for the derivative stencil");
    hw[j] = h;
  }
  return hw;
}

}  // namespace

PumpPath slider_path(const FourierPotential& v0, double period, int nframes,
                     int occupied) {
  if (nframes < 2) throw config_error("slider needs at least two keyframes");
  std::vector<PumpKeyframe> frames(nframes + 1);
  for (int i = 0; i <= nframes; ++i) {
    double t = period * i / nframes;
    FourierPotential v;
    v.lat = v0.lat;
    v.declared_real = v0.declared_real;
    for (const auto& [n, c] : v0.coeff)
      v.coeff[n] = c * std::polar(1.0, -kTwoPi * n[0] * static_cast<double>(i) / nframes);
    frames[i] = PumpKeyframe{t, std::move(v)};
  }
  // Guard against rounding in the endpoint phases.
  frames.back().V.coeff = frames.front().V.coeff;
  frames.back().t = period;
  return make_pump_path(period, true, occupied, std::move(frames));
}

MatC ProjectorField::projector(int it, int k_flat) const {
  const MatC& u = frame(it, k_flat);
  return u * u.adjoint();
}

ProjectorField snapshot_projectors(const PumpPath& path, const KGrid& grid, int nt,
                                   double g_max, int threads) {
  if (nt < 2) throw config_error("pump time grid needs at least two nodes");
  const Lattice& lat = path.frames.front().V.lat;
  if (grid.lat.dim != lat.dim || (grid.lat.basis - lat.basis).norm() > 1e-12)
    throw config_error("pump k grid lattice does not match the path lattice");

  ProjectorField pf;
  pf.grid = grid;
  pf.period = path.period;
  pf.cyclic = path.cyclic;
  pf.occupied = path.occupied;
  pf.basis = make_basis(lat, g_max);
  const int occ = path.occupied;
  if (occ + 1 > pf.basis.size())
    throw config_error("cutoff too small for the occupied window plus one band");

  pf.times.resize(nt);
  for (int it = 0; it < nt; ++it)
    pf.times[it] = path.cyclic ? path.period * it / nt : path.period * it / (nt - 1);

  pf.U.resize(static_cast<size_t>(nt) * grid.total);
  pf.gap.resize(nt);
  for (int it = 0; it < nt; ++it) {
    FourierPotential vt = potential_at_time(path, pf.times[it]);
    BandData bd = band_structure(vt, grid, pf.basis, occ + 1, false, threads);
    double gmin = std::numeric_limits<double>::infinity();
    for (int m = 0; m < grid.total; ++m) {
      double lo = bd.E[m][occ - 1], hi = bd.E[m][occ];
      double g = hi - lo;
      double scale = std::max(1.0, std::abs(lo) + std::abs(hi));
      if (g <= 1e-9 * scale)
        throw numerical_error("gap-closure", "pump gap closed at a (k,t) node",
                              node_json(it, pf.times[it], m));
      gmin = std::min(gmin, g);
      pf.U[static_cast<size_t>(it) * grid.total + m] = bd.U[m].leftCols(occ);
    }
    pf.gap[it] = gmin;
  }
  return pf;
}

Vector3d ThetaField::bz_mean(int it) const {
  Vector3d s = Vector3d::Zero();
  for (int m = 0; m < grid.total; ++m) s += at(it, m);
  return s / grid.total;
}

ThetaField theta_field(const ProjectorField& pf, int halfwidth) {
  const KGrid& grid = pf.grid;
  const int dim = grid.lat.dim;
  const int nt = pf.nt();
  const int total = grid.total;
  if (nt < 3) throw config_error("theta needs at least three time nodes");
  const std::array<int, 3> hw = pick_halfwidths(grid, halfwidth);

  std::vector<MatC> P(pf.U.size());
  for (size_t i = 0; i < pf.U.size(); ++i) P[i] = pf.U[i] * pf.U[i].adjoint();

  auto frame_wrapped = [&](int it, IVec m) -> MatC {
    IVec s{0, 0, 0};
    bool shifted = false;
    for (int j = 0; j < dim; ++j) {
      int q = floor_div(m[j], grid.size[j]);
      if (q != 0) {
        s[j] = q;
        m[j] -= q * grid.size[j];
        shifted = true;
      }
    }
    const MatC& u = pf.U[static_cast<size_t>(it) * total + grid.flatten(m)];
    return shifted ? relabel_columns(pf.basis, false, u, s) : u;
  };
  auto projector_wrapped = [&](int it, const IVec& m) -> MatC {
    MatC u = frame_wrapped(it, m);
    return u * u.adjoint();
  };

  // Subspace continuity between every node and its forward neighbors.
  for (int it = 0; it < nt; ++it) {
    bool has_next = pf.cyclic || it + 1 < nt;
    int jt = (it + 1) % nt;
    for (int m = 0; m < total; ++m) {
      const MatC& u = pf.frame(it, m);
      if (has_next && overlap_floor(u, pf.frame(jt, m)) <= 1e-6)
        throw numerical_error("grid-too-coarse",
                              "neighboring projectors nearly orthogonal in t",
                              node_json(it, pf.times[it], m));
      IVec mm = grid.unflatten(m);
      for (int j = 0; j < dim; ++j) {
        IVec nb = mm;
        nb[j] += 1;
        if (overlap_floor(u, frame_wrapped(it, nb)) <= 1e-6)
          throw numerical_error("grid-too-coarse",
                                "neighboring projectors nearly orthogonal in k",
                                node_json(it, pf.times[it], m, j));
      }
    }
  }

  const double ht = pf.period / (pf.cyclic ? nt : nt - 1);
  std::vector<double> wt_spec;
  if (pf.cyclic) wt_spec = periodic_spectral_weights(nt);

  ThetaField out;
  out.grid = grid;
  out.times = pf.times;
  out.period = pf.period;
  out.cyclic = pf.cyclic;
  out.theta.assign(static_cast<size_t>(nt) * total, Vector3d::Zero());

  for (int it = 0; it < nt; ++it) {
    for (int m = 0; m < total; ++m) {
      const size_t idx = static_cast<size_t>(it) * total + m;
      MatC Pt = MatC::Zero(P[idx].rows(), P[idx].cols());
      if (pf.cyclic) {
        for (int j = 1; j < nt; ++j)
          Pt += (wt_spec[j] / ht) * P[static_cast<size_t>((it + j) % nt) * total + m];
      } else if (it > 0 && it + 1 < nt) {
        Pt = (P[static_cast<size_t>(it + 1) * total + m] -
              P[static_cast<size_t>(it - 1) * total + m]) /
             (2.0 * ht);
      } else {
        std::vector<double> w = stencil_weights(3, it == 0 ? 0 : 2);
        int base = it == 0 ? 0 : nt - 3;
        for (int j = 0; j < 3; ++j)
          Pt += (w[j] / ht) * P[static_cast<size_t>(base + j) * total + m];
      }

      const MatC& u = pf.frame(it, m);
      MatC X = u.adjoint() * Pt;  // occ x nb
      IVec mm = grid.unflatten(m);
      for (int j = 0; j < dim; ++j) {
        const double h = grid.step_length(j);
        std::vector<double> w = centered_weights(hw[j]);
        MatC Pj = MatC::Zero(Pt.rows(), Pt.cols());
        for (int o = -hw[j]; o <= hw[j]; ++o) {
          if (o == 0) continue;
          IVec nb = mm;
          nb[j] += o;
          Pj += (w[o + hw[j]] / h) * projector_wrapped(it, nb);
        }
        out.theta[idx][j] = 2.0 * ((X * (Pj * u)).trace()).imag();
      }
    }
  }
  return out;
}

Polarization ksv_polarization(const ThetaField& tf) {
  const int nt = tf.nt();
  if (nt < 2) throw config_error("polarization needs at least two time nodes");
  Vector3d acc = Vector3d::Zero();
  if (tf.cyclic) {
    const double wt = tf.period / nt;
    for (int it = 0; it < nt; ++it)
      for (int m = 0; m < tf.grid.total; ++m) acc += wt * tf.at(it, m);
  } else {
    const double ht = tf.period / (nt - 1);
    for (int it = 0; it < nt; ++it) {
      double wt = (it == 0 || it == nt - 1) ? 0.5 * ht : ht;
      for (int m = 0; m < tf.grid.total; ++m) acc += wt * tf.at(it, m);
    }
  }
  Polarization p;
  p.raw = -acc / (tf.grid.lat.cell_volume * tf.grid.total);
  p.quanta = p.raw;  // d = 1: the (2pi)^-d BZ-time integral counts quanta directly
  return p;
}

int pump_chern(const ProjectorField& pf) {
  if (pf.grid.lat.dim != 1) throw config_error("pump_chern is defined for d = 1");
  if (!pf.cyclic) throw config_error("pump_chern needs a cyclic path");
  const int nk = pf.grid.size[0];
  const int nt = pf.nt();
  if (nk < 2 || nt < 2) throw config_error("pump_chern needs at least a 2x2 torus");

  std::vector<MatC> u(static_cast<size_t>(nk) * nt);
  for (int ik = 0; ik < nk; ++ik)
    for (int it = 0; it < nt; ++it)
      u[static_cast<size_t>(ik) * nt + it] = pf.frame(it, ik);
  detail::Closure close_k = [&pf](const MatC& m) {
    return relabel_columns(pf.basis, false, m, IVec{1, 0, 0});
  };
  detail::Closure close_t = [](const MatC& m) { return m; };

  std::vector<double> F = detail::plaquette_field(u, nk, nt, close_k, close_t);
  double total = 0.0;
  for (double f : F) total += f;
  // (k, t) plaquette orientation carries curvature -Theta; flip so the
  // count matches the polarization sign.
  double c = -total / kTwoPi;
  long ci = std::lround(c);
  if (std::abs(c - ci) > 1e-9) {
    std::ostringstream w;
    w << "{\"residual\":" << std::abs(c - ci) << "}";
    throw numerical_error("curvature-not-quantized",
                          "pump plaquette sum is not an integer", w.str());
  }
  return static_cast<int>(ci);
}

ThetaField frame_theta(const ProjectorField& pf, int halfwidth) {
  if (pf.grid.lat.dim != 1) throw config_error("frame_theta is defined for d = 1");
  if (pf.occupied != 1) throw config_error("frame_theta needs a single occupied band");
  if (!pf.cyclic) throw config_error("frame_theta needs a cyclic path");
  const int nk = pf.grid.size[0];
  const int nt = pf.nt();
  if (nt < 3) throw config_error("frame_theta needs at least three time nodes");
  const std::array<int, 3> hw = pick_halfwidths(pf.grid, halfwidth);

  std::vector<MatC> u(static_cast<size_t>(nk) * nt);
  for (int ik = 0; ik < nk; ++ik)
    for (int it = 0; it < nt; ++it)
      u[static_cast<size_t>(ik) * nt + it] = pf.frame(it, ik);
  detail::Closure close_k = [&pf](const MatC& m) {
    return relabel_columns(pf.basis, false, m, IVec{1, 0, 0});
  };
  detail::Closure close_t = [](const MatC& m) { return m; };
  detail::GaugeFix gf = detail::fix_gauge_torus(std::move(u), nk, nt, close_k, close_t);
  if (!gf.periodizable) {
    std::ostringstream w;
    w << "{\"winding\":" << gf.winding << "}";
    throw numerical_error("chern-obstruction",
                          "twisted pump bundle admits no global smooth frame", w.str());
  }

  auto frame_at_k = [&](int ik, int it) -> MatC {
    int q = floor_div(ik, nk);
    const MatC& base = gf.U[static_cast<size_t>(ik - q * nk) * nt + it];
    if (q == 0) return base;
    return relabel_columns(pf.basis, false, base, IVec{q, 0, 0});
  };

  const double hk = pf.grid.step_length(0);
  const double ht = pf.period / nt;
  std::vector<double> wk = centered_weights(hw[0]);
  std::vector<double> wt = periodic_spectral_weights(nt);
  std::vector<double> wks = periodic_spectral_weights(nk);

  // A(k,t) = i<u, du/dk> by the local stencil; phi_B(k,t) = -i<u, du/dt>
  // spectrally. Both are smooth periodic scalars in the torus gauge.
  Eigen::MatrixXd A(nk, nt), phiB(nk, nt);
  for (int ik = 0; ik < nk; ++ik)
    for (int it = 0; it < nt; ++it) {
      const MatC& uc = gf.U[static_cast<size_t>(ik) * nt + it];
      cplx ak = 0.0;
      for (int o = -hw[0]; o <= hw[0]; ++o) {
        if (o == 0) continue;
        ak += wk[o + hw[0]] * (uc.col(0).dot(frame_at_k(ik + o, it).col(0)));
      }
      A(ik, it) = -std::imag(ak) / hk;
      cplx bt = 0.0;
      for (int j = 1; j < nt; ++j)
        bt += wt[j] * (uc.col(0).dot(gf.U[static_cast<size_t>(ik) * nt + (it + j) % nt].col(0)));
      phiB(ik, it) = std::imag(bt) / ht;
    }

  ThetaField out;
  out.grid = pf.grid;
  out.times = pf.times;
  out.period = pf.period;
  out.cyclic = true;
  out.theta.assign(static_cast<size_t>(nt) * nk, Vector3d::Zero());
  for (int ik = 0; ik < nk; ++ik)
    for (int it = 0; it < nt; ++it) {
      double dA = 0.0;
      for (int j = 1; j < nt; ++j) dA += wt[j] * A(ik, (it + j) % nt);
      double dphi = 0.0;
      for (int m = 1; m < nk; ++m) dphi += wks[m] * phiB((ik + m) % nk, it);
      out.theta[static_cast<size_t>(it) * nk + ik][0] = -dA / ht - dphi / hk;
    }
  return out;
}

PropagatedPump propagated_polarization(const PumpPath& path, int nk, double g_max,
                                       double eps, double dt, int threads) {
  const Lattice& lat = path.frames.front().V.lat;
  if (lat.dim != 1) throw config_error("propagated polarization is defined for d = 1");
  if (nk < 2) throw config_error("propagated polarization needs at least two k points");
  if (!(eps > 0.0)) throw config_error("eps must be positive");
  if (!(dt > 0.0)) throw config_error("dt must be positive");

  const int occ = path.occupied;
  PlaneWaveBasis basis = make_basis(lat, g_max);
  const int nb = basis.size();
  if (occ + 1 > nb) throw config_error("cutoff too small for the occupied window");
  KGrid grid = bz_grid(lat, IVec{nk, 1, 1});

  const long nsteps = std::max(1L, std::lround(path.period / dt));
  const double h = path.period / nsteps;
  const long stride = std::max(1L, nsteps / 1024);
  std::vector<long> sample_steps;
  for (long i = 0; i <= nsteps; ++i)
    if (i % stride == 0 || i == nsteps) sample_steps.push_back(i);
  const int nsamp = static_cast<int>(sample_steps.size());

  // Keyframe potential matrices; H(k,s) interpolates them linearly exactly
  // like potential_at_time.
  const int nf = static_cast<int>(path.frames.size());
  std::vector<MatC> W(nf, MatC::Zero(nb, nb));
  for (int f = 0; f < nf; ++f)
    for (int a = 0; a < nb; ++a)
      for (int c = 0; c < nb; ++c) {
        IVec d{basis.index[a][0] - basis.index[c][0],
               basis.index[a][1] - basis.index[c][1],
               basis.index[a][2] - basis.index[c][2]};
        W[f](a, c) = path.frames[f].V.coefficient(d);
      }

  std::vector<double> raw_k(grid.total, 0.0);
  Eigen::MatrixXd samples(nsamp, grid.total);

  parallel_for(grid.total, threads, [&](int m) {
    const Vector3d k = grid.point(m);
    Eigen::VectorXd kdiag(nb), vdiag(nb);
    for (int g = 0; g < nb; ++g) {
      kdiag[g] = 0.5 * (k + basis.g[g]).squaredNorm();
      vdiag[g] = (k + basis.g[g])[0];
    }
    auto hamiltonian = [&](double t) -> MatC {
      int hi = 1;
      while (hi + 1 < nf && path.frames[hi].t < t) ++hi;
      double w = (t - path.frames[hi - 1].t) / (path.frames[hi].t - path.frames[hi - 1].t);
      MatC H = (1.0 - w) * W[hi - 1] + w * W[hi];
      H.diagonal() += kdiag.cast<cplx>();
      return H;
    };

    Eigen::SelfAdjointEigenSolver<MatC> es(hamiltonian(0.0));
    {
      double lo = es.eigenvalues()[occ - 1], up = es.eigenvalues()[occ];
      if (up - lo <= 1e-9 * std::max(1.0, std::abs(lo) + std::abs(up)))
        throw numerical_error("gap-closure", "pump gap closed in the initial fiber",
                              node_json(0, 0.0, m));
    }
    MatC u = es.eigenvectors().leftCols(occ);

    auto current_of = [&](const MatC& state) {
      double j = 0.0;
      for (int c = 0; c < occ; ++c)
        for (int g = 0; g < nb; ++g) j += vdiag[g] * std::norm(state(g, c));
      return j;
    };

    double jprev = current_of(u);
    double acc = 0.0;
    int sidx = 0;
    if (sample_steps[0] == 0) {
      samples(0, m) = jprev;
      sidx = 1;
    }
    for (long i = 0; i < nsteps; ++i) {
      es.compute(hamiltonian((i + 0.5) * h));
      const Eigen::VectorXd& e = es.eigenvalues();
      VecC phase(nb);
      for (int g = 0; g < nb; ++g) phase[g] = std::polar(1.0, -(h / eps) * e[g]);
      u = es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * u));
      for (int c = 0; c < occ; ++c) {
        double nrm = u.col(c).norm();
        if (std::abs(nrm - 1.0) > 1e-9)
          throw numerical_error("norm-drift", "fiber propagation lost unitarity",
                                node_json(static_cast<int>(i), (i + 1) * h, m));
      }
      double jnew = current_of(u);
      acc += 0.5 * (jprev + jnew) * h;
      jprev = jnew;
      if (sidx < nsamp && sample_steps[sidx] == i + 1) {
        samples(sidx, m) = jnew;
        ++sidx;
      }
    }
    raw_k[m] = acc;
  });

  PropagatedPump out;
  out.eps = eps;
  out.period = path.period;
  out.times.resize(nsamp);
  out.current.resize(nsamp);
  for (int s = 0; s < nsamp; ++s) {
    out.times[s] = sample_steps[s] * h;
    out.current[s] = samples.row(s).mean();
  }
  double acc = 0.0;
  for (int m = 0; m < grid.total; ++m) acc += raw_k[m];
  out.raw = acc / (grid.total * eps);
  out.quanta = out.raw / lat.cell_volume;
  return out;
}

}  // namespace bloch
