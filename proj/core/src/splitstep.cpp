#include "bloch/wavepacket.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fftw3.h>

#include "bloch/errors.hpp"
#include "fftw_lock.hpp"

namespace bloch {
namespace {

constexpr double kTwoPi = 6.283185307179586476925;

int fold_mode(int l, int n) { return (l <= n / 2) ? l : l - n; }

void check_same_lattice(const Lattice& a, const Lattice& b, const char* what) {
  if (a.dim != b.dim || (a.basis - b.basis).norm() > 1e-12 * std::max(1.0, a.basis.norm()))
    throw config_error(std::string(what) + " lattice does not match the box lattice");
}

// Mass within `shell` cells of the box seam along any axis.
double shell_mass(const BoxGrid& box, const std::vector<cplx>& psi, int shell) {
  const double pm = box.point_measure();
  double m = 0.0;
  for (int flat = 0; flat < box.total_points(); ++flat) {
    IVec u = box.unflatten(flat);
    bool near = false;
    for (int j = 0; j < box.lat.dim && !near; ++j) {
      int c = u[j] / box.samples[j];
      near = c < shell || c >= box.cells[j] - shell;
    }
    if (near) m += std::norm(psi[flat]) * pm;
  }
  return m;
}

struct AxisPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

fftw_complex* fc(std::vector<cplx>& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

}  // namespace

WavePacket band_wavepacket(const BlochFrame& frame, int column, const BoxGrid& box,
                           const std::function<cplx(const Vector3d&)>& envelope) {
  if (frame.spin_orbit)
    throw config_error("wave packets are scalar; spin-orbit frames are not supported");
  if (column < 0 || column >= frame.band_count)
    throw config_error("frame column outside the band window");
  check_same_lattice(frame.grid.lat, box.lat, "frame");
  for (int j = 0; j < 3; ++j)
    if (frame.grid.size[j] != box.cells[j])
      throw config_error("frame k-grid must match the box cell counts");
  for (int j = 0; j < box.lat.dim; ++j) {
    int maxn = 0;
    for (const auto& n : frame.basis.index) maxn = std::max(maxn, std::abs(n[j]));
    if (box.samples[j] < 2 * maxn + 1)
      throw config_error("cell sampling too coarse for the plane-wave basis");
  }

  const int S = box.cell_points();
  const int nb = frame.basis.size();
  const double volw = box.lat.cell_volume / S;  // L2(cell) quadrature weight
  MatC T(S, nb);
  for (int s0 = 0; s0 < box.samples[0]; ++s0)
    for (int s1 = 0; s1 < box.samples[1]; ++s1)
      for (int s2 = 0; s2 < box.samples[2]; ++s2) {
        int sflat = (s0 * box.samples[1] + s1) * box.samples[2] + s2;
        Vector3d y = box.point({s0, s1, s2});
        for (int g = 0; g < nb; ++g)
          T(sflat, g) = std::polar(1.0 / std::sqrt(box.lat.cell_volume),
                                   frame.basis.g[g].dot(y));
      }

  ZakData zd;
  zd.kgrid = frame.grid;
  zd.samples = box.samples;
  zd.phi.resize(frame.grid.total, S);
  for (int m = 0; m < frame.grid.total; ++m) {
    VecC c = envelope(frame.grid.point(m)) * frame.U[m].col(column);
    zd.phi.row(m) = (T * c).transpose();
  }
  std::vector<cplx> psi = zak_inverse(zd, box);
  double nrm = box_norm(box, psi);
  if (nrm <= 0.0) throw config_error("envelope vanishes on the whole k grid");
  for (auto& v : psi) v /= nrm;

  ZakData back = zak_forward(box, psi);
  double purity = 0.0;
  for (int m = 0; m < frame.grid.total; ++m) {
    VecC u = T * frame.U[m].col(column);
    cplx o = (u.adjoint() * back.phi.row(m).transpose())(0) * volw;
    purity += std::norm(o);
  }
  purity /= frame.grid.total;
  if (purity < 1.0 - 1e-6) {
    std::ostringstream w;
    w << "{\"purity\":" << purity << "}";
    throw numerical_error("band-purity", "constructed packet leaks out of the band", w.str());
  }
  if (shell_mass(box, psi, 2) > 1e-8)
    throw config_error("envelope too wide for the box");
  return WavePacket{box, std::move(psi)};
}

Observables split_step_propagate(const WavePacket& w0, const FourierPotential& V,
                                 const ExternalFields& fields, double T, double dt,
                                 int stride) {
  const BoxGrid& box = w0.box;
  const Lattice& lat = box.lat;
  const int dim = lat.dim;
  if (T <= 0.0 || dt <= 0.0) throw config_error("time horizon and step must be positive");
  if (stride < 1) throw config_error("observable stride must be >= 1");
  if (!V.declared_real) throw config_error("split-step needs a real lattice potential");
  check_same_lattice(V.lat, lat, "potential");
  if (fields.dim != dim) throw config_error("field dimension does not match the box");

  const long nsteps = std::max(1L, std::lround(T / dt));
  const double h = T / nsteps;
  const int total = box.total_points();
  const double pm = box.point_measure();
  const bool withA = fields.has_A();

  // Potential factor and its energy table.
  std::vector<cplx> vphase(total);
  std::vector<double> vpot(total);
  for (int flat = 0; flat < total; ++flat) {
    Vector3d x = box.point(box.unflatten(flat));
    vpot[flat] = V.real_value(x) + fields.phi.value(fields.eps * x);
    vphase[flat] = std::polar(1.0, -0.5 * h * vpot[flat]);
  }

  if (withA) {
    if (dim > 2)
      throw config_error("vector-potential split-step supports dimension <= 2");
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (i != j && std::abs(lat.basis(i, j)) > 1e-12 * lat.basis.norm())
          throw config_error("vector-potential split-step needs an axis-aligned lattice");
    for (int j = 0; j < dim; ++j)
      for (const auto& t : fields.A[j].terms)
        if (t.expo[j] != 0 || t.wave[j] != 0.0)
          throw config_error("split-step needs every A_j independent of its own coordinate");
  }

  // Kinetic factors. A = 0: one full multiplier. A != 0: per-axis mixed
  // tables; the axis factors do not commute once B != 0, so the kinetic
  // substep is itself a symmetric split (axis0/2, axis1, axis0/2 in 2-d).
  std::vector<cplx> kphase(total);
  std::vector<double> kenergy(total);
  std::array<std::vector<cplx>, 2> aphase;
  std::array<std::vector<double>, 2> aenergy;
  if (!withA) {
    for (int flat = 0; flat < total; ++flat) {
      IVec u = box.unflatten(flat);
      Vector3d q = Vector3d::Zero();
      for (int j = 0; j < dim; ++j)
        q += (static_cast<double>(fold_mode(u[j], box.axis_points(j))) / box.cells[j]) *
             lat.dual_vector(j);
      kenergy[flat] = 0.5 * q.squaredNorm();
      kphase[flat] = std::polar(1.0 / total, -h * kenergy[flat]);
    }
  } else {
    for (int j = 0; j < dim; ++j) {
      aphase[j].resize(total);
      aenergy[j].resize(total);
      const double theta = (dim == 2 && j == 0) ? 0.5 * h : h;
      const double qunit = lat.dual_vector(j).norm() / box.cells[j];
      const int nj = box.axis_points(j);
      for (int flat = 0; flat < total; ++flat) {
        IVec u = box.unflatten(flat);
        Vector3d x = box.point(u);
        double a = fields.A[j].value(fields.eps * x);
        double q = fold_mode(u[j], nj) * qunit;
        aenergy[j][flat] = 0.5 * (q - a) * (q - a);
        aphase[j][flat] = std::polar(1.0 / nj, -theta * aenergy[j][flat]);
      }
    }
  }

  // Plans: in-place step transforms on `w`, out-of-place forward for
  // observables into `scratch`.
  std::vector<cplx> w = w0.psi, scratch(total);
  fftw_plan full_f = nullptr, full_b = nullptr, obs_f = nullptr;
  std::array<AxisPlans, 2> axis{};
  std::array<fftw_plan, 2> axis_obs{nullptr, nullptr};
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    obs_f = fftw_plan_dft_3d(box.axis_points(0), box.axis_points(1), box.axis_points(2),
                             fc(w), fc(scratch), FFTW_FORWARD, FFTW_ESTIMATE);
    if (!withA) {
      full_f = fftw_plan_dft_3d(box.axis_points(0), box.axis_points(1), box.axis_points(2),
                                fc(w), fc(w), FFTW_FORWARD, FFTW_ESTIMATE);
      full_b = fftw_plan_dft_3d(box.axis_points(0), box.axis_points(1), box.axis_points(2),
                                fc(w), fc(w), FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      for (int j = 0; j < dim; ++j) {
        int n = box.axis_points(j);
        int howmany = total / n;
        int istride = (j == 0) ? total / box.axis_points(0) : 1;
        int idist = (j == 0) ? 1 : box.axis_points(1);
        axis[j].fwd = fftw_plan_many_dft(1, &n, howmany, fc(w), nullptr, istride, idist,
                                         fc(w), nullptr, istride, idist, FFTW_FORWARD,
                                         FFTW_ESTIMATE);
        axis[j].bwd = fftw_plan_many_dft(1, &n, howmany, fc(w), nullptr, istride, idist,
                                         fc(w), nullptr, istride, idist, FFTW_BACKWARD,
                                         FFTW_ESTIMATE);
        axis_obs[j] = fftw_plan_many_dft(1, &n, howmany, fc(w), nullptr, istride, idist,
                                         fc(scratch), nullptr, istride, idist, FFTW_FORWARD,
                                         FFTW_ESTIMATE);
      }
    }
  }
  auto destroy_plans = [&]() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    auto drop = [](fftw_plan& p) {
      if (p) fftw_destroy_plan(p);
      p = nullptr;
    };
    drop(full_f);
    drop(full_b);
    drop(obs_f);
    for (int j = 0; j < 2; ++j) {
      drop(axis[j].fwd);
      drop(axis[j].bwd);
      drop(axis_obs[j]);
    }
  };

  auto axis_kinetic = [&](int j) {
    fftw_execute(axis[j].fwd);
    const auto& ph = aphase[j];
    for (int flat = 0; flat < total; ++flat) w[flat] *= ph[flat];
    fftw_execute(axis[j].bwd);
  };
  auto kinetic = [&]() {
    if (!withA) {
      fftw_execute(full_f);
      for (int flat = 0; flat < total; ++flat) w[flat] *= kphase[flat];
      fftw_execute(full_b);
      return;
    }
    if (dim == 1) {
      axis_kinetic(0);
    } else {
      axis_kinetic(0);
      axis_kinetic(1);
      axis_kinetic(0);
    }
  };

  Observables obs;
  obs.lat = lat;
  obs.eps = fields.eps;
  std::array<double, 3> prev_coord{0.0, 0.0, 0.0}, accum{0.0, 0.0, 0.0};
  bool first_sample = true;

  auto record = [&](long step) {
    const double t = step * h;
    double nsq = 0.0;
    for (const cplx& v : w) nsq += std::norm(v);
    double nrm = std::sqrt(nsq * pm);
    if (std::abs(nrm - 1.0) > 1e-9) {
      destroy_plans();
      std::ostringstream d;
      d << "{\"step\":" << step << ",\"t\":" << t << ",\"norm\":" << nrm << "}";
      throw numerical_error("norm-drift", "split-step lost unitarity", d.str());
    }
    if (shell_mass(box, w, 2) > 1e-8) {
      destroy_plans();
      std::ostringstream d;
      d << "{\"step\":" << step << ",\"t\":" << t << "}";
      throw numerical_error("boundary-contact", "packet reached the box boundary", d.str());
    }

    // Position: circular mean per axis, unwrapped across samples.
    Vector3d coord = Vector3d::Zero();
    for (int j = 0; j < dim; ++j) {
      cplx z = 0.0;
      for (int flat = 0; flat < total; ++flat) {
        IVec u = box.unflatten(flat);
        z += std::norm(w[flat]) * std::polar(1.0, kTwoPi * u[j] / box.axis_points(j));
      }
      double c = std::arg(z) / kTwoPi * box.cells[j];  // in [-cells/2, cells/2)
      if (first_sample) {
        if (c < 0) c += box.cells[j];
        accum[j] = c;
      } else {
        double d = c - prev_coord[j];
        d -= box.cells[j] * std::round(d / box.cells[j]);
        accum[j] += d;
      }
      prev_coord[j] = c;
      coord[j] = accum[j];
    }
    Vector3d xmean = lat.basis * coord;

    // Momentum: forward transform, then circular mean of the folded dual
    // fraction per axis.
    fftw_execute(obs_f);
    double wsum = 0.0;
    std::array<cplx, 3> zk{cplx(0.0), cplx(0.0), cplx(0.0)};
    double ekin = 0.0;
    for (int flat = 0; flat < total; ++flat) {
      double p = std::norm(scratch[flat]);
      wsum += p;
      IVec u = box.unflatten(flat);
      for (int j = 0; j < dim; ++j)
        zk[j] += p * std::polar(1.0, kTwoPi * fold_mode(u[j], box.axis_points(j)) /
                                         box.cells[j]);
      if (!withA) ekin += p * kenergy[flat];
    }
    Vector3d beta = Vector3d::Zero();
    for (int j = 0; j < dim; ++j) beta[j] = std::arg(zk[j]) / kTwoPi;
    Vector3d kmean = reduce_to_bz(lat, lat.dual * beta);

    if (!withA) {
      ekin /= wsum;
    } else {
      for (int j = 0; j < dim; ++j) {
        fftw_execute(axis_obs[j]);
        double e = 0.0, sw = 0.0;
        for (int flat = 0; flat < total; ++flat) {
          double p = std::norm(scratch[flat]);
          e += p * aenergy[j][flat];
          sw += p;
        }
        ekin += e / sw;
      }
    }
    double epot = 0.0;
    for (int flat = 0; flat < total; ++flat) epot += std::norm(w[flat]) * vpot[flat];
    epot = epot * pm / (nrm * nrm);

    obs.t.push_back(t);
    obs.s.push_back(fields.eps * t);
    obs.norm.push_back(nrm);
    obs.energy.push_back(ekin + epot);
    obs.x.push_back(xmean);
    obs.k.push_back(kmean);
    first_sample = false;
  };

  record(0);
  for (long step = 1; step <= nsteps; ++step) {
    for (int flat = 0; flat < total; ++flat) w[flat] *= vphase[flat];
    kinetic();
    for (int flat = 0; flat < total; ++flat) w[flat] *= vphase[flat];
    if (step % stride == 0 || step == nsteps) record(step);
  }
  destroy_plans();
  return obs;
}

CenterErrors compare_centers(const Observables& full, const Trajectory& sc) {
  if (full.s.empty() || sc.s.empty())
    throw config_error("center comparison needs nonempty series");
  if (full.eps <= 0.0) throw config_error("center comparison needs a positive eps");
  CenterErrors e;
  size_t j = 0;
  for (size_t i = 0; i < full.s.size(); ++i) {
    double s = full.s[i];
    while (j + 1 < sc.s.size() && std::abs(sc.s[j + 1] - s) < std::abs(sc.s[j] - s)) ++j;
    if (std::abs(sc.s[j] - s) > 1e-9 * std::max(1.0, std::abs(s)))
      throw config_error("time grids do not align in macroscopic time");
    e.x = std::max(e.x, (full.eps * full.x[i] - sc.r[j]).norm());
    e.k = std::max(e.k, bz_distance(full.lat, full.k[i], sc.k[j]));
    ++e.matched;
  }
  return e;
}

}  // namespace bloch
