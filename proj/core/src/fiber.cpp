#include "bloch/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bloch/errors.hpp"
#include "bloch/parallel.hpp"

namespace bloch {

namespace {

std::string node_json(const Eigen::Vector3d& k, int size) {
  std::ostringstream os;
  os << "{\"k\":[" << k[0] << "," << k[1] << "," << k[2] << "],\"size\":" << size << "}";
  return os.str();
}

}  // namespace

int PlaneWaveBasis::find(const IVec& n) const {
  for (size_t i = 0; i < index.size(); ++i)
    if (index[i] == n) return static_cast<int>(i);
  return -1;
}

PlaneWaveBasis make_basis(const Lattice& lat, double g_max) {
  if (!(g_max >= 0.0)) throw config_error("plane-wave cutoff must be nonnegative");
  PlaneWaveBasis b;
  b.lat = lat;
  b.g_max = g_max;
  // Bounding box of integer coordinates: |n_j| <= g_max / min singular value.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(lat.dual);
  double sigma_min = svd.singularValues().minCoeff();
  int bound = static_cast<int>(std::ceil(g_max / sigma_min)) + 1;
  struct Entry {
    double g2;
    IVec n;
  };
  std::vector<Entry> entries;
  IVec lim = {0, 0, 0};
  for (int j = 0; j < lat.dim; ++j) lim[j] = bound;
  for (int n0 = -lim[0]; n0 <= lim[0]; ++n0)
    for (int n1 = -lim[1]; n1 <= lim[1]; ++n1)
      for (int n2 = -lim[2]; n2 <= lim[2]; ++n2) {
        IVec n = {n0, n1, n2};
        double g2 = b.lat.dual_point(n).squaredNorm();
        if (g2 <= g_max * g_max * (1.0 + 1e-12) + 1e-300) entries.push_back({g2, n});
      }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& c) {
    if (a.g2 != c.g2) return a.g2 < c.g2;
    return a.n < c.n;
  });
  for (const auto& e : entries) {
    b.index.push_back(e.n);
    b.g.push_back(b.lat.dual_point(e.n));
  }
  return b;
}

double next_shell_cutoff(const PlaneWaveBasis& b) {
  // Grow until a dual point outside the current ball appears, then cover it.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(b.lat.dual);
  double sigma_min = svd.singularValues().minCoeff();
  double best = -1.0;
  int bound = static_cast<int>(std::ceil((b.g_max + 2.0 * sigma_min) / sigma_min)) + 2;
  IVec lim = {0, 0, 0};
  for (int j = 0; j < b.lat.dim; ++j) lim[j] = bound;
  for (int n0 = -lim[0]; n0 <= lim[0]; ++n0)
    for (int n1 = -lim[1]; n1 <= lim[1]; ++n1)
      for (int n2 = -lim[2]; n2 <= lim[2]; ++n2) {
        double g = b.lat.dual_point({n0, n1, n2}).norm();
        if (g > b.g_max * (1.0 + 1e-12) && (best < 0.0 || g < best)) best = g;
      }
  if (best < 0.0) throw numerical_error("cutoff-growth", "no dual point beyond the cutoff found");
  return best * (1.0 + 1e-12);
}

FiberMatrix build_fiber(const FourierPotential& V, const Eigen::Vector3d& k,
                        const PlaneWaveBasis& basis, bool spin_orbit) {
  if (!k.allFinite()) throw config_error("fiber momentum must be finite");
  const int n = basis.size();
  const int s = spin_orbit ? 2 : 1;
  FiberMatrix F;
  F.k = k;
  F.basis = &basis;
  F.spin_orbit = spin_orbit;
  F.H = MatC::Zero(s * n, s * n);

  for (int a = 0; a < n; ++a) {
    double kin = 0.5 * (k + basis.g[a]).squaredNorm();
    for (int sp = 0; sp < s; ++sp) F.H(s * a + sp, s * a + sp) = kin;
    for (int c = 0; c < n; ++c) {
      IVec d = {basis.index[a][0] - basis.index[c][0], basis.index[a][1] - basis.index[c][1],
                basis.index[a][2] - basis.index[c][2]};
      cplx v = V.coefficient(d);
      if (v != cplx(0.0, 0.0)) {
        for (int sp = 0; sp < s; ++sp) F.H(s * a + sp, s * c + sp) += v;
      }
      if (spin_orbit && v != cplx(0.0, 0.0)) {
        Eigen::Vector3d dg = basis.g[a] - basis.g[c];
        Eigen::Vector3d kg = k + basis.g[c];
        Eigen::Vector3d cross = dg.cross(kg);
        // w = i Vhat(G-G') (G-G') x (k+G'); block += 1/4 sigma . w
        cplx wi = cplx(0.0, 0.25) * v;
        cplx w1 = wi * cross[0], w2 = wi * cross[1], w3 = wi * cross[2];
        // sigma.w = [[w3, w1 - i w2], [w1 + i w2, -w3]]
        F.H(2 * a + 0, 2 * c + 0) += w3;
        F.H(2 * a + 0, 2 * c + 1) += w1 - cplx(0.0, 1.0) * w2;
        F.H(2 * a + 1, 2 * c + 0) += w1 + cplx(0.0, 1.0) * w2;
        F.H(2 * a + 1, 2 * c + 1) -= w3;
      }
    }
  }

  double scale = F.H.cwiseAbs().maxCoeff();
  double herm = (F.H - F.H.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-13 * std::max(scale, 1.0))
    throw numerical_error("non-hermitian-fiber",
                          "assembled fiber matrix is not Hermitian; the potential "
                          "coefficients lack the conjugate symmetry",
                          node_json(k, s * n));
  return F;
}

FiberSolution solve_fiber(const FiberMatrix& F, int n_bands) {
  const int n = static_cast<int>(F.H.rows());
  if (n_bands < 1 || n_bands > n)
    throw config_error("band count must lie in [1, matrix size]");
  Eigen::SelfAdjointEigenSolver<MatC> es(F.H);
  if (es.info() != Eigen::Success)
    throw numerical_error("eigensolver", "fiber diagonalization failed", node_json(F.k, n));

  Eigen::VectorXd E = es.eigenvalues();
  MatC U = es.eigenvectors();

  // Deterministic order inside near-degenerate clusters.
  constexpr double tol_deg = 1e-9;
  int i = 0;
  while (i < n_bands) {
    int j = i;
    while (j + 1 < n && E[j + 1] - E[j] < tol_deg) ++j;
    if (j > i) {
      struct Key {
        double amp;
        int row;
        int col;
      };
      std::vector<Key> keys;
      for (int c = i; c <= j; ++c) {
        int row = 0;
        double amp = 0.0;
        for (int r = 0; r < n; ++r) {
          double a = std::abs(U(r, c));
          if (a > amp) {
            amp = a;
            row = r;
          }
        }
        keys.push_back({amp, row, c});
      }
      std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.amp != b.amp) return a.amp > b.amp;
        return a.row < b.row;
      });
      MatC block(n, j - i + 1);
      Eigen::VectorXd eblock(j - i + 1);
      for (size_t c = 0; c < keys.size(); ++c) {
        block.col(c) = U.col(keys[c].col);
        eblock[c] = E[keys[c].col];
      }
      U.block(0, i, n, j - i + 1) = block;
      E.segment(i, j - i + 1) = eblock;
    }
    i = j + 1;
  }

  FiberSolution out;
  out.E = E.head(n_bands);
  out.U = U.leftCols(n_bands);
  return out;
}

BandData band_structure(const FourierPotential& V, const KGrid& grid,
                        const PlaneWaveBasis& basis, int n_bands, bool spin_orbit,
                        int threads) {
  BandData bd;
  bd.grid = grid;
  bd.basis = basis;
  bd.spin_orbit = spin_orbit;
  bd.n_bands = n_bands;
  bd.E.resize(grid.total);
  bd.U.resize(grid.total);
  parallel_for(grid.total, threads, [&](int m) {
    FiberMatrix F = build_fiber(V, grid.point(m), basis, spin_orbit);
    FiberSolution s = solve_fiber(F, n_bands);
    bd.E[m] = std::move(s.E);
    bd.U[m] = std::move(s.U);
  });
  return bd;
}

double check_gap(const BandData& bd, int first, int count) {
  if (first < 0 || count < 1) throw config_error("band window must be nonempty");
  if (first + count >= bd.n_bands)
    throw config_error("band window touches the last computed band; the gap above "
                       "cannot be bounded (compute more bands)");
  double g = std::numeric_limits<double>::infinity();
  for (const auto& E : bd.E) {
    if (first > 0) g = std::min(g, E[first] - E[first - 1]);
    g = std::min(g, E[first + count] - E[first + count - 1]);
  }
  return g;
}

}  // namespace bloch
