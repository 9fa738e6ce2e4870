#include "bloch/lattice.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bloch/errors.hpp"

namespace bloch {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;
}

Eigen::Vector3d Lattice::dual_coords(const Eigen::Vector3d& k) const {
  return basis.transpose() * k / two_pi;
}

Eigen::Vector3d Lattice::lattice_coords(const Eigen::Vector3d& x) const {
  return dual.transpose() * x / two_pi;
}

Eigen::Vector3d Lattice::dual_point(const IVec& n) const {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int j = 0; j < dim; ++j) g += static_cast<double>(n[j]) * dual.col(j);
  return g;
}

Eigen::Vector3d Lattice::lattice_point(const IVec& c) const {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int j = 0; j < dim; ++j) x += static_cast<double>(c[j]) * basis.col(j);
  return x;
}

Lattice make_lattice(int dim, const std::vector<Eigen::Vector3d>& vectors) {
  if (dim < 1 || dim > 3)
    throw config_error("lattice dimension must be 1, 2, or 3, got " + std::to_string(dim));
  if (static_cast<int>(vectors.size()) != dim)
    throw config_error("lattice needs exactly dim basis vectors, got " +
                       std::to_string(vectors.size()) + " for dim " + std::to_string(dim));

  Lattice lat;
  lat.dim = dim;
  lat.basis = Eigen::Matrix3d::Identity();
  double scale = 0.0;
  for (int j = 0; j < dim; ++j) {
    for (int a = dim; a < 3; ++a) {
      if (vectors[j][a] != 0.0)
        throw config_error("lattice vector " + std::to_string(j + 1) +
                           " has a nonzero component beyond dimension " + std::to_string(dim));
    }
    lat.basis.col(j) = vectors[j];
    scale = std::max(scale, vectors[j].norm());
  }

  double det = lat.basis.determinant();
  if (scale == 0.0 || std::abs(det) < 1e-12 * std::pow(scale, dim)) {
    std::ostringstream os;
    os << "degenerate lattice: basis determinant " << det << " is singular";
    throw config_error(os.str());
  }

  lat.cell_volume = std::abs(det);
  lat.dual = two_pi * lat.basis.inverse().transpose();
  return lat;
}

Eigen::Vector3d KGrid::point(const IVec& m) const {
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  for (int j = 0; j < lat.dim; ++j) {
    double beta = static_cast<double>(m[j]) / size[j] - 0.5;
    k += beta * lat.dual.col(j);
  }
  return k;
}

KGrid bz_grid(const Lattice& lat, const IVec& sizes) {
  KGrid g;
  g.lat = lat;
  g.size = {1, 1, 1};
  g.total = 1;
  for (int j = 0; j < 3; ++j) {
    if (j < lat.dim) {
      if (sizes[j] < 1)
        throw config_error("k-grid size along axis " + std::to_string(j + 1) +
                           " must be at least 1, got " + std::to_string(sizes[j]));
      g.size[j] = sizes[j];
    } else if (sizes[j] != 1) {
      throw config_error("k-grid size along axis " + std::to_string(j + 1) +
                         " must be 1 beyond the lattice dimension");
    }
    g.total *= g.size[j];
  }
  return g;
}

Eigen::Vector3d reduce_to_bz(const Lattice& lat, const Eigen::Vector3d& k) {
  Eigen::Vector3d beta = lat.dual_coords(k);
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int j = 0; j < lat.dim; ++j) {
    double b = beta[j] - std::floor(beta[j] + 0.5);
    if (b >= 0.5) b -= 1.0;  // guards the floor rounding edge
    out += b * lat.dual.col(j);
  }
  return out;
}

double bz_distance(const Lattice& lat, const Eigen::Vector3d& ka, const Eigen::Vector3d& kb) {
  Eigen::Vector3d beta = lat.dual_coords(ka - kb);
  // Search the nearest dual translation around the rounded offset.
  IVec base;
  for (int j = 0; j < 3; ++j) base[j] = j < lat.dim ? static_cast<int>(std::lround(beta[j])) : 0;
  double best = std::numeric_limits<double>::infinity();
  IVec n;
  int r = 1;
  for (int d0 = -r; d0 <= r; ++d0)
    for (int d1 = (lat.dim > 1 ? -r : 0); d1 <= (lat.dim > 1 ? r : 0); ++d1)
      for (int d2 = (lat.dim > 2 ? -r : 0); d2 <= (lat.dim > 2 ? r : 0); ++d2) {
        n = {base[0] + d0, base[1] + d1, base[2] + d2};
        best = std::min(best, (ka - kb - lat.dual_point(n)).norm());
      }
  return best;
}

}  // namespace bloch
