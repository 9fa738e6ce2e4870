#include "bloch/potential.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "bloch/errors.hpp"

namespace bloch {

namespace {

IVec negate(const IVec& n) { return {-n[0], -n[1], -n[2]}; }

std::string ivec_str(const IVec& n) {
  std::ostringstream os;
  os << "(" << n[0] << "," << n[1] << "," << n[2] << ")";
  return os.str();
}

}  // namespace

cplx FourierPotential::coefficient(const IVec& n) const {
  auto it = coeff.find(n);
  return it == coeff.end() ? cplx(0.0, 0.0) : it->second;
}

cplx FourierPotential::value(const Eigen::Vector3d& x) const {
  cplx v = 0.0;
  for (const auto& [n, c] : coeff) {
    double phase = lat.dual_point(n).dot(x);
    v += c * std::polar(1.0, phase);
  }
  return v;
}

double FourierPotential::real_value(const Eigen::Vector3d& x) const {
  if (!declared_real)
    throw config_error("real_value requires a potential declared real");
  return value(x).real();
}

FourierPotential potential_from_coeffs(const Lattice& lat,
                                       const std::vector<std::pair<IVec, cplx>>& entries,
                                       bool declared_real) {
  FourierPotential V;
  V.lat = lat;
  V.declared_real = declared_real;
  for (const auto& [n, c] : entries) {
    for (int j = lat.dim; j < 3; ++j) {
      if (n[j] != 0)
        throw config_error("potential coefficient " + ivec_str(n) +
                           " has a nonzero index beyond dimension " + std::to_string(lat.dim));
    }
    V.coeff[n] += c;
  }
  for (auto it = V.coeff.begin(); it != V.coeff.end();) {
    it = it->second == cplx(0.0, 0.0) ? V.coeff.erase(it) : std::next(it);
  }
  if (declared_real) {
    for (const auto& [n, c] : V.coeff) {
      cplx partner = V.coefficient(negate(n));
      if (std::abs(partner - std::conj(c)) > 1e-12 * std::max(1.0, std::abs(c)))
        throw config_error("potential declared real but coefficient at " + ivec_str(n) +
                           " is not conjugate to the one at " + ivec_str(negate(n)));
    }
  }
  return V;
}

std::vector<cplx> sample_real_space(const FourierPotential& V,
                                    const std::vector<Eigen::Vector3d>& points) {
  std::vector<cplx> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) out[i] = V.value(points[i]);
  return out;
}

PumpPath make_pump_path(double period, bool cyclic, int occupied,
                        std::vector<PumpKeyframe> frames) {
  if (!(period > 0.0)) throw config_error("pump period must be positive");
  if (occupied < 1) throw config_error("pump needs at least one occupied band");
  if (frames.size() < 2) throw config_error("pump path needs at least two keyframes");
  if (frames.front().t != 0.0)
    throw config_error("pump path must start at t = 0");
  if (std::abs(frames.back().t - period) > 1e-12 * period)
    throw config_error("pump path must end at t = period");
  for (size_t i = 0; i + 1 < frames.size(); ++i) {
    if (!(frames[i].t < frames[i + 1].t))
      throw config_error("pump keyframe times must increase strictly");
  }
  const Lattice& lat = frames.front().V.lat;
  for (const auto& f : frames) {
    if (f.V.lat.dim != lat.dim || (f.V.lat.basis - lat.basis).norm() > 1e-12)
      throw config_error("pump keyframes must share one lattice");
  }
  if (cyclic) {
    const auto& a = frames.front().V.coeff;
    const auto& b = frames.back().V.coeff;
    std::set<IVec> keys;
    for (const auto& [n, c] : a) keys.insert(n);
    for (const auto& [n, c] : b) keys.insert(n);
    for (const auto& n : keys) {
      cplx ca = frames.front().V.coefficient(n);
      cplx cb = frames.back().V.coefficient(n);
      if (std::abs(ca - cb) > 1e-12 * std::max(1.0, std::abs(ca)))
        throw config_error("cyclic pump path: coefficient at " + ivec_str(n) +
                           " differs between t = 0 and t = period");
    }
  }
  PumpPath p;
  p.period = period;
  p.cyclic = cyclic;
  p.occupied = occupied;
  p.frames = std::move(frames);
  return p;
}

FourierPotential potential_at_time(const PumpPath& path, double t) {
  if (t < 0.0 || t > path.period)
    throw config_error("pump time outside [0, period]");
  const auto& fr = path.frames;
  size_t hi = 1;
  while (hi + 1 < fr.size() && fr[hi].t < t) ++hi;
  const PumpKeyframe& a = fr[hi - 1];
  const PumpKeyframe& b = fr[hi];
  double w = (t - a.t) / (b.t - a.t);
  FourierPotential V;
  V.lat = a.V.lat;
  V.declared_real = a.V.declared_real && b.V.declared_real;
  std::set<IVec> keys;
  for (const auto& [n, c] : a.V.coeff) keys.insert(n);
  for (const auto& [n, c] : b.V.coeff) keys.insert(n);
  for (const auto& n : keys) {
    cplx c = (1.0 - w) * a.V.coefficient(n) + w * b.V.coefficient(n);
    if (c != cplx(0.0, 0.0)) V.coeff[n] = c;
  }
  return V;
}

}  // namespace bloch
