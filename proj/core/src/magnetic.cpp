#include "bloch/magnetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "bloch/errors.hpp"
#include "bloch/geometry.hpp"
#include "bloch/parallel.hpp"

namespace bloch {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string flux_str(const Flux& f) {
  std::ostringstream s;
  s << f.p << "/" << f.q;
  return s.str();
}

std::vector<SpectrumInterval> merge_intervals(std::vector<SpectrumInterval> iv, double tol) {
  std::sort(iv.begin(), iv.end(),
            [](const SpectrumInterval& a, const SpectrumInterval& b) { return a.lo < b.lo; });
  std::vector<SpectrumInterval> out;
  for (const auto& v : iv) {
    // Overlap beyond tol merges; bands merely touching stay distinct.
    if (!out.empty() && v.lo < out.back().hi - tol)
      out.back().hi = std::max(out.back().hi, v.hi);
    else
      out.push_back(v);
  }
  return out;
}

std::vector<SpectrumInterval> scan_flux(const HarperSymbol& symbol, const Flux& flux, int nk1,
                                        int nk2, double merge_tol) {
  const int q = flux.q;
  HarperModel m{symbol, flux};
  std::vector<SpectrumInterval> bands(q);
  for (auto& b : bands) {
    b.lo = std::numeric_limits<double>::infinity();
    b.hi = -std::numeric_limits<double>::infinity();
  }
  Eigen::SelfAdjointEigenSolver<MatC> es;
  for (int a = 0; a < nk1; ++a) {
    double k1 = 2.0 * kPi / q * a / nk1;
    for (int b = 0; b < nk2; ++b) {
      double k2 = 2.0 * kPi * b / nk2;
      es.compute(harper_matrix(m, k1, k2), Eigen::EigenvaluesOnly);
      for (int r = 0; r < q; ++r) {
        bands[r].lo = std::min(bands[r].lo, es.eigenvalues()[r]);
        bands[r].hi = std::max(bands[r].hi, es.eigenvalues()[r]);
      }
    }
  }
  return merge_intervals(std::move(bands), merge_tol);
}

}  // namespace

Flux make_flux(int p, int q) {
  if (q < 1) throw config_error("flux denominator must be >= 1");
  int g = std::gcd(std::abs(p), q);
  if (g > 1) {
    p /= g;
    q /= g;
  }
  if (q > 1 && (p < 0 || p >= q))
    throw config_error("flux numerator must lie in [0, q); integer shifts change the "
                       "Weyl phases and are not a symmetry");
  return Flux{p, q};
}

std::vector<Flux> flux_list(int q_max) {
  if (q_max < 1) throw config_error("q_max must be >= 1");
  std::vector<Flux> out;
  for (int q = 1; q <= q_max; ++q)
    for (int p = 0; p < q; ++p)
      if (std::gcd(p, q) == 1) out.push_back(Flux{p, q});
  return out;
}

HarperSymbol make_symbol(const std::vector<std::pair<std::array<int, 2>, cplx>>& entries) {
  HarperSymbol s;
  for (const auto& [n, c] : entries) s.h[n] += c;
  for (auto it = s.h.begin(); it != s.h.end();)
    it = (it->second == cplx(0.0)) ? s.h.erase(it) : std::next(it);
  for (const auto& [n, c] : s.h) {
    auto conj_it = s.h.find({-n[0], -n[1]});
    cplx other = (conj_it == s.h.end()) ? cplx(0.0) : conj_it->second;
    if (std::abs(c - std::conj(other)) > 1e-12 * std::max(1.0, std::abs(c))) {
      std::ostringstream msg;
      msg << "symbol is not Hermitian at harmonic (" << n[0] << "," << n[1] << ")";
      throw config_error(msg.str());
    }
  }
  return s;
}

HarperSymbol potential_symbol(const FourierPotential& V) {
  if (V.lat.dim != 2) throw config_error("effective magnetic symbols need a 2-d potential");
  if (!V.declared_real) throw config_error("effective magnetic symbols need a real potential");
  std::vector<std::pair<std::array<int, 2>, cplx>> entries;
  entries.reserve(V.coeff.size());
  for (const auto& [n, c] : V.coeff)
    entries.push_back({{n[0], -n[1]}, c});
  return make_symbol(entries);
}

MatC harper_matrix(const HarperModel& m, double k1, double k2, int corner) {
  const int q = m.flux.q;
  if (corner < 0) corner = q - 1;
  if (corner >= q) throw config_error("boundary-phase corner outside the fiber dimension");
  const double alpha = m.flux.alpha();

  MatC U1 = MatC::Zero(q, q);
  for (int r = 0; r < q; ++r)
    U1((r + 1) % q, r) = (r == corner) ? std::polar(1.0, q * k1) : 1.0;

  MatC M = MatC::Zero(q, q);
  double scale = 0.0;
  for (const auto& [n, c] : m.symbol.h) {
    scale += std::abs(c);
    MatC t = MatC::Identity(q, q);
    MatC step = (n[0] >= 0) ? U1 : MatC(U1.adjoint());
    for (int j = 0; j < std::abs(n[0]); ++j) t = step * t;
    VecC d(q);
    for (int r = 0; r < q; ++r)
      d[r] = std::polar(1.0, n[1] * (k2 + 2.0 * kPi * alpha * r));
    M += (c * std::polar(1.0, kPi * alpha * n[0] * n[1])) * t * d.asDiagonal();
  }
  double herm = (M - M.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-13 * std::max(1.0, scale)) {
    std::ostringstream w;
    w << "{\"flux\":\"" << flux_str(m.flux) << "\",\"defect\":" << herm << "}";
    throw numerical_error("non-hermitian-fiber", "assembled magnetic fiber is not Hermitian",
                          w.str());
  }
  return M;
}

std::vector<ButterflyRow> butterfly_scan(const HarperSymbol& symbol, int q_max, int nk1,
                                         int nk2, int threads, double merge_tol) {
  if (nk1 < 1 || nk2 < 1) throw config_error("butterfly grid sizes must be >= 1");
  std::vector<Flux> fluxes = flux_list(q_max);
  std::vector<ButterflyRow> rows(fluxes.size());
  parallel_for(static_cast<int>(fluxes.size()), threads, [&](int i) {
    rows[i].flux = fluxes[i];
    rows[i].intervals = scan_flux(symbol, fluxes[i], nk1, nk2, merge_tol);
  });
  return rows;
}

int magnetic_band_chern(const HarperModel& m, int band, int n) {
  const int q = m.flux.q;
  if (band < 0 || band >= q) throw config_error("magnetic band index outside [0, q)");
  if (n < 2) throw config_error("magnetic BZ grid must be at least 2x2");

  std::vector<MatC> U(static_cast<size_t>(n) * n);
  double gap = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  Eigen::SelfAdjointEigenSolver<MatC> es;
  for (int a = 0; a < n; ++a) {
    double k1 = 2.0 * kPi / q * a / n;
    for (int b = 0; b < n; ++b) {
      double k2 = 2.0 * kPi * b / n;
      es.compute(harper_matrix(m, k1, k2));
      const auto& E = es.eigenvalues();
      scale = std::max(scale, std::max(std::abs(E[0]), std::abs(E[q - 1])));
      if (band > 0) gap = std::min(gap, E[band] - E[band - 1]);
      if (band + 1 < q) gap = std::min(gap, E[band + 1] - E[band]);
      U[a * n + b] = es.eigenvectors().col(band);
    }
  }
  if (q > 1 && gap <= 1e-9 * scale) {
    std::ostringstream w;
    w << "{\"flux\":\"" << flux_str(m.flux) << "\",\"band\":" << band << ",\"gap\":" << gap
      << "}";
    throw numerical_error("gapless-window", "magnetic band is not isolated over the BZ grid",
                          w.str());
  }

  auto ident = [](const MatC& u) { return u; };
  std::vector<double> F = detail::plaquette_field(U, n, n, ident, ident);
  double total = 0.0;
  for (double f : F) total += f;
  double c = total / (2.0 * kPi);
  int chern = static_cast<int>(std::llround(c));
  if (std::abs(c - chern) > 1e-9) {
    std::ostringstream w;
    w << "{\"flux\":\"" << flux_str(m.flux) << "\",\"band\":" << band
      << ",\"total_over_2pi\":" << c << "}";
    throw numerical_error("curvature-not-quantized",
                          "magnetic plaquette total misses an integer by more than 1e-9",
                          w.str());
  }
  return chern;
}

LandauSpectrum landau_effective_spectrum(const FourierPotential& V, double eta, int level,
                                         int q_max, int nk, int threads) {
  (void)threads;
  if (eta < 0.0) throw config_error("eta must be nonnegative");
  if (level < 0) throw config_error("Landau level index must be nonnegative");
  if (q_max < 1) throw config_error("q_max must be >= 1");
  if (nk < 1) throw config_error("Landau spectrum grid must be >= 1");

  const double alpha = eta / (2.0 * kPi);
  Flux best{0, 1};
  double best_err = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= q_max; ++q) {
    long p0 = std::lround(alpha * q);
    for (long p = std::max(0L, p0 - 1); p <= p0 + 1; ++p) {
      double err = std::abs(alpha - static_cast<double>(p) / q);
      if (err < best_err - 1e-15) {
        best_err = err;
        int g = std::gcd(static_cast<int>(p), q);
        g = std::max(g, 1);
        best = Flux{static_cast<int>(p) / g, q / g};
      }
    }
  }

  LandauSpectrum out;
  out.flux = best;
  out.alpha = alpha;
  out.approx_error = best_err;
  out.level = level;
  std::vector<SpectrumInterval> iv =
      scan_flux(potential_symbol(V), best, nk, nk, 1e-12);
  out.intervals.reserve(iv.size());
  for (const auto& v : iv)
    out.intervals.push_back({level + 0.5 + eta * v.lo, level + 0.5 + eta * v.hi});
  return out;
}

}  // namespace bloch
