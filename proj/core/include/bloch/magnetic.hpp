#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "bloch/fiber.hpp"
#include "bloch/potential.hpp"

namespace bloch {

// Flux per unit cell in units of 2 pi. Reduced: gcd(p,q)=1, and 0 <= p < q
// when q > 1 (the Weyl phases below are not invariant under p -> p+q for
// harmonics with odd n1*n2, so the representative matters).
struct Flux {
  int p = 0;
  int q = 1;
  double alpha() const { return static_cast<double>(p) / q; }
};

Flux make_flux(int p, int q);

// All reduced fractions p/q with 0 <= p < q <= q_max (zero flux enters as 0/1).
std::vector<Flux> flux_list(int q_max);

// Finitely many harmonics of h(K1,K2) = sum h_n exp(i(n1 K1 + n2 K2)),
// constrained Hermitian: h(-n) = conj(h(n)).
struct HarperSymbol {
  std::map<std::array<int, 2>, cplx> h;
};

HarperSymbol make_symbol(const std::vector<std::pair<std::array<int, 2>, cplx>>& entries);

// h(n1,n2) = V(n1,-n2); the slow-variable pair picks up a sign on the second
// argument. V must be 2-d and real.
HarperSymbol potential_symbol(const FourierPotential& V);

struct HarperModel {
  HarperSymbol symbol;
  Flux flux;
};

// q x q fiber at kappa in the magnetic BZ (kappa1 in [0, 2pi/q), kappa2 in
// [0, 2pi)). exp(iK2) = diag exp(i(kappa2 + 2 pi alpha m)); exp(iK1) = cyclic
// shift whose wrap entry carries exp(i q kappa1); mixed monomials take the
// Weyl phase exp(i pi alpha n1 n2). `corner` moves the boundary phase onto
// the link corner -> corner+1 (default q-1, the wrap), an isospectral choice.
MatC harper_matrix(const HarperModel& m, double k1, double k2, int corner = -1);

struct SpectrumInterval {
  double lo = 0.0;
  double hi = 0.0;
};

struct ButterflyRow {
  Flux flux;
  std::vector<SpectrumInterval> intervals;
};

// Eigenvalue ranges over an nk1 x nk2 magnetic-BZ grid for every flux in the
// Farey list; per-band ranges merged where they overlap by more than
// merge_tol (ranges merely touching stay separate).
std::vector<ButterflyRow> butterfly_scan(const HarperSymbol& symbol, int q_max, int nk1,
                                         int nk2, int threads = 0,
                                         double merge_tol = 1e-12);

// Plaquette Chern number of magnetic band r on an n x n magnetic-BZ grid.
// The band must stay isolated across the grid.
int magnetic_band_chern(const HarperModel& m, int band, int n);

struct LandauSpectrum {
  Flux flux;               // rational approximant actually quantized
  double alpha = 0.0;      // target eta / 2 pi
  double approx_error = 0.0;
  int level = 0;
  std::vector<SpectrumInterval> intervals;  // (level + 1/2) + eta * harper range
};

// Broadening of Landau level `level` by a weak periodic potential, at
// commutator scale eta = 1/B0: quantizes the potential symbol at the nearest
// flux p/q with q <= q_max and maps the Harper spectrum affinely.
LandauSpectrum landau_effective_spectrum(const FourierPotential& V, double eta, int level,
                                         int q_max, int nk, int threads = 0);

}  // namespace bloch
