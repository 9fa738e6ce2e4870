#include "bloch/stencil.hpp"

#include <cmath>

#include "bloch/errors.hpp"

namespace bloch {

namespace {

// Fornberg's recursion for derivative weights at x0 on the given nodes.
// Returns weights for derivative order m.
std::vector<double> fornberg(const std::vector<double>& nodes, double x0, int m) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<std::vector<double>>> d(
      n, std::vector<std::vector<double>>(n, std::vector<double>(m + 1, 0.0)));
  d[0][0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    for (int j = 0; j < i; ++j) {
      double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      for (int k = 0; k <= std::min(i, m); ++k) {
        d[i][j][k] = ((nodes[i] - x0) * d[i - 1][j][k] -
                      (k > 0 ? k * d[i - 1][j][k - 1] : 0.0)) /
                     c3;
      }
    }
    for (int k = 0; k <= std::min(i, m); ++k) {
      d[i][i][k] = (c1 / c2) * ((k > 0 ? k * d[i - 1][i - 1][k - 1] : 0.0) -
                                (nodes[i - 1] - x0) * d[i - 1][i - 1][k]);
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = d[n - 1][j][m];
  return w;
}

}  // namespace

std::vector<double> centered_weights(int halfwidth) {
  if (halfwidth < 1) throw config_error("stencil halfwidth must be at least 1");
  std::vector<double> nodes(2 * halfwidth + 1);
  for (int o = -halfwidth; o <= halfwidth; ++o) nodes[o + halfwidth] = o;
  return fornberg(nodes, 0.0, 1);
}

std::vector<double> stencil_weights(int points, int at) {
  if (points < 2) throw config_error("stencil needs at least two points");
  if (at < 0 || at >= points) throw config_error("stencil target outside its nodes");
  std::vector<double> nodes(points);
  for (int i = 0; i < points; ++i) nodes[i] = i;
  return fornberg(nodes, at, 1);
}

std::vector<double> periodic_spectral_weights(int n) {
  if (n < 2) throw config_error("periodic stencil needs at least two nodes");
  // w[j] = (1/n) sum_m (i 2 pi m / n) e^{-2 pi i m j / n} over |m| < n/2;
  // the even-n Nyquist pair symmetrizes to a cosine and contributes 0 at
  // the nodes. Real form: w[j] = (4 pi / n^2) sum_{m>=1} m sin(2 pi m j / n).
  std::vector<double> w(n, 0.0);
  const double step = 2.0 * M_PI / n;
  const int mmax = (n - 1) / 2;
  for (int j = 1; j < n; ++j) {
    double s = 0.0;
    for (int m = 1; m <= mmax; ++m) s += m * std::sin(step * m * j);
    w[j] = 2.0 * step * s / n;
  }
  return w;
}

}  // namespace bloch
