#pragma once

#include <vector>

namespace bloch {

// First-derivative weights on unit-spaced nodes; divide by the spacing.

// Centered stencil over offsets -halfwidth..+halfwidth (order 2*halfwidth).
// weights[halfwidth + o] multiplies f(x + o).
std::vector<double> centered_weights(int halfwidth);

// One-sided/offset stencil on nodes 0..points-1 for the derivative at node
// `at` (Fornberg weights, order points-1).
std::vector<double> stencil_weights(int points, int at);

// Full-width antisymmetric weights differentiating all trigonometric
// polynomials below the Nyquist mode exactly on an n-periodic grid:
// f'(i) ~= sum_j w[j] f(i+j), w[0] = 0. The even-n Nyquist mode is treated
// as a pure cosine, whose derivative vanishes on the nodes.
std::vector<double> periodic_spectral_weights(int n);

}  // namespace bloch
