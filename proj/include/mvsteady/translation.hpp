#pragma once

#include "mvsteady/deflation.hpp"

namespace mvsteady {

/// Coefficients of x -> rho(x - shift) for rho = sum a_n psi_n. Exact in the
/// Fourier basis: every (cos k, sin k) pair is rotated by k w shift.
Vector translate_coefficients(const Vector& a, const SpectralBasis& basis, const Point& shift);

struct TranslationMatch {
  Point shift = Point::Zero();
  /// L2 distance between the shifted `a` and `b`.
  double distance = 0.0;
};

/// Shift maximizing the circular cross-correlation of the two densities,
/// i.e. minimizing |translate(a, s) - b|_L2. Coarse scan, then golden-section
/// refinement per axis.
TranslationMatch best_translation(const Vector& a, const Vector& b, const SpectralBasis& basis);

/// Marks each state that is a translate (within `tol` in L2) of an earlier one.
void tag_translations(std::vector<SteadyState>& states, const SpectralBasis& basis, double tol);

}  // namespace mvsteady
