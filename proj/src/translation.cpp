#include "mvsteady/translation.hpp"

#include <cmath>
#include <numbers>

namespace mvsteady {

namespace {

// Rotation acting on the 1D factor coefficients of one axis.
Matrix axis_rotation(const SpectralBasis& basis, int axis, double shift) {
  const int n = basis.axis_size();
  Matrix r = Matrix::Identity(n, n);
  const double w = basis.frequency(axis);
  for (int k = 1; k <= basis.modes_per_axis(); ++k) {
    const double th = k * w * shift;
    const int c = 2 * k - 1;
    const int s = 2 * k;
    r(c, c) = std::cos(th);
    r(c, s) = -std::sin(th);
    r(s, c) = std::sin(th);
    r(s, s) = std::cos(th);
  }
  return r;
}

double shifted_distance(const Vector& a, const Vector& b, const SpectralBasis& basis, const Point& s) {
  return (translate_coefficients(a, basis, s) - b).norm();
}

}  // namespace

Vector translate_coefficients(const Vector& a, const SpectralBasis& basis, const Point& shift) {
  if (a.size() != basis.size()) throw InputError("translate_coefficients: length mismatch");
  const int n = basis.axis_size();
  if (basis.dimension() == 1) return axis_rotation(basis, 0, shift[0]) * a;
  // Index i*n + k (axis 0 outermost) maps to column i, row k of an n x n view.
  const Eigen::Map<const Matrix> x(a.data(), n, n);
  Matrix y = axis_rotation(basis, 1, shift[1]) * x * axis_rotation(basis, 0, shift[0]).transpose();
  return Eigen::Map<const Vector>(y.data(), y.size());
}

TranslationMatch best_translation(const Vector& a, const Vector& b, const SpectralBasis& basis) {
  const int dim = basis.dimension();
  const int scan = dim == 1 ? 512 : 48;
  const double p0 = basis.domain().axis(0).length();
  const double p1 = dim == 2 ? basis.domain().axis(1).length() : 0.0;

  TranslationMatch best{Point::Zero(), shifted_distance(a, b, basis, Point::Zero())};
  for (int i = 0; i < scan; ++i) {
    for (int j = 0; j < (dim == 2 ? scan : 1); ++j) {
      const Point s(p0 * i / scan, dim == 2 ? p1 * j / scan : 0.0);
      const double d = shifted_distance(a, b, basis, s);
      if (d < best.distance) best = {s, d};
    }
  }

  constexpr double inv_phi = 0.6180339887498949;
  for (int sweep = 0; sweep < (dim == 2 ? 4 : 1); ++sweep) {
    for (int axis = 0; axis < dim; ++axis) {
      const double h = basis.domain().axis(axis).length() / scan;
      double lo = best.shift[axis] - h;
      double hi = best.shift[axis] + h;
      auto eval = [&](double t) {
        Point s = best.shift;
        s[axis] = t;
        return shifted_distance(a, b, basis, s);
      };
      double x1 = hi - inv_phi * (hi - lo);
      double x2 = lo + inv_phi * (hi - lo);
      double f1 = eval(x1);
      double f2 = eval(x2);
      for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = eval(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = eval(x2);
        }
      }
      const double t = 0.5 * (lo + hi);
      const double ft = eval(t);
      if (ft < best.distance) best.shift[axis] = t, best.distance = ft;
    }
  }
  for (int axis = 0; axis < dim; ++axis) {
    const double len = basis.domain().axis(axis).length();
    best.shift[axis] = std::fmod(std::fmod(best.shift[axis], len) + len, len);
  }
  return best;
}

void tag_translations(std::vector<SteadyState>& states, const SpectralBasis& basis, double tol) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].translate_of.reset();
    for (std::size_t j = 0; j < i; ++j) {
      if (states[j].translate_of) continue;
      const auto match = best_translation(states[j].coeffs, states[i].coeffs, basis);
      if (match.distance <= tol) {
        states[i].translate_of = static_cast<Index>(j);
        states[i].shift = match.shift;
        break;
      }
    }
  }
}

}  // namespace mvsteady
