#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsteady {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Point on the 1D or 2D torus. In 1D only the first coordinate is used.
using Point = Eigen::Vector2d;

/// Thrown for malformed inputs to the numerical core (bad sizes, non-finite
/// values, invalid parameters). The CLI maps it to exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces non-finite values or blows up.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

class TorusDomain {
 public:
  explicit TorusDomain(std::vector<Interval> axes);

  static TorusDomain line(double lo, double hi) { return TorusDomain({{lo, hi}}); }
  static TorusDomain square(double lo, double hi) { return TorusDomain({{lo, hi}, {lo, hi}}); }

  int dimension() const { return static_cast<int>(axes_.size()); }
  const Interval& axis(int j) const { return axes_.at(static_cast<std::size_t>(j)); }
  double volume() const;

  /// Periodic representative of a coordinate difference, in [-P/2, P/2).
  double wrap(int j, double z) const;

 private:
  std::vector<Interval> axes_;
};

/// One-dimensional Fourier factor: the constant, cos(k w x) or sin(k w x).
struct Mode1D {
  enum class Kind { constant, cosine, sine };
  Kind kind = Kind::constant;
  int wavenumber = 0;
};

/// Real orthonormal Fourier basis on the torus.
///
/// 1D ordering: constant, cos 1, sin 1, cos 2, sin 2, ... (L = 2l+1).
/// 2D: tensor products phi_i(x) phi_j(y), lexicographic with i outermost
/// (L = (2l+1)^2). The first function is always 1/sqrt(|Omega|).
class SpectralBasis {
 public:
  SpectralBasis(TorusDomain domain, int modes_per_axis);

  const TorusDomain& domain() const { return domain_; }
  int modes_per_axis() const { return modes_; }
  int dimension() const { return domain_.dimension(); }
  /// Number of 1D factors per axis (2l+1).
  int axis_size() const { return 2 * modes_ + 1; }
  Index size() const { return size_; }

  /// Factor of basis function `idx` along axis j.
  const Mode1D& factor(Index idx, int j) const;
  /// Index of the 1D factor of `idx` along axis j (0 .. 2l).
  int factor_index(Index idx, int j) const;
  /// Angular frequency 2 pi / P_j of axis j.
  double frequency(int j) const;

  double value(Index idx, const Point& x) const;
  Point gradient(Index idx, const Point& x) const;

  /// Basis values at the given points, one row per point (N x L).
  Matrix values(std::span<const Point> points) const;
  /// Partial derivatives along axis j at the given points (N x L).
  Matrix derivatives(std::span<const Point> points, int axis) const;

 private:
  // Values and derivatives of the 2l+1 one-dimensional factors at coordinate t.
  void axis_table(int j, double t, double* val, double* der) const;

  TorusDomain domain_;
  int modes_;
  Index size_;
  std::vector<Mode1D> modes1d_;
};

SpectralBasis build_basis(const TorusDomain& domain, int modes_per_axis);

enum class QuadratureKind { gauss_legendre, uniform };

struct QuadratureRule {
  std::vector<Point> nodes;
  Vector weights;
  int points_per_axis = 0;
  QuadratureKind kind = QuadratureKind::gauss_legendre;

  Index size() const { return weights.size(); }
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// Tensor-product quadrature on the domain. Gauss-Legendre by default; the
/// uniform (periodic trapezoid) rule is exact for trigonometric polynomials
/// of degree < points_per_axis.
QuadratureRule build_quadrature(const TorusDomain& domain, int points_per_axis,
                                QuadratureKind kind = QuadratureKind::gauss_legendre);

/// Uniform tensor mesh with `points_per_axis` nodes per axis (left endpoints).
std::vector<Point> uniform_grid(const TorusDomain& domain, int points_per_axis);

/// Pointwise values of sum_n a_n psi_n on the grid.
Vector evaluate_density(const Vector& coeffs, const SpectralBasis& basis,
                        std::span<const Point> grid);

/// Density on uniform_grid(domain, points_per_axis), evaluated separably
/// (one factor table per axis) so large 2D meshes stay cheap.
Vector density_on_uniform_grid(const Vector& coeffs, const SpectralBasis& basis, int points_per_axis);

/// a_n = integral of f psi_n, computed with the quadrature rule.
Vector project_function(const Vector& values_at_nodes, const SpectralBasis& basis,
                        const QuadratureRule& quad);

/// Coefficients of the uniform probability density 1/|Omega|.
Vector uniform_density_coefficients(const SpectralBasis& basis);

}  // namespace mvsteady
