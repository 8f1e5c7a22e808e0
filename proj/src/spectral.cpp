#include "mvsteady/spectral.hpp"

#include <cmath>
#include <numbers>

namespace mvsteady {

TorusDomain::TorusDomain(std::vector<Interval> axes) : axes_(std::move(axes)) {
  if (axes_.size() != 1 && axes_.size() != 2) {
    throw InputError("torus dimension must be 1 or 2, got " + std::to_string(axes_.size()));
  }
  for (const auto& ax : axes_) {
    if (!(ax.length() > 0.0) || !std::isfinite(ax.lo) || !std::isfinite(ax.hi)) {
      throw InputError("torus axis must have strictly positive finite length");
    }
  }
}

double TorusDomain::volume() const {
  double v = 1.0;
  for (const auto& ax : axes_) v *= ax.length();
  return v;
}

double TorusDomain::wrap(int j, double z) const {
  const double p = axis(j).length();
  return z - p * std::floor(z / p + 0.5);
}

SpectralBasis::SpectralBasis(TorusDomain domain, int modes_per_axis)
    : domain_(std::move(domain)), modes_(modes_per_axis) {
  if (modes_per_axis < 1) throw InputError("modes_per_axis must be >= 1");
  modes1d_.push_back({Mode1D::Kind::constant, 0});
  for (int k = 1; k <= modes_; ++k) {
    modes1d_.push_back({Mode1D::Kind::cosine, k});
    modes1d_.push_back({Mode1D::Kind::sine, k});
  }
  size_ = 1;
  for (int j = 0; j < domain_.dimension(); ++j) size_ *= axis_size();
}

int SpectralBasis::factor_index(Index idx, int j) const {
  if (domain_.dimension() == 1) return static_cast<int>(idx);
  const int n = axis_size();
  return j == 0 ? static_cast<int>(idx / n) : static_cast<int>(idx % n);
}

const Mode1D& SpectralBasis::factor(Index idx, int j) const {
  return modes1d_[static_cast<std::size_t>(factor_index(idx, j))];
}

double SpectralBasis::frequency(int j) const {
  return 2.0 * std::numbers::pi / domain_.axis(j).length();
}

void SpectralBasis::axis_table(int j, double t, double* val, double* der) const {
  const double p = domain_.axis(j).length();
  const double w = frequency(j);
  const double c0 = 1.0 / std::sqrt(p);
  const double c1 = std::sqrt(2.0 / p);
  val[0] = c0;
  der[0] = 0.0;
  for (int k = 1; k <= modes_; ++k) {
    const double kw = k * w;
    const double c = std::cos(kw * t);
    const double s = std::sin(kw * t);
    val[2 * k - 1] = c1 * c;
    der[2 * k - 1] = -c1 * kw * s;
    val[2 * k] = c1 * s;
    der[2 * k] = c1 * kw * c;
  }
}

double SpectralBasis::value(Index idx, const Point& x) const {
  const int n = axis_size();
  std::vector<double> val(static_cast<std::size_t>(n)), der(static_cast<std::size_t>(n));
  double out = 1.0;
  for (int j = 0; j < dimension(); ++j) {
    axis_table(j, x[j], val.data(), der.data());
    out *= val[static_cast<std::size_t>(factor_index(idx, j))];
  }
  return out;
}

Point SpectralBasis::gradient(Index idx, const Point& x) const {
  const int n = axis_size();
  std::vector<double> val(2 * static_cast<std::size_t>(n)), der(2 * static_cast<std::size_t>(n));
  for (int j = 0; j < dimension(); ++j) axis_table(j, x[j], val.data() + j * n, der.data() + j * n);
  Point g = Point::Zero();
  if (dimension() == 1) {
    g[0] = der[static_cast<std::size_t>(idx)];
    return g;
  }
  const auto i0 = static_cast<std::size_t>(factor_index(idx, 0));
  const auto i1 = static_cast<std::size_t>(factor_index(idx, 1));
  g[0] = der[i0] * val[n + i1];
  g[1] = val[i0] * der[n + i1];
  return g;
}

namespace {

// Fills `out` (N x L) with products of per-axis factor tables; `deriv_axis`
// selects which axis contributes a derivative (-1 for plain values).
Matrix tabulate(const SpectralBasis& basis, std::span<const Point> points, int deriv_axis,
                const auto& axis_table) {
  const int n = basis.axis_size();
  const int d = basis.dimension();
  Matrix out(static_cast<Index>(points.size()), basis.size());
  std::vector<double> val(2 * static_cast<std::size_t>(n)), der(2 * static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < points.size(); ++q) {
    for (int j = 0; j < d; ++j) axis_table(j, points[q][j], val.data() + j * n, der.data() + j * n);
    const double* f0 = deriv_axis == 0 ? der.data() : val.data();
    if (d == 1) {
      for (int i = 0; i < n; ++i) out(static_cast<Index>(q), i) = f0[i];
      continue;
    }
    const double* f1 = deriv_axis == 1 ? der.data() + n : val.data() + n;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) out(static_cast<Index>(q), i * n + k) = f0[i] * f1[k];
    }
  }
  return out;
}

}  // namespace

Matrix SpectralBasis::values(std::span<const Point> points) const {
  return tabulate(*this, points, -1,
                  [this](int j, double t, double* v, double* dv) { axis_table(j, t, v, dv); });
}

Matrix SpectralBasis::derivatives(std::span<const Point> points, int axis) const {
  if (axis < 0 || axis >= dimension()) throw InputError("derivative axis out of range");
  return tabulate(*this, points, axis,
                  [this](int j, double t, double* v, double* dv) { axis_table(j, t, v, dv); });
}

SpectralBasis build_basis(const TorusDomain& domain, int modes_per_axis) {
  return SpectralBasis(domain, modes_per_axis);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw InputError("Gauss-Legendre rule needs at least one point");
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = wi;
    w[static_cast<std::size_t>(n - 1 - i)] = wi;
  }
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
  return {x, w};
}

QuadratureRule build_quadrature(const TorusDomain& domain, int points_per_axis, QuadratureKind kind) {
  if (points_per_axis < 2) throw InputError("quadrature needs at least 2 points per axis");
  const int d = domain.dimension();
  std::vector<std::vector<double>> ax_nodes(static_cast<std::size_t>(d)), ax_weights(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto& iv = domain.axis(j);
    auto& xs = ax_nodes[static_cast<std::size_t>(j)];
    auto& ws = ax_weights[static_cast<std::size_t>(j)];
    if (kind == QuadratureKind::gauss_legendre) {
      auto [t, w] = gauss_legendre(points_per_axis);
      const double half = 0.5 * iv.length();
      const double mid = 0.5 * (iv.lo + iv.hi);
      for (std::size_t i = 0; i < t.size(); ++i) {
        xs.push_back(mid + half * t[i]);
        ws.push_back(half * w[i]);
      }
    } else {
      const double h = iv.length() / points_per_axis;
      for (int i = 0; i < points_per_axis; ++i) {
        xs.push_back(iv.lo + i * h);
        ws.push_back(h);
      }
    }
  }
  QuadratureRule rule;
  rule.points_per_axis = points_per_axis;
  rule.kind = kind;
  const auto n = static_cast<std::size_t>(points_per_axis);
  if (d == 1) {
    rule.weights.resize(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      rule.nodes.emplace_back(ax_nodes[0][i], 0.0);
      rule.weights[static_cast<Index>(i)] = ax_weights[0][i];
    }
  } else {
    rule.weights.resize(static_cast<Index>(n * n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        rule.nodes.emplace_back(ax_nodes[0][i], ax_nodes[1][k]);
        rule.weights[static_cast<Index>(i * n + k)] = ax_weights[0][i] * ax_weights[1][k];
      }
    }
  }
  return rule;
}

std::vector<Point> uniform_grid(const TorusDomain& domain, int points_per_axis) {
  return build_quadrature(domain, points_per_axis, QuadratureKind::uniform).nodes;
}

Vector evaluate_density(const Vector& coeffs, const SpectralBasis& basis, std::span<const Point> grid) {
  if (coeffs.size() != basis.size()) {
    throw InputError("coefficient vector has length " + std::to_string(coeffs.size()) +
                     ", basis has " + std::to_string(basis.size()));
  }
  return basis.values(grid) * coeffs;
}

Vector density_on_uniform_grid(const Vector& coeffs, const SpectralBasis& basis, int points_per_axis) {
  if (coeffs.size() != basis.size()) throw InputError("density_on_uniform_grid: length mismatch");
  const auto& dom = basis.domain();
  std::vector<Matrix> tables;
  for (int j = 0; j < dom.dimension(); ++j) {
    const auto line = TorusDomain::line(dom.axis(j).lo, dom.axis(j).hi);
    const auto pts = uniform_grid(line, points_per_axis);
    tables.push_back(SpectralBasis(line, basis.modes_per_axis()).values(pts));
  }
  if (dom.dimension() == 1) return tables[0] * coeffs;
  const int n = basis.axis_size();
  const Eigen::Map<const Matrix> x(coeffs.data(), n, n);
  const Matrix y = tables[1] * x * tables[0].transpose();
  return Eigen::Map<const Vector>(y.data(), y.size());
}

Vector project_function(const Vector& values_at_nodes, const SpectralBasis& basis,
                        const QuadratureRule& quad) {
  if (values_at_nodes.size() != quad.size()) throw InputError("projection: value count does not match quadrature");
  if (!values_at_nodes.allFinite()) throw InputError("projection: non-finite input values");
  const Matrix psi = basis.values(quad.nodes);
  return psi.transpose() * quad.weights.cwiseProduct(values_at_nodes);
}

Vector uniform_density_coefficients(const SpectralBasis& basis) {
  Vector a = Vector::Zero(basis.size());
  a[0] = 1.0 / std::sqrt(basis.domain().volume());
  return a;
}

}  // namespace mvsteady
