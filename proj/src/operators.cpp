#include "mvsteady/operators.hpp"

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <fstream>
#include <sstream>

namespace mvsteady {

Vector GalerkinOperators::mass_solve(const Vector& v) const { return mass_llt_.solve(v); }

void GalerkinOperators::factorize_mass() {
  mass_llt_.compute(mass);
  if (mass_llt_.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
}

std::string model_key(const Model& model) {
  std::ostringstream os;
  os.precision(17);
  os << model.name;
  for (const auto& [k, v] : model.params) os << ';' << k << '=' << v;
  return os.str();
}

namespace {

std::string describe(const Point& x, int dim) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << x[0];
  if (dim == 2) os << ", " << x[1];
  os << ')';
  return os.str();
}

}  // namespace

GalerkinOperators assemble_operators(const SpectralBasis& basis, const QuadratureRule& quad,
                                     const Model& model, double beta_inv, const AssemblyOptions& options) {
  if (!(beta_inv > 0.0)) throw InputError("beta_inv must be positive");
  const int dim = basis.dimension();
  if (model.domain.dimension() != dim) throw InputError("model and basis live on tori of different dimension");
  const Index n_q = quad.size();
  const Index size = basis.size();

  GalerkinOperators ops(basis, quad, model_key(model), beta_inv);
  const Matrix psi = basis.values(quad.nodes);
  std::vector<Matrix> dpsi;
  for (int j = 0; j < dim; ++j) dpsi.push_back(basis.derivatives(quad.nodes, j));

  std::vector<Vector> grad_v(static_cast<std::size_t>(dim), Vector(n_q));
  for (Index q = 0; q < n_q; ++q) {
    const Point& x = quad.nodes[static_cast<std::size_t>(q)];
    const Point g = model.confining_gradient(x);
    for (int j = 0; j < dim; ++j) {
      if (!std::isfinite(g[j])) throw NumericalError("non-finite confining gradient at node " + describe(x, dim));
      grad_v[static_cast<std::size_t>(j)][q] = g[j];
    }
  }

  ops.mass = kernels::weighted_gram(psi, quad.weights, psi);
  ops.stiffness = Matrix::Zero(size, size);
  ops.confinement = Matrix::Zero(size, size);
  for (int j = 0; j < dim; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    ops.stiffness += kernels::weighted_gram(dpsi[ju], quad.weights, dpsi[ju]);
    ops.confinement += kernels::weighted_gram(dpsi[ju], quad.weights.cwiseProduct(grad_v[ju]), psi);
  }
  ops.mass = 0.5 * (ops.mass + ops.mass.transpose()).eval();
  ops.stiffness = 0.5 * (ops.stiffness + ops.stiffness.transpose()).eval();
  ops.zeta = psi.transpose() * quad.weights;

  if (model.has_interaction) {
    const Matrix k_all = kernels::pairwise(std::span<const Point>(quad.nodes), [&](const Point& x, const Point& y) {
      return model.interaction_gradient(x, y)[0];
    });
    std::vector<Matrix> fields;
    fields.push_back(kernels::convolve(k_all, quad.weights, psi));
    if (dim == 2) {
      const Matrix k_y = kernels::pairwise(std::span<const Point>(quad.nodes), [&](const Point& x, const Point& y) {
        return model.interaction_gradient(x, y)[1];
      });
      fields.push_back(kernels::convolve(k_y, quad.weights, psi));
    }
    for (const auto& f : fields) {
      if (!f.allFinite()) {
        for (Index q = 0; q < n_q; ++q) {
          if (!f.row(q).allFinite()) {
            throw NumericalError("non-finite interaction gradient near node " +
                                 describe(quad.nodes[static_cast<std::size_t>(q)], dim));
          }
        }
      }
    }
    ops.interaction = kernels::assemble_trilinear(psi, fields, dpsi, quad.weights);
  } else {
    ops.interaction = BilinearMap::zero(size);
  }

  if (options.control_tensors) {
    for (int j = 0; j < dim; ++j) {
      const Matrix* field = &psi;
      ops.control.push_back(kernels::assemble_trilinear(psi, std::span<const Matrix>(field, 1),
                                                        std::span<const Matrix>(&dpsi[static_cast<std::size_t>(j)], 1),
                                                        quad.weights));
    }
  }
  ops.factorize_mass();
  return ops;
}

BilinearMap assemble_interaction_reference(const SpectralBasis& basis, const QuadratureRule& quad,
                                           const Model& model) {
  const int dim = basis.dimension();
  const Index n_q = quad.size();
  const Index size = basis.size();
  const Matrix psi = basis.values(quad.nodes);
  std::vector<Matrix> dpsi, fields;
  for (int j = 0; j < dim; ++j) {
    dpsi.push_back(basis.derivatives(quad.nodes, j));
    fields.push_back(Matrix::Zero(n_q, size));
  }
  for (Index q = 0; q < n_q; ++q) {
    for (Index r = 0; r < n_q; ++r) {
      const Point g = model.interaction_gradient(quad.nodes[static_cast<std::size_t>(q)],
                                                 quad.nodes[static_cast<std::size_t>(r)]);
      for (int j = 0; j < dim; ++j) {
        for (Index k = 0; k < size; ++k) {
          fields[static_cast<std::size_t>(j)](q, k) += quad.weights[r] * g[j] * psi(r, k);
        }
      }
    }
  }
  return kernels::reference::assemble_trilinear(psi, fields, dpsi, quad.weights);
}

namespace {

constexpr char kMagic[8] = {'M', 'V', 'O', 'P', 'S', 'v', '0', '1'};
constexpr std::uint32_t kCacheVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& is) {
  const auto n = read_u64(is);
  if (n > (1u << 20)) throw NumericalError("corrupt operator cache");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

// Row-major payload: rows, cols, then values row by row.
void write_matrix(std::ostream& os, const Matrix& m) {
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
}
Matrix read_matrix(std::istream& is) {
  const auto rows = static_cast<Index>(read_u64(is));
  const auto cols = static_cast<Index>(read_u64(is));
  if (rows < 0 || cols < 0 || rows * cols > (Index{1} << 32)) throw NumericalError("corrupt operator cache");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
  return rm;
}

}  // namespace

void save_operators(const std::filesystem::path& path, const GalerkinOperators& ops) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write operator cache " + path.string());
  os.write(kMagic, sizeof kMagic);
  write_u64(os, kCacheVersion);
  write_string(os, ops.model_key);
  write_u64(os, static_cast<std::uint64_t>(ops.basis.modes_per_axis()));
  write_u64(os, static_cast<std::uint64_t>(ops.quad.points_per_axis));
  write_u64(os, ops.quad.kind == QuadratureKind::gauss_legendre ? 0 : 1);
  write_f64(os, ops.beta_inv);
  const auto& dom = ops.basis.domain();
  write_u64(os, static_cast<std::uint64_t>(dom.dimension()));
  for (int j = 0; j < dom.dimension(); ++j) {
    write_f64(os, dom.axis(j).lo);
    write_f64(os, dom.axis(j).hi);
  }
  write_matrix(os, ops.mass);
  write_matrix(os, ops.stiffness);
  write_matrix(os, ops.confinement);
  write_matrix(os, ops.zeta);
  write_matrix(os, ops.interaction.data());
  write_u64(os, ops.control.size());
  for (const auto& d : ops.control) write_matrix(os, d.data());
}

std::optional<GalerkinOperators> load_operators(const std::filesystem::path& path, const std::string& key,
                                                int modes_per_axis, int quad_points, double beta_inv) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof kMagic] = {};
  is.read(magic, sizeof magic);
  if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) return std::nullopt;
  if (read_u64(is) != kCacheVersion) return std::nullopt;
  if (read_string(is) != key) return std::nullopt;
  if (read_u64(is) != static_cast<std::uint64_t>(modes_per_axis)) return std::nullopt;
  if (read_u64(is) != static_cast<std::uint64_t>(quad_points)) return std::nullopt;
  const auto kind = read_u64(is) == 0 ? QuadratureKind::gauss_legendre : QuadratureKind::uniform;
  if (read_f64(is) != beta_inv) return std::nullopt;
  const auto dim = read_u64(is);
  std::vector<Interval> axes;
  for (std::uint64_t j = 0; j < dim; ++j) {
    const double lo = read_f64(is);
    const double hi = read_f64(is);
    axes.push_back({lo, hi});
  }
  const TorusDomain dom(axes);
  GalerkinOperators ops(SpectralBasis(dom, modes_per_axis), build_quadrature(dom, quad_points, kind), key, beta_inv);
  ops.mass = read_matrix(is);
  ops.stiffness = read_matrix(is);
  ops.confinement = read_matrix(is);
  ops.zeta = read_matrix(is);
  ops.interaction = BilinearMap(read_matrix(is));
  const auto n_control = read_u64(is);
  for (std::uint64_t j = 0; j < n_control; ++j) ops.control.emplace_back(read_matrix(is));
  if (!is) return std::nullopt;
  ops.factorize_mass();
  return ops;
}

}  // namespace mvsteady
