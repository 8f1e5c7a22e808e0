#pragma once

// Data-parallel inner kernels. Each kernel in `mvsteady::kernels` has a plain
// loop counterpart in `mvsteady::kernels::reference` that is used by the tests
// as an oracle and by bench/ as the serial baseline.

#include "mvsteady/spectral.hpp"

#include <span>

namespace mvsteady {

/// Family of L bilinear forms T_m(x, y) = x^T T_m y, m = 0..L-1.
///
/// Storage is one contiguous column per m holding T_m in column-major order,
/// so entry (m, n, k) lives at data(n + L*k, m).
class BilinearMap {
 public:
  BilinearMap() = default;
  explicit BilinearMap(Matrix data);

  static BilinearMap zero(Index size);

  Index size() const { return size_; }
  const Matrix& data() const { return data_; }
  double entry(Index m, Index n, Index k) const { return data_(n + size_ * k, m); }

  /// T_m as an L x L matrix view.
  Eigen::Map<const Matrix> slice(Index m) const { return {data_.col(m).data(), size_, size_}; }

  /// out_m = x^T T_m y.
  Vector apply(const Vector& x, const Vector& y) const;
  /// d(out)/dx: row m is (T_m y)^T.
  Matrix jacobian_first(const Vector& y) const;
  /// d(out)/dy: row m is x^T T_m.
  Matrix jacobian_second(const Vector& x) const;
  /// sum_m w_m T_m.
  Matrix contract(const Vector& w) const;

  double max_abs() const { return data_.size() ? data_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  Index size_ = 0;
  Matrix data_;
};

namespace kernels {

/// Weighted trilinear quadrature
///   T_m(n, k) = sum_q w_q psi(q, n) sum_j field_j(q, k) dpsi_j(q, m).
///
/// `psi` and every `field_j`, `dpsi_j` are N x L; one field/derivative pair per
/// spatial axis. Parallel over k; results do not depend on the schedule.
BilinearMap assemble_trilinear(const Matrix& psi, std::span<const Matrix> fields,
                               std::span<const Matrix> dpsi, const Vector& weights);

/// kernel * diag(weights) * psi: discrete convolution of every basis column.
Matrix convolve(const Matrix& kernel, const Vector& weights, const Matrix& psi);

/// sum_q w_q f(q) g(q)^T for N x L tables f, g.
Matrix weighted_gram(const Matrix& f, const Vector& weights, const Matrix& g);

/// Dense matrix K(q, r) = f(x_q, x_r) over the quadrature nodes.
template <typename F>
Matrix pairwise(std::span<const Point> nodes, F&& f);

int max_threads();

namespace reference {

BilinearMap assemble_trilinear(const Matrix& psi, std::span<const Matrix> fields,
                               std::span<const Matrix> dpsi, const Vector& weights);
Matrix convolve(const Matrix& kernel, const Vector& weights, const Matrix& psi);
Vector bilinear_apply(const BilinearMap& t, const Vector& x, const Vector& y);
Matrix bilinear_contract(const BilinearMap& t, const Vector& w);

}  // namespace reference

}  // namespace kernels

template <typename F>
Matrix kernels::pairwise(std::span<const Point> nodes, F&& f) {
  const auto n = static_cast<Index>(nodes.size());
  Matrix k(n, n);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (Index r = 0; r < n; ++r) {
    for (Index q = 0; q < n; ++q) k(q, r) = f(nodes[static_cast<std::size_t>(q)], nodes[static_cast<std::size_t>(r)]);
  }
  return k;
}

}  // namespace mvsteady
