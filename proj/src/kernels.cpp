#include "mvsteady/kernels.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace mvsteady {

BilinearMap::BilinearMap(Matrix data) : data_(std::move(data)) {
  size_ = data_.cols();
  if (data_.rows() != size_ * size_) throw InputError("bilinear map storage must be L^2 x L");
}

BilinearMap BilinearMap::zero(Index size) { return BilinearMap(Matrix::Zero(size * size, size)); }

Vector BilinearMap::apply(const Vector& x, const Vector& y) const {
  const Matrix outer = x * y.transpose();
  const Eigen::Map<const Vector> v(outer.data(), outer.size());
  return data_.transpose() * v;
}

Matrix BilinearMap::jacobian_first(const Vector& y) const {
  Matrix j(size_, size_);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (size_ > 64)
#endif
  for (Index m = 0; m < size_; ++m) j.row(m).noalias() = (slice(m) * y).transpose();
  return j;
}

Matrix BilinearMap::jacobian_second(const Vector& x) const {
  Matrix j(size_, size_);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (size_ > 64)
#endif
  for (Index m = 0; m < size_; ++m) j.row(m).noalias() = x.transpose() * slice(m);
  return j;
}

Matrix BilinearMap::contract(const Vector& w) const {
  const Vector flat = data_ * w;
  return Eigen::Map<const Matrix>(flat.data(), size_, size_);
}

namespace kernels {

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

BilinearMap assemble_trilinear(const Matrix& psi, std::span<const Matrix> fields,
                               std::span<const Matrix> dpsi, const Vector& weights) {
  const Index n_q = psi.rows();
  const Index size = psi.cols();
  if (fields.size() != dpsi.size()) throw InputError("trilinear assembly: one field per derivative axis");
  Matrix data(size * size, size);
  // Slab k holds S_k(n, m) = sum_q w_q psi(q,n) sum_j field_j(q,k) dpsi_j(q,m),
  // written to T_m(n, k) = data(n + L k, m).
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (Index k = 0; k < size; ++k) {
    Matrix scaled(n_q, size);
    Matrix slab = Matrix::Zero(size, size);
    for (std::size_t j = 0; j < fields.size(); ++j) {
      scaled = dpsi[j].array().colwise() * (weights.array() * fields[j].col(k).array());
      slab.noalias() += psi.transpose() * scaled;
    }
    data.middleRows(size * k, size) = slab;
  }
  return BilinearMap(std::move(data));
}

Matrix convolve(const Matrix& kernel, const Vector& weights, const Matrix& psi) {
  const Matrix weighted = psi.array().colwise() * weights.array();
  return kernel * weighted;
}

Matrix weighted_gram(const Matrix& f, const Vector& weights, const Matrix& g) {
  const Matrix weighted = g.array().colwise() * weights.array();
  return f.transpose() * weighted;
}

}  // namespace kernels
}  // namespace mvsteady
