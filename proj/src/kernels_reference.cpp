#include "mvsteady/kernels.hpp"

namespace mvsteady::kernels::reference {

BilinearMap assemble_trilinear(const Matrix& psi, std::span<const Matrix> fields,
                               std::span<const Matrix> dpsi, const Vector& weights) {
  const Index n_q = psi.rows();
  const Index size = psi.cols();
  Matrix data = Matrix::Zero(size * size, size);
  for (Index m = 0; m < size; ++m) {
    for (Index k = 0; k < size; ++k) {
      for (Index n = 0; n < size; ++n) {
        double acc = 0.0;
        for (Index q = 0; q < n_q; ++q) {
          double flux = 0.0;
          for (std::size_t j = 0; j < fields.size(); ++j) flux += fields[j](q, k) * dpsi[j](q, m);
          acc += weights[q] * psi(q, n) * flux;
        }
        data(n + size * k, m) = acc;
      }
    }
  }
  return BilinearMap(std::move(data));
}

Matrix convolve(const Matrix& kernel, const Vector& weights, const Matrix& psi) {
  Matrix out = Matrix::Zero(kernel.rows(), psi.cols());
  for (Index k = 0; k < psi.cols(); ++k) {
    for (Index q = 0; q < kernel.rows(); ++q) {
      double acc = 0.0;
      for (Index r = 0; r < kernel.cols(); ++r) acc += kernel(q, r) * weights[r] * psi(r, k);
      out(q, k) = acc;
    }
  }
  return out;
}

Vector bilinear_apply(const BilinearMap& t, const Vector& x, const Vector& y) {
  const Index size = t.size();
  Vector out = Vector::Zero(size);
  for (Index m = 0; m < size; ++m) {
    double acc = 0.0;
    for (Index n = 0; n < size; ++n) {
      for (Index k = 0; k < size; ++k) acc += x[n] * t.entry(m, n, k) * y[k];
    }
    out[m] = acc;
  }
  return out;
}

Matrix bilinear_contract(const BilinearMap& t, const Vector& w) {
  const Index size = t.size();
  Matrix out = Matrix::Zero(size, size);
  for (Index m = 0; m < size; ++m) {
    for (Index k = 0; k < size; ++k) {
      for (Index n = 0; n < size; ++n) out(n, k) += w[m] * t.entry(m, n, k);
    }
  }
  return out;
}

}  // namespace mvsteady::kernels::reference
