#pragma once

#include "mvsteady/kernels.hpp"
#include "mvsteady/models.hpp"
#include "mvsteady/spectral.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mvsteady {

/// Galerkin operators of the McKean-Vlasov PDE in the orthonormal Fourier basis.
///
/// Conventions (row index m is always the test function psi_m):
///   stiffness(n, m)   = int grad psi_n . grad psi_m
///   confinement(m, n) = int psi_n (grad V . grad psi_m)
///   interaction: T_m(n, k) = int psi_n (grad W * psi_k) . grad psi_m
///   control[j]:  T_m(i, k) = int psi_i (d_j psi_m) psi_k
///   zeta_i = int psi_i
/// so that the semi-discrete dynamics read
///   M a' = -beta_inv A a - C a - b(a) - d(a, u),
///   b_m(a) = a^T B_m a,  d_m(a, u) = sum_j a^T D_{j,m} u_j.
struct GalerkinOperators {
  GalerkinOperators(SpectralBasis basis_, QuadratureRule quad_, std::string key, double beta_inv_)
      : basis(std::move(basis_)), quad(std::move(quad_)), model_key(std::move(key)), beta_inv(beta_inv_) {}

  SpectralBasis basis;
  QuadratureRule quad;
  std::string model_key;
  double beta_inv = 1.0;

  Matrix mass;
  Matrix stiffness;
  Matrix confinement;
  BilinearMap interaction;
  std::vector<BilinearMap> control;
  Vector zeta;

  Index size() const { return basis.size(); }
  int dimension() const { return basis.dimension(); }

  /// beta_inv A + C.
  Matrix linear_operator() const { return beta_inv * stiffness + confinement; }
  /// Applies M^{-1}.
  Vector mass_solve(const Vector& v) const;
  /// Refreshes the cached Cholesky factor of M (called by assembly and loading).
  void factorize_mass();

 private:
  Eigen::LLT<Matrix> mass_llt_;
};

struct AssemblyOptions {
  /// Skip the control tensors when only steady states are needed.
  bool control_tensors = true;
};

/// Stable identifier of a model and its parameters, used as cache key.
std::string model_key(const Model& model);

GalerkinOperators assemble_operators(const SpectralBasis& basis, const QuadratureRule& quad,
                                     const Model& model, double beta_inv,
                                     const AssemblyOptions& options = {});

/// Serial reference assembly of the interaction tensor: evaluates the
/// convolution grad W * psi_k node by node through the model callbacks and
/// contracts with plain loops. Used as a test oracle and benchmark baseline.
BilinearMap assemble_interaction_reference(const SpectralBasis& basis, const QuadratureRule& quad,
                                           const Model& model);

/// Binary cache: versioned header, cache key, then row-major arrays.
void save_operators(const std::filesystem::path& path, const GalerkinOperators& ops);
/// Returns nothing if the file is missing, has another version, or its key
/// (model, modes, quadrature size, beta_inv) differs from the requested one.
std::optional<GalerkinOperators> load_operators(const std::filesystem::path& path,
                                                const std::string& model_key, int modes_per_axis,
                                                int quad_points, double beta_inv);

}  // namespace mvsteady
