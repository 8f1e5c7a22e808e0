#pragma once

#include "mvsteady/deflation.hpp"
#include "mvsteady/models.hpp"

#include <cstdint>
#include <vector>

namespace mvsteady {

struct FreeEnergyReport {
  double entropy = 0.0;
  double confinement = 0.0;
  double interaction = 0.0;
  double total = 0.0;
  /// Fraction of quadrature nodes where the density was raised to the log floor.
  double clamped_fraction = 0.0;
  bool heavily_clamped() const { return clamped_fraction > 0.01; }
};

struct FixedPointResult {
  Vector rho;  ///< density at the quadrature nodes
  int iterations = 0;
  double last_increment = 0.0;
  bool converged = false;
};

/// Verification toolkit bound to one model, basis, quadrature and temperature.
///
/// Precomputes the basis table, V at the nodes and the dense matrix
/// W(x_q, x_r), so every characterization below costs a few matrix-vector
/// products.
class Analyzer {
 public:
  Analyzer(Model model, SpectralBasis basis, QuadratureRule quad, double beta_inv);

  const Model& model() const { return model_; }
  const SpectralBasis& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return quad_; }
  double beta_inv() const { return beta_inv_; }

  Vector density_at_nodes(const Vector& a) const { return psi_ * a; }
  /// (W * rho)(x_q) for node values rho.
  Vector convolve(const Vector& rho_nodes) const;

  /// beta_inv int rho log rho + int V rho + 1/2 int int W rho rho.
  FreeEnergyReport free_energy(const Vector& a) const;

  /// |rho - Z^-1 exp(-beta (V + W * rho))|_L2 on the quadrature.
  double kirkwood_monroe_residual(const Vector& a) const;

  /// rho_{k+1} = (1 - damping) rho_k + damping Z^-1 exp(-beta (V + W * rho_k)).
  FixedPointResult fixed_point_iterate(const Vector& rho0_nodes, double tol, int max_iter,
                                       double damping = 1.0) const;

  /// Central differences of the free energy along `count` random mass-free
  /// combinations of non-constant modes (unit L2 norm). Max absolute value.
  double free_energy_gradient_probe(const Vector& a, int count, double step, std::uint64_t seed) const;

 private:
  Model model_;
  SpectralBasis basis_;
  QuadratureRule quad_;
  double beta_inv_;
  Matrix psi_;
  Vector v_;
  Matrix w_;
};

/// Convenience wrappers building a throwaway Analyzer.
FreeEnergyReport free_energy(const Vector& a, const Model& model, const SpectralBasis& basis,
                             const QuadratureRule& quad, double beta_inv);
double kirkwood_monroe_residual(const Vector& a, const Model& model, const SpectralBasis& basis,
                                const QuadratureRule& quad, double beta_inv);

/// Self-consistency map of the HKB model:
///   rho(x; m) = Z^-1 exp(-beta (V(x) - kappa (m1 cos x + m2 sin x))),
///   R(m) = (int cos x rho, int sin x rho).
/// `model` must be an HKB model; its confining potential fixes the sign convention.
Eigen::Vector2d self_consistency_map(const Eigen::Vector2d& m, const Model& model, double beta_inv,
                                     const QuadratureRule& quad);

/// Roots of m1 -> R1(m1, 0) - m1 on [lo, hi]: sign changes on a uniform scan
/// of `scan_points` values, each refined by bisection to 1e-13.
std::vector<double> symmetric_self_consistency_roots(const Model& model, double beta_inv,
                                                     const QuadratureRule& quad, double lo = -2.0,
                                                     double hi = 2.0, int scan_points = 400);

struct LssOptions {
  int grid_points = 512;
  double log_floor = 1e-12;
};

/// Least-squares fit of log rho on [1, cos w x, sin w x] over a uniform grid
/// (1D models only).
///
/// For HKB the response is log rho + beta V and the two slope columns are
/// scaled by beta kappa, so the fit returns (m1, m2) directly with log_z the
/// negated intercept. Other models return the raw exponents of cos and sin.
/// Throws InputError if the density is negative somewhere on the grid.
OrderParameter estimate_order_parameters(const Vector& a, const SpectralBasis& basis, const Model& model,
                                         double beta_inv, const LssOptions& options = {});

struct StabilityOptions {
  /// Relative tolerance for two free energies to count as equal.
  double energy_tol = 1e-7;
  bool dynamic_check = true;
  double perturbation = 1e-3;
  double horizon = 20.0;
  /// Largest step; lowered to 2.5 / spectral radius of the linearized drift.
  double dt = 0.01;
  double decisive_factor = 10.0;
  std::uint64_t seed = 7;
};

/// Outcome of the perturbation test: distance growth factor at the end of the
/// horizon, or at the first checkpoint (horizon / 20 apart) where it is
/// decisive, and the resulting verdict (unknown if neither 10x growth nor
/// 10x decay).
struct PerturbationTest {
  double growth = 1.0;
  Stability verdict = Stability::unknown;
};

PerturbationTest perturbation_test(const Vector& a, const GalerkinOperators& ops, const StabilityOptions& options);

/// Fills free_energy and stability of every state. Global free-energy
/// minimizers are stable and the rest unstable; a decisive perturbation test
/// overrides that ranking.
void classify_stability(SteadyStateSet& set, const GalerkinOperators& ops, const Analyzer& analyzer,
                        const StabilityOptions& options = {});

}  // namespace mvsteady
