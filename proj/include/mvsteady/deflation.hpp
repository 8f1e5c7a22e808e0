#pragma once

#include "mvsteady/operators.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mvsteady {

/// A square or overdetermined nonlinear system F: R^n -> R^m, m >= n.
struct NonlinearSystem {
  Index unknowns = 0;
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Stationary Galerkin residual with the mass constraint appended:
///   F(a) = [ -beta_inv A a - C a - b(a) ;  zeta^T a - 1 ].
Vector residual(const Vector& a, const GalerkinOperators& ops);
/// Jacobian of `residual`: rows -(beta_inv A + C) - a^T (B_m + B_m^T), last row zeta^T.
Matrix jacobian(const Vector& a, const GalerkinOperators& ops);
NonlinearSystem galerkin_system(const GalerkinOperators& ops);

struct DeflationConfig {
  double power = 2.0;
  double shift = 1.0;
  int max_roots = 32;
  double divergence_cap = 1e8;
};

struct NewtonConfig {
  double step_tol = 1e-10;
  int max_iter = 1000;
  /// A converged iterate is a root only if the undeflated residual is this small.
  double accept_tol = 1e-9;
};

/// Shifted power-norm deflation G(a) = F(a) (1/eta(a) + shift),
/// eta(a) = prod_i |a - r_i|^p.
class Deflation {
 public:
  Deflation(std::vector<Vector> roots, double power, double shift);

  const std::vector<Vector>& roots() const { return roots_; }
  void add_root(Vector r) { roots_.push_back(std::move(r)); }

  /// eta and its gradient, built one root at a time:
  ///   eta_k = eta_{k-1} d_k^p,  eta_k' = eta_{k-1}' d_k^p + eta_{k-1} p d_k^{p-2} (a - r_k).
  std::pair<double, Vector> eta(const Vector& a) const;
  /// 1/eta + shift (just the shift without roots).
  double factor(const Vector& a) const;

  Vector apply(const NonlinearSystem& sys, const Vector& a) const;
  Matrix jacobian(const NonlinearSystem& sys, const Vector& a) const;

 private:
  std::vector<Vector> roots_;
  double power_;
  double shift_;
};

enum class NewtonStatus { converged, max_iterations, blow_up, non_finite };

std::string to_string(NewtonStatus s);

struct NewtonResult {
  NewtonStatus status = NewtonStatus::max_iterations;
  Vector iterate;
  int iterations = 0;
  /// |a^n - a^{n-1}| per iteration.
  std::vector<double> step_history;
  /// Undeflated residual norm at the final iterate.
  double residual_norm = 0.0;

  bool converged() const { return status == NewtonStatus::converged; }
};

/// Newton iteration on the deflated system. Each step is the minimum-norm
/// least-squares solution of G'(a) s = G(a); rank deficiency (translation
/// families) is expected and is not treated as failure.
NewtonResult newton_solve(const Vector& a0, const NonlinearSystem& sys, const Deflation& deflation,
                          const DeflationConfig& dcfg, const NewtonConfig& ncfg);

/// Raw output of one deflation chain.
struct DeflationChain {
  std::vector<Vector> roots;
  std::vector<NewtonResult> solves;
  /// Why the chain ended: the status of the last solve, or "max_roots".
  std::string stop_reason;
};

/// Repeatedly solve from the same initial guess, deflating every accepted root,
/// until a solve fails or `max_roots` roots are known.
DeflationChain deflate_roots(const NonlinearSystem& sys, const Vector& a0, const DeflationConfig& dcfg,
                             const NewtonConfig& ncfg);

enum class Stability { stable, unstable, unknown };
std::string to_string(Stability s);

struct OrderParameter {
  double m1 = 0.0;
  double m2 = 0.0;
  double log_z = 0.0;
};

struct SteadyState {
  Vector coeffs;
  double residual_norm = 0.0;
  double min_density = 0.0;
  bool positive = true;
  double free_energy = std::numeric_limits<double>::quiet_NaN();
  Stability stability = Stability::unknown;
  std::optional<OrderParameter> order_params;
  /// Index of an earlier entry this state is a translate of, and the shift.
  std::optional<Index> translate_of;
  Point shift = Point::Zero();
  /// Which chain found it and at which deflation depth.
  int chain = 0;
  int depth = 0;
};

struct FilterConfig {
  int mesh_points = 512;
  double positivity_tol = 1e-8;
  double dedup_tol = 1e-6;
  double translation_tol = 1e-4;
};

struct SteadyStateSet {
  std::vector<SteadyState> states;
  /// Accepted roots dropped by the positivity filter.
  std::vector<SteadyState> rejected;
  std::vector<std::string> chain_stop_reasons;
  int newton_solves = 0;
};

/// Deflation from a single initial guess, followed by positivity filtering,
/// deduplication and translation tagging.
SteadyStateSet find_all_steady_states(const GalerkinOperators& ops, const Vector& a0, const DeflationConfig& dcfg,
                                      const NewtonConfig& ncfg, const FilterConfig& fcfg = {});

/// Independent chains from several initial guesses, merged in guess order.
SteadyStateSet find_all_steady_states(const GalerkinOperators& ops, const std::vector<Vector>& guesses,
                                      const DeflationConfig& dcfg, const NewtonConfig& ncfg,
                                      const FilterConfig& fcfg = {});

/// Minimum of the density on a uniform mesh with `points_per_axis` nodes per axis.
double min_density_on_mesh(const Vector& coeffs, const SpectralBasis& basis, int points_per_axis);

}  // namespace mvsteady
