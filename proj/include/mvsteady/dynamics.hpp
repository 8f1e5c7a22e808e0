#pragma once

#include "mvsteady/operators.hpp"

#include <optional>
#include <vector>

namespace mvsteady {

/// Piecewise-constant control: on [t_i, t_{i+1}) the field is sum_k u_i(k, j) psi_k
/// along axis j, so each value is an L x d coefficient array.
class ControlSignal {
 public:
  ControlSignal() = default;
  ControlSignal(std::vector<double> times, std::vector<Matrix> values);

  static ControlSignal zero(std::vector<double> times, Index size, int dimension);

  const std::vector<double>& times() const { return times_; }
  const std::vector<Matrix>& values() const { return values_; }
  std::vector<Matrix>& values() { return values_; }
  std::size_t samples() const { return times_.size(); }
  const Matrix& value(std::size_t i) const { return values_.at(i); }
  /// Value held at time t (last sample with t_i <= t).
  const Matrix& at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Matrix> values_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> mass;
  /// Minimum of the density on the diagnostics mesh (NaN where not sampled).
  std::vector<double> min_density;
  /// L2 distance to the target, when one was given.
  std::vector<double> distance;

  double max_mass_drift() const;
};

/// d(a, u)_m = sum_j a^T D_{j,m} u_j.
Vector control_term(const Vector& a, const Matrix& u, const GalerkinOperators& ops);

/// M^{-1} (-beta_inv A a - C a - b(a) - d(a, u)); pass nullptr for u = 0.
Vector drift(const Vector& a, const Matrix* u, const GalerkinOperators& ops);

/// Jacobian of the right-hand side before M^{-1}: -(beta_inv A + C) - db/da - dd/da.
Matrix rhs_jacobian(const Vector& a, const Matrix* u, const GalerkinOperators& ops);

struct IntegrateOptions {
  double blow_up_cap = 1e8;
  /// Halve dt and start over once if the state blows up.
  bool retry_with_half_step = true;
  std::optional<Vector> target;
  /// Store every n-th step (the final state is always stored).
  int stride = 1;
  /// Mesh per axis for min-density diagnostics; 0 disables them.
  int diagnostics_mesh = 0;
};

/// Thrown when integration blows up; carries everything up to the last good step.
class IntegrationFailure : public NumericalError {
 public:
  IntegrationFailure(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// One classical RK4 step with the control held fixed.
Vector rk4_step(const Vector& a, const Matrix* u, double dt, const GalerkinOperators& ops);

/// Fixed-step RK4 on [t0, t1]. The step count is ceil((t1 - t0) / dt) and the
/// step is adjusted to land on t1 exactly. `control` may be null.
Trajectory integrate_forward(const Vector& a0, const ControlSignal* control, double t0, double t1, double dt,
                             const GalerkinOperators& ops, const IntegrateOptions& options = {});

/// L2 distance sqrt((a - b)^T M (a - b)).
double l2_distance(const Vector& a, const Vector& b, const GalerkinOperators& ops);

}  // namespace mvsteady
