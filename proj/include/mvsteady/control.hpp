#pragma once

#include "mvsteady/dynamics.hpp"

#include <functional>
#include <vector>

namespace mvsteady {

struct OCPConfig {
  double horizon = 1.0;
  double gamma = 0.01;
  double eta = 1.0;
  /// Initial gradient step; backtracking halves it, success lets it grow back.
  double delta = 1.0;
  double tol_u = 1e-10;
  int max_iter = 50;
  int max_backtracks = 20;
  double dt = 0.01;
  /// s > 0 takes descent steps along (M + s A)^{-1} M g, the gradient in the
  /// H1-type inner product, which damps high-frequency control content.
  double smoothing = 0.0;
};

/// p_i on the state grid; p_K = 2 eta M (a_K - target).
struct AdjointTrajectory {
  std::vector<double> times;
  std::vector<Vector> p;
};

struct OpenLoopSolution {
  ControlSignal control;
  Trajectory state;
  AdjointTrajectory adjoint;
  std::vector<double> cost_history;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Trapezoid weights of the uniform grid (dt/2 at both ends, dt inside).
std::vector<double> trapezoid_weights(const std::vector<double>& times);

/// Uniform grid 0, dt, ..., horizon with dt adjusted to divide the horizon.
std::vector<double> control_grid(double horizon, double dt);

/// sum_i w_i 1/2 [(a_i - t)^T M (a_i - t) + gamma sum_j u_ij^T M u_ij] + eta (a_K - t)^T M (a_K - t).
double total_cost(const Trajectory& traj, const ControlSignal& control, const Vector& target, const OCPConfig& ocp,
                  const GalerkinOperators& ops);

/// Exact adjoint of the RK4-discretized state equation, swept backward
/// through the four stages of every step.
AdjointTrajectory integrate_adjoint(const Trajectory& state, const ControlSignal& control, const Vector& target,
                                    const OCPConfig& ocp, const GalerkinOperators& ops);

/// Gradient of total_cost with respect to u_i, divided by the trapezoid
/// weight w_i: gamma M u_i plus the adjoint-weighted control sensitivity.
/// One L x d array per grid time.
std::vector<Matrix> reduced_gradient(const Trajectory& state, const AdjointTrajectory& adjoint,
                                     const ControlSignal& control, const Vector& target, const OCPConfig& ocp,
                                     const GalerkinOperators& ops);

/// Forward solve, adjoint sweep, gradient step with backtracking, repeated
/// until the nominal step satisfies sum_i w_i |delta g_i|^2 < tol_u, no
/// trial step lowers the cost, or max_iter is reached.
OpenLoopSolution solve_open_loop(const Vector& a0, const Vector& target, const OCPConfig& ocp,
                                 const GalerkinOperators& ops, const ControlSignal* u_init = nullptr);

struct MPCConfig {
  double window = 0.1;
  double span = 1.0;
  /// Number of feedback updates over the span.
  int n_steps = 10;
  bool warm_start = true;
  /// Optional disturbance applied to the true state at the start of update h.
  std::function<void(int h, double t, Vector& a)> disturbance;
};

struct MPCResult {
  Trajectory trajectory;
  /// Applied control on [t_h, t_h + span / n_steps).
  std::vector<double> control_times;
  std::vector<Matrix> applied;
  std::vector<int> inner_iterations;
  std::vector<bool> inner_converged;
  std::vector<double> window_costs;
  int warnings = 0;
};

/// Receding-horizon loop: solve on [0, window] from the current state, hold
/// the first control value for one update interval, advance, repeat.
MPCResult mpc_loop(const Vector& a0, const Vector& target, const MPCConfig& mpc, const OCPConfig& ocp,
                   const GalerkinOperators& ops);

}  // namespace mvsteady
