#include "mvsteady/control.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace mvsteady {

std::vector<double> control_grid(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw InputError("control grid needs positive horizon and dt");
  const auto steps = std::max(1L, static_cast<long>(std::ceil(horizon / dt - 1e-9)));
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (long i = 0; i <= steps; ++i) t[static_cast<std::size_t>(i)] = horizon * static_cast<double>(i) / steps;
  return t;
}

std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double h = times[i + 1] - times[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

double total_cost(const Trajectory& traj, const ControlSignal& control, const Vector& target, const OCPConfig& ocp,
                  const GalerkinOperators& ops) {
  if (traj.times.size() != control.samples()) throw InputError("total_cost: state and control grids differ");
  const auto w = trapezoid_weights(traj.times);
  double cost = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vector e = traj.states[i] - target;
    double running = e.dot(ops.mass * e);
    const Matrix& u = control.value(i);
    for (Index j = 0; j < u.cols(); ++j) running += ocp.gamma * u.col(j).dot(ops.mass * u.col(j));
    cost += 0.5 * w[i] * running;
  }
  const Vector e = traj.states.back() - target;
  return cost + ocp.eta * e.dot(ops.mass * e);
}

namespace {

// Vector-Jacobian product of f(a, u) = M^{-1} r(a, u) at stage state s:
// returns (df/da)^T v and accumulates (df/du)^T v into u_bar.
Vector stage_vjp(const Vector& s, const Matrix& u, const Vector& v, const GalerkinOperators& ops, Matrix& u_bar) {
  const Vector w = ops.mass_solve(v);
  const Matrix bc = ops.interaction.contract(w);
  Vector out = -(ops.linear_operator().transpose() * w) - bc * s - bc.transpose() * s;
  for (Index j = 0; j < u.cols(); ++j) {
    const Matrix dc = ops.control[static_cast<std::size_t>(j)].contract(w);
    out -= dc * u.col(j);
    u_bar.col(j) -= dc.transpose() * s;
  }
  return out;
}

struct Sweep {
  AdjointTrajectory adjoint;
  /// dJ/du_i (unweighted).
  std::vector<Matrix> cost_gradient;
};

Sweep backward_sweep(const Trajectory& state, const ControlSignal& control, const Vector& target,
                     const OCPConfig& ocp, const GalerkinOperators& ops) {
  const std::size_t n = state.times.size();
  if (n < 2 || control.samples() != n) throw InputError("adjoint: state and control must share a grid of >= 2 points");
  const auto w = trapezoid_weights(state.times);
  Sweep out;
  out.adjoint.times = state.times;
  out.adjoint.p.assign(n, Vector());
  out.cost_gradient.assign(n, Matrix());

  const Vector e_last = state.states.back() - target;
  out.adjoint.p[n - 1] = 2.0 * ocp.eta * (ops.mass * e_last);
  Vector lambda = out.adjoint.p[n - 1] + w[n - 1] * (ops.mass * e_last);
  out.cost_gradient[n - 1] = w[n - 1] * ocp.gamma * (ops.mass * control.value(n - 1));

  for (std::size_t i = n - 1; i-- > 0;) {
    const double h = state.times[i + 1] - state.times[i];
    const Vector& a = state.states[i];
    const Matrix& u = control.value(i);
    const Matrix* up = &u;
    // Recompute the RK4 stages of step i.
    const Vector k1 = drift(a, up, ops);
    const Vector s2 = a + 0.5 * h * k1;
    const Vector k2 = drift(s2, up, ops);
    const Vector s3 = a + 0.5 * h * k2;
    const Vector k3 = drift(s3, up, ops);
    const Vector s4 = a + h * k3;

    Matrix u_bar = Matrix::Zero(u.rows(), u.cols());
    Vector a_bar = lambda;
    Vector k3_bar = h / 3.0 * lambda;
    Vector k2_bar = h / 3.0 * lambda;
    Vector k1_bar = h / 6.0 * lambda;
    const Vector s4_bar = stage_vjp(s4, u, h / 6.0 * lambda, ops, u_bar);
    a_bar += s4_bar;
    k3_bar += h * s4_bar;
    const Vector s3_bar = stage_vjp(s3, u, k3_bar, ops, u_bar);
    a_bar += s3_bar;
    k2_bar += 0.5 * h * s3_bar;
    const Vector s2_bar = stage_vjp(s2, u, k2_bar, ops, u_bar);
    a_bar += s2_bar;
    k1_bar += 0.5 * h * s2_bar;
    a_bar += stage_vjp(a, u, k1_bar, ops, u_bar);

    out.adjoint.p[i] = a_bar;
    out.cost_gradient[i] = w[i] * ocp.gamma * (ops.mass * u) + u_bar;
    lambda = a_bar + w[i] * (ops.mass * (a - target));
    if (!lambda.allFinite()) throw NumericalError("adjoint sweep produced non-finite values");
  }
  return out;
}

std::vector<Matrix> weighted(const std::vector<Matrix>& g, const std::vector<double>& w) {
  std::vector<Matrix> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] / w[i];
  return out;
}

Trajectory forward(const Vector& a0, const ControlSignal& control, const GalerkinOperators& ops) {
  const auto& t = control.times();
  IntegrateOptions io;
  io.retry_with_half_step = false;
  const double dt = t[1] - t[0];
  Trajectory traj = integrate_forward(a0, &control, t.front(), t.back(), dt, ops, io);
  if (traj.times.size() != t.size()) throw NumericalError("control grid is not uniform");
  return traj;
}

double weighted_norm_sq(const std::vector<Matrix>& x, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i].squaredNorm();
  return s;
}

}  // namespace

AdjointTrajectory integrate_adjoint(const Trajectory& state, const ControlSignal& control, const Vector& target,
                                    const OCPConfig& ocp, const GalerkinOperators& ops) {
  return backward_sweep(state, control, target, ocp, ops).adjoint;
}

std::vector<Matrix> reduced_gradient(const Trajectory& state, const AdjointTrajectory& adjoint,
                                     const ControlSignal& control, const Vector& target, const OCPConfig& ocp,
                                     const GalerkinOperators& ops) {
  if (adjoint.p.size() != state.times.size()) throw InputError("reduced_gradient: adjoint grid differs");
  const auto w = trapezoid_weights(state.times);
  const std::size_t n = state.times.size();
  std::vector<Matrix> grad(n);
  grad[n - 1] = ocp.gamma * (ops.mass * control.value(n - 1));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = state.times[i + 1] - state.times[i];
    const Vector& a = state.states[i];
    const Matrix& u = control.value(i);
    const Vector lambda = adjoint.p[i + 1] + w[i + 1] * (ops.mass * (state.states[i + 1] - target));
    const Vector k1 = drift(a, &u, ops);
    const Vector s2 = a + 0.5 * h * k1;
    const Vector k2 = drift(s2, &u, ops);
    const Vector s3 = a + 0.5 * h * k2;
    const Vector k3 = drift(s3, &u, ops);
    const Vector s4 = a + h * k3;
    Matrix u_bar = Matrix::Zero(u.rows(), u.cols());
    const Vector s4_bar = stage_vjp(s4, u, h / 6.0 * lambda, ops, u_bar);
    const Vector s3_bar = stage_vjp(s3, u, h / 3.0 * lambda + h * s4_bar, ops, u_bar);
    const Vector s2_bar = stage_vjp(s2, u, h / 3.0 * lambda + 0.5 * h * s3_bar, ops, u_bar);
    stage_vjp(a, u, h / 6.0 * lambda + 0.5 * h * s2_bar, ops, u_bar);
    grad[i] = ocp.gamma * (ops.mass * u) + u_bar / w[i];
  }
  return grad;
}

OpenLoopSolution solve_open_loop(const Vector& a0, const Vector& target, const OCPConfig& ocp,
                                 const GalerkinOperators& ops, const ControlSignal* u_init) {
  if (!(ocp.gamma > 0.0) || !(ocp.eta >= 0.0) || !(ocp.delta > 0.0) || !(ocp.tol_u > 0.0) ||
      !(ocp.smoothing >= 0.0)) {
    throw InputError("OCP config: gamma, delta, tol_u must be positive, eta and smoothing non-negative");
  }
  if (ops.control.empty()) throw InputError("operators were assembled without control tensors");
  const auto times = control_grid(ocp.horizon, ocp.dt);
  const auto w = trapezoid_weights(times);
  ControlSignal u = ControlSignal::zero(times, ops.size(), ops.dimension());
  if (u_init != nullptr) {
    if (u_init->samples() != times.size()) throw InputError("initial control has the wrong number of samples");
    u = ControlSignal(times, u_init->values());
  }

  OpenLoopSolution sol;
  Trajectory state = forward(a0, u, ops);
  double cost = total_cost(state, u, target, ocp, ops);
  sol.cost_history.push_back(cost);
  double delta = ocp.delta;
  std::optional<Eigen::LDLT<Matrix>> smoother;
  if (ocp.smoothing > 0.0) smoother.emplace(ops.mass + ocp.smoothing * ops.stiffness);
  Sweep sweep = backward_sweep(state, u, target, ocp, ops);

  for (int it = 1; it <= ocp.max_iter; ++it) {
    sol.iterations = it;
    auto grad = weighted(sweep.cost_gradient, w);
    if (smoother) {
      for (auto& g : grad) g = smoother->solve(ops.mass * g);
    }
    sol.gradient_norm = std::sqrt(weighted_norm_sq(grad, w));
    // Measured with the nominal step so a backtracked delta cannot fake convergence.
    if (ocp.delta * ocp.delta * sol.gradient_norm * sol.gradient_norm < ocp.tol_u) {
      sol.converged = true;
      break;
    }
    bool accepted = false;
    for (int bt = 0; bt <= ocp.max_backtracks; ++bt) {
      std::vector<Matrix> values = u.values();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= delta * grad[i];
      ControlSignal trial(times, std::move(values));
      try {
        Trajectory trial_state = forward(a0, trial, ops);
        const double trial_cost = total_cost(trial_state, trial, target, ocp, ops);
        if (trial_cost <= cost) {
          u = std::move(trial);
          state = std::move(trial_state);
          cost = trial_cost;
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
        // A blown-up trial counts as a cost increase.
      }
      delta *= 0.5;
    }
    if (!accepted) break;
    sol.cost_history.push_back(cost);
    sweep = backward_sweep(state, u, target, ocp, ops);
    delta = std::min(2.0 * delta, ocp.delta);
  }
  sol.control = std::move(u);
  sol.state = std::move(state);
  sol.adjoint = std::move(sweep.adjoint);
  return sol;
}

MPCResult mpc_loop(const Vector& a0, const Vector& target, const MPCConfig& mpc, const OCPConfig& ocp,
                   const GalerkinOperators& ops) {
  if (!(mpc.window > 0.0) || !(mpc.span > 0.0) || mpc.n_steps < 1) throw InputError("MPC config: invalid span/window");
  if (!(mpc.window < mpc.span)) throw InputError("MPC window must be shorter than the span");
  OCPConfig inner = ocp;
  inner.horizon = mpc.window;
  const double interval = mpc.span / mpc.n_steps;
  const auto window_grid = control_grid(mpc.window, ocp.dt);
  const double h_inner = window_grid[1] - window_grid[0];
  const auto shift = static_cast<std::size_t>(std::max(1L, std::lround(interval / h_inner)));

  IntegrateOptions io;
  io.target = target;

  MPCResult out;
  Vector a = a0;
  std::optional<ControlSignal> warm;
  for (int h = 0; h < mpc.n_steps; ++h) {
    const double t = h * interval;
    if (mpc.disturbance) mpc.disturbance(h, t, a);
    const auto sol = solve_open_loop(a, target, inner, ops, warm ? &*warm : nullptr);
    out.inner_iterations.push_back(sol.iterations);
    out.inner_converged.push_back(sol.converged);
    out.window_costs.push_back(sol.cost_history.back());
    if (!sol.converged) ++out.warnings;

    const Matrix u0 = sol.control.value(0);
    out.control_times.push_back(t);
    out.applied.push_back(u0);
    const ControlSignal hold({t}, {u0});
    Trajectory seg = integrate_forward(a, &hold, t, t + interval, ocp.dt, ops, io);
    const std::size_t skip = out.trajectory.times.empty() ? 0 : 1;
    for (std::size_t i = skip; i < seg.times.size(); ++i) {
      out.trajectory.times.push_back(seg.times[i]);
      out.trajectory.states.push_back(seg.states[i]);
      out.trajectory.mass.push_back(seg.mass[i]);
      out.trajectory.min_density.push_back(seg.min_density[i]);
      out.trajectory.distance.push_back(seg.distance[i]);
    }
    a = seg.states.back();

    if (mpc.warm_start) {
      std::vector<Matrix> values = sol.control.values();
      std::vector<Matrix> shifted(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) shifted[i] = values[std::min(i + shift, values.size() - 1)];
      warm = ControlSignal(window_grid, std::move(shifted));
    }
  }
  return out;
}

}  // namespace mvsteady
