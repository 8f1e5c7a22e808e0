#include "mvsteady/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvsteady {

ControlSignal::ControlSignal(std::vector<double> times, std::vector<Matrix> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw InputError("control signal: one value per time sample");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw InputError("control signal: time grid must be strictly increasing");
  }
  for (const auto& v : values_) {
    if (!v.allFinite()) throw InputError("control signal: non-finite value");
  }
}

ControlSignal ControlSignal::zero(std::vector<double> times, Index size, int dimension) {
  std::vector<Matrix> values(times.size(), Matrix::Zero(size, dimension));
  return ControlSignal(std::move(times), std::move(values));
}

const Matrix& ControlSignal::at(double t) const {
  if (times_.empty()) throw InputError("control signal is empty");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto idx = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return values_[idx];
}

double Trajectory::max_mass_drift() const {
  double worst = 0.0;
  for (double m : mass) worst = std::max(worst, std::abs(m - 1.0));
  return worst;
}

Vector control_term(const Vector& a, const Matrix& u, const GalerkinOperators& ops) {
  if (u.cols() != static_cast<Index>(ops.control.size())) {
    throw InputError("control has " + std::to_string(u.cols()) + " axes but operators carry " +
                     std::to_string(ops.control.size()) + " control tensors");
  }
  Vector d = Vector::Zero(ops.size());
  for (Index j = 0; j < u.cols(); ++j) d += ops.control[static_cast<std::size_t>(j)].apply(a, u.col(j));
  return d;
}

Vector drift(const Vector& a, const Matrix* u, const GalerkinOperators& ops) {
  Vector rhs = -(ops.linear_operator() * a) - ops.interaction.apply(a, a);
  if (u != nullptr) rhs -= control_term(a, *u, ops);
  return ops.mass_solve(rhs);
}

Matrix rhs_jacobian(const Vector& a, const Matrix* u, const GalerkinOperators& ops) {
  Matrix j = -ops.linear_operator() - ops.interaction.jacobian_first(a) - ops.interaction.jacobian_second(a);
  if (u != nullptr) {
    for (Index k = 0; k < u->cols(); ++k) {
      j -= ops.control[static_cast<std::size_t>(k)].jacobian_first(u->col(k));
    }
  }
  return j;
}

Vector rk4_step(const Vector& a, const Matrix* u, double dt, const GalerkinOperators& ops) {
  const Vector k1 = drift(a, u, ops);
  const Vector k2 = drift(a + 0.5 * dt * k1, u, ops);
  const Vector k3 = drift(a + 0.5 * dt * k2, u, ops);
  const Vector k4 = drift(a + dt * k3, u, ops);
  return a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double l2_distance(const Vector& a, const Vector& b, const GalerkinOperators& ops) {
  const Vector e = a - b;
  return std::sqrt(std::max(0.0, e.dot(ops.mass * e)));
}

namespace {

void record(Trajectory& traj, double t, const Vector& a, const GalerkinOperators& ops,
            const IntegrateOptions& options) {
  traj.times.push_back(t);
  traj.states.push_back(a);
  traj.mass.push_back(ops.zeta.dot(a));
  traj.min_density.push_back(options.diagnostics_mesh > 0
                                 ? density_on_uniform_grid(a, ops.basis, options.diagnostics_mesh).minCoeff()
                                 : std::numeric_limits<double>::quiet_NaN());
  if (options.target) traj.distance.push_back(l2_distance(a, *options.target, ops));
}

Trajectory integrate_once(const Vector& a0, const ControlSignal* control, double t0, double t1, double dt,
                          const GalerkinOperators& ops, const IntegrateOptions& options, bool& blew_up) {
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  const double h = (t1 - t0) / static_cast<double>(std::max(1L, steps));
  Trajectory traj;
  Vector a = a0;
  record(traj, t0, a, ops, options);
  blew_up = false;
  for (long n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * h;
    const Matrix* u = control != nullptr ? &control->at(t + 1e-12 * h) : nullptr;
    Vector next = rk4_step(a, u, h, ops);
    if (!next.allFinite() || next.norm() > options.blow_up_cap) {
      blew_up = true;
      if (traj.times.back() != t) record(traj, t, a, ops, options);
      return traj;
    }
    a = std::move(next);
    const bool last = n + 1 == steps;
    if (last || (n + 1) % std::max(1, options.stride) == 0) record(traj, last ? t1 : t + h, a, ops, options);
  }
  return traj;
}

}  // namespace

Trajectory integrate_forward(const Vector& a0, const ControlSignal* control, double t0, double t1, double dt,
                             const GalerkinOperators& ops, const IntegrateOptions& options) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  if (!(t1 > t0)) throw InputError("integration span must be non-empty");
  if (a0.size() != ops.size()) throw InputError("initial state has wrong length");
  bool blew_up = false;
  Trajectory traj = integrate_once(a0, control, t0, t1, dt, ops, options, blew_up);
  if (blew_up && options.retry_with_half_step) {
    traj = integrate_once(a0, control, t0, t1, 0.5 * dt, ops, options, blew_up);
  }
  if (blew_up) {
    const double t_last = traj.times.empty() ? t0 : traj.times.back();
    throw IntegrationFailure("state blew up after t = " + std::to_string(t_last), std::move(traj));
  }
  return traj;
}

}  // namespace mvsteady
