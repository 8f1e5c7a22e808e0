#include "mvsteady/control.hpp"

#include "mvsteady/deflation.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mvsteady;

namespace {

GalerkinOperators hkb(double kappa, int modes) {
  const auto model = make_hkb(HKBParams::from_alpha(-1.0, kappa));
  return assemble_operators(SpectralBasis(model.domain, modes), build_quadrature(model.domain, 4 * modes), model, 1.0);
}

ControlSignal random_signal(const std::vector<double>& times, Index l, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.2);
  std::vector<Matrix> v;
  for (std::size_t i = 0; i < times.size(); ++i) {
    Matrix u(l, 1);
    for (Index k = 0; k < l; ++k) u(k, 0) = nd(rng);
    v.push_back(u);
  }
  return {times, v};
}

}  // namespace

TEST_SUITE("control") {
  TEST_CASE("grid and trapezoid weights") {
    const auto t = control_grid(1.0, 0.3);
    CHECK(t.size() == 5);
    CHECK(t.back() == doctest::Approx(1.0));
    const auto w = trapezoid_weights(t);
    CHECK(w.front() == doctest::Approx(0.125));
    CHECK(w[1] == doctest::Approx(0.25));
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(sum == doctest::Approx(1.0));
    CHECK_THROWS_AS(control_grid(0.0, 0.1), InputError);
  }

  TEST_CASE("cost of a trajectory sitting on the target is the control energy") {
    const auto ops = hkb(1.0, 3);
    const Vector target = uniform_density_coefficients(ops.basis);
    const auto times = control_grid(1.0, 0.25);
    Trajectory traj;
    traj.times = times;
    traj.states.assign(times.size(), target);
    OCPConfig ocp;
    ocp.gamma = 0.5;
    const ControlSignal u = random_signal(times, ops.size(), 1);
    const auto w = trapezoid_weights(times);
    double expected = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      expected += w[i] * 0.5 * ocp.gamma * u.value(i).col(0).dot(ops.mass * u.value(i).col(0));
    }
    CHECK(total_cost(traj, u, target, ocp, ops) == doctest::Approx(expected));
  }

  TEST_CASE("reduced gradient matches finite differences of the discrete cost") {
    const auto ops = hkb(3.0, 2);
    Vector a0 = uniform_density_coefficients(ops.basis);
    a0[1] += 0.05;
    const Vector target = uniform_density_coefficients(ops.basis);
    OCPConfig ocp;
    ocp.horizon = 0.5;
    ocp.dt = 0.05;
    ocp.gamma = 0.1;
    ocp.eta = 2.0;
    const auto times = control_grid(ocp.horizon, ocp.dt);
    ControlSignal u = random_signal(times, ops.size(), 2);
    auto cost = [&](const ControlSignal& c) {
      return total_cost(integrate_forward(a0, &c, 0.0, ocp.horizon, ocp.dt, ops), c, target, ocp, ops);
    };
    const Trajectory state = integrate_forward(a0, &u, 0.0, ocp.horizon, ocp.dt, ops);
    const auto adj = integrate_adjoint(state, u, target, ocp, ops);
    const auto grad = reduced_gradient(state, adj, u, target, ocp, ops);
    const auto w = trapezoid_weights(times);
    const double h = 1e-6;
    for (std::size_t i : {std::size_t{0}, std::size_t{3}, times.size() - 2}) {
      for (Index k = 0; k < ops.size(); ++k) {
        ControlSignal up = u, um = u;
        up.values()[i](k, 0) += h;
        um.values()[i](k, 0) -= h;
        const double fd = (cost(up) - cost(um)) / (2 * h) / w[i];
        CHECK(grad[i](k, 0) == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
      }
    }
  }

  TEST_CASE("open-loop descent lowers the cost monotonically") {
    const auto ops = hkb(3.0, 12);
    Vector a0 = uniform_density_coefficients(ops.basis);
    a0[1] += 0.1;
    const auto set = find_all_steady_states(ops, Vector::Zero(ops.size()), {}, {});
    REQUIRE(set.states.size() >= 2);
    OCPConfig ocp;
    ocp.horizon = 0.5;
    ocp.dt = 0.01;
    ocp.eta = 10.0;
    ocp.delta = 0.5;
    ocp.max_iter = 15;
    const OpenLoopSolution sol = solve_open_loop(a0, set.states[1].coeffs, ocp, ops);
    REQUIRE(sol.cost_history.size() >= 2);
    for (std::size_t i = 1; i < sol.cost_history.size(); ++i) CHECK(sol.cost_history[i] <= sol.cost_history[i - 1]);
    CHECK(sol.cost_history.back() < 0.9 * sol.cost_history.front());

    OCPConfig smooth = ocp;
    smooth.smoothing = 0.1;
    const OpenLoopSolution s2 = solve_open_loop(a0, set.states[1].coeffs, smooth, ops);
    CHECK(s2.cost_history.back() < s2.cost_history.front());
  }

  TEST_CASE("starting on a steady target needs almost no control") {
    const auto ops = hkb(1.0, 4);
    const auto set = find_all_steady_states(ops, Vector::Zero(ops.size()), {}, {});
    REQUIRE(set.states.size() == 1);
    const Vector& target = set.states[0].coeffs;
    OCPConfig ocp;
    ocp.horizon = 0.3;
    ocp.dt = 0.05;
    const OpenLoopSolution sol = solve_open_loop(target, target, ocp, ops);
    double energy = 0.0;
    for (const auto& u : sol.control.values()) energy += u.squaredNorm();
    CHECK(energy < 1e-20);
    CHECK(sol.cost_history.front() < 1e-20);
  }

  TEST_CASE("MPC moves the state toward the target") {
    const auto ops = hkb(3.0, 12);
    const auto set = find_all_steady_states(ops, Vector::Zero(ops.size()), {}, {});
    REQUIRE(set.states.size() == 3);
    const Vector target = set.states[0].coeffs;  // unstable uniform state
    Vector a0 = target;
    a0[1] += 0.05;
    OCPConfig ocp;
    ocp.dt = 0.01;
    ocp.eta = 10.0;
    ocp.max_iter = 10;
    MPCConfig mpc;
    mpc.window = 0.5;
    mpc.span = 2.0;
    mpc.n_steps = 8;
    const MPCResult res = mpc_loop(a0, target, mpc, ocp, ops);
    CHECK(res.applied.size() == 8);
    CHECK(res.trajectory.distance.back() < 0.5 * res.trajectory.distance.front());
    CHECK(res.trajectory.max_mass_drift() < 1e-12);

    const Trajectory free = integrate_forward(a0, nullptr, 0.0, 2.0, 0.01, ops);
    CHECK(l2_distance(free.states.back(), target, ops) > res.trajectory.distance.back());
  }

  TEST_CASE("invalid control configurations") {
    const auto ops = hkb(1.0, 2);
    const Vector a = uniform_density_coefficients(ops.basis);
    OCPConfig bad;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(solve_open_loop(a, a, bad, ops), InputError);
    OCPConfig neg;
    neg.smoothing = -1.0;
    CHECK_THROWS_AS(solve_open_loop(a, a, neg, ops), InputError);
    MPCConfig mpc;
    mpc.window = 2.0;
    mpc.span = 1.0;
    CHECK_THROWS_AS(mpc_loop(a, a, mpc, {}, ops), InputError);
    const auto model = make_hkb({});
    const auto no_control = assemble_operators(ops.basis, ops.quad, model, 1.0, {.control_tensors = false});
    CHECK_THROWS_AS(solve_open_loop(a, a, {}, no_control), InputError);
  }
}
