#include "mvsteady/analysis.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mvsteady;
using std::numbers::pi;

namespace {

struct Hkb {
  Model model;
  GalerkinOperators ops;
  Analyzer analyzer;
  SteadyStateSet set;

  explicit Hkb(double kappa, int modes = 16)
      : model(make_hkb(HKBParams::from_alpha(-1.0, kappa))),
        ops(assemble_operators(SpectralBasis(model.domain, modes), build_quadrature(model.domain, 8 * modes), model,
                               1.0, {.control_tensors = false})),
        analyzer(model, ops.basis, ops.quad, 1.0),
        set(find_all_steady_states(ops, Vector::Zero(ops.size()), {}, {})) {}
};

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("Bessel functions") {
    CHECK(bessel_i0(0.0) == 1.0);
    CHECK(bessel_i0(1.0) == doctest::Approx(1.2660658777520082).epsilon(1e-14));
    CHECK(bessel_i1(1.0) == doctest::Approx(0.5651591039924851).epsilon(1e-14));
    CHECK(bessel_i0(5.0) == doctest::Approx(27.239871823604442).epsilon(1e-13));
  }

  TEST_CASE("HK kernel derivative is the derivative of the kernel") {
    const HKParams p{0.1, 0.005};
    for (double z : {-0.3, -0.102, -0.05, 0.0, 0.03, 0.099, 0.1025, 0.2}) {
      const double h = 1e-7;
      CHECK(hk_kernel_derivative(z, p) ==
            doctest::Approx((hk_kernel(z + h, p) - hk_kernel(z - h, p)) / (2 * h)).epsilon(1e-6).scale(1e-3));
    }
    CHECK(hk_kernel_derivative(0.05, p) == doctest::Approx(0.05));
    CHECK(hk_kernel_derivative(0.2, p) == 0.0);
  }

  TEST_CASE("free energy of the uniform density") {
    const auto model = make_free(TorusDomain::line(0.0, 2.0 * pi));
    const SpectralBasis b(model.domain, 3);
    const auto q = build_quadrature(model.domain, 16);
    const FreeEnergyReport f = free_energy(uniform_density_coefficients(b), model, b, q, 0.5);
    CHECK(f.total == doctest::Approx(0.5 * std::log(1.0 / (2.0 * pi))));
    CHECK(f.interaction == doctest::Approx(0.0));
    CHECK_FALSE(f.heavily_clamped());
  }

  TEST_CASE("Galerkin roots are Kirkwood-Monroe fixed points and free-energy critical points") {
    Hkb h(3.0, 32);
    REQUIRE(h.set.states.size() == 3);
    for (const auto& s : h.set.states) {
      CHECK(h.analyzer.kirkwood_monroe_residual(s.coeffs) < 1e-10);
      CHECK(h.analyzer.free_energy_gradient_probe(s.coeffs, 4, 1e-6, 1) < 1e-7);
    }
    Vector off = h.set.states[0].coeffs;
    off[3] += 0.05;
    CHECK(h.analyzer.kirkwood_monroe_residual(off) > 1e-3);
    CHECK(h.analyzer.free_energy_gradient_probe(off, 4, 1e-4, 1) > 1e-3);
  }

  TEST_CASE("self-consistency map: symmetric roots") {
    const auto q = build_quadrature(TorusDomain::line(0.0, 2.0 * pi), 100);
    const auto weak = make_hkb(HKBParams::from_alpha(-1.0, 1.0));
    const auto strong = make_hkb(HKBParams::from_alpha(-1.0, 3.0));
    const auto r1 = symmetric_self_consistency_roots(weak, 1.0, q);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0] == doctest::Approx(0.0).scale(1.0));
    const auto r3 = symmetric_self_consistency_roots(strong, 1.0, q);
    REQUIRE(r3.size() == 3);
    CHECK(r3[0] == doctest::Approx(-r3[2]));
    for (double m : r3) {
      const Eigen::Vector2d r = self_consistency_map(Eigen::Vector2d(m, 0.0), strong, 1.0, q);
      CHECK(std::abs(r[0] - m) < 1e-12);
      CHECK(std::abs(r[1]) < 1e-12);
    }
    CHECK_THROWS_AS(self_consistency_map(Eigen::Vector2d::Zero(), make_o2({}), 1.0, q), InputError);
  }

  TEST_CASE("order parameters of a Gibbs density are recovered") {
    const auto model = make_hkb(HKBParams::from_alpha(-1.0, 2.0));
    const SpectralBasis b(model.domain, 24);
    const auto q = build_quadrature(model.domain, 96);
    const double m1 = 0.4, m2 = -0.25, beta = 1.0 / 0.8, kappa = 2.0;
    Vector rho(q.size());
    for (Index i = 0; i < q.size(); ++i) {
      const Point& x = q.nodes[static_cast<std::size_t>(i)];
      rho[i] = std::exp(-beta * (model.confining(x) - kappa * (m1 * std::cos(x[0]) + m2 * std::sin(x[0]))));
    }
    Vector a = project_function(rho, b, q);
    a /= a[0] * std::sqrt(2.0 * pi);
    const OrderParameter op = estimate_order_parameters(a, b, model, 0.8);
    CHECK(op.m1 == doctest::Approx(m1).epsilon(1e-8));
    CHECK(op.m2 == doctest::Approx(m2).epsilon(1e-8));
  }

  TEST_CASE("fixed-point iteration reaches a Galerkin-consistent density") {
    Hkb h(3.0);
    Vector rho0(h.ops.quad.size());
    for (Index i = 0; i < rho0.size(); ++i) rho0[i] = 1.0 + 0.5 * std::cos(h.ops.quad.nodes[static_cast<std::size_t>(i)][0]);
    const FixedPointResult fp = h.analyzer.fixed_point_iterate(rho0, 1e-12, 5000, 1.0);
    REQUIRE(fp.converged);
    // The projection agrees with one deflation root up to truncation of the sharp profile.
    const Vector a = project_function(fp.rho, h.ops.basis, h.ops.quad);
    double nearest = 1e300;
    for (const auto& s : h.set.states) nearest = std::min(nearest, (s.coeffs - a).lpNorm<Eigen::Infinity>());
    CHECK(nearest < 1e-5);
    CHECK(std::abs(a[1]) > 0.1);
    CHECK_THROWS_AS(h.analyzer.fixed_point_iterate(-rho0, 1e-12, 10), InputError);
  }

  TEST_CASE("stability: the symmetric state loses stability as the coupling grows") {
    Hkb weak(1.0, 12);
    REQUIRE(weak.set.states.size() == 1);
    StabilityOptions opt;
    CHECK(perturbation_test(weak.set.states[0].coeffs, weak.ops, opt).verdict != Stability::unstable);
    classify_stability(weak.set, weak.ops, weak.analyzer, opt);
    CHECK(weak.set.states[0].stability == Stability::stable);

    Hkb strong(3.0, 12);
    REQUIRE(strong.set.states.size() == 3);
    classify_stability(strong.set, strong.ops, strong.analyzer, opt);
    int stable = 0;
    for (const auto& s : strong.set.states) {
      // m1 = 0 exactly when the cos x coefficient vanishes.
      const bool symmetric = std::abs(s.coeffs[1]) < 1e-8;
      CHECK(s.stability == (symmetric ? Stability::unstable : Stability::stable));
      CHECK(std::isfinite(s.free_energy));
      CHECK(perturbation_test(s.coeffs, strong.ops, opt).verdict == s.stability);
      stable += s.stability == Stability::stable;
    }
    CHECK(stable == 2);
  }
}
