#pragma once

#include "mvsteady/spectral.hpp"

#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace mvsteady {

using ParamMap = std::map<std::string, double, std::less<>>;

/// Confining and interaction potentials on a torus.
///
/// The interaction gradient is taken with respect to the first argument, so
/// the nonlocal drift at x is sum_y grad_w(x, y) rho(y).
struct Model {
  std::string name;
  TorusDomain domain{{{0.0, 1.0}}};
  ParamMap params;

  std::function<double(const Point&)> confining;
  std::function<Point(const Point&)> confining_gradient;
  std::function<double(const Point&, const Point&)> interaction;
  std::function<Point(const Point&, const Point&)> interaction_gradient;

  /// True when V is identically zero: steady states then come in translation families.
  bool translation_invariant = false;
  bool has_interaction = true;
};

/// Haken-Kelso-Bunz potentials on [0, 2pi]: V = -c1 cos x - c2 cos 2x,
/// W(x, y) = -kappa cos(x - y).
struct HKBParams {
  double c1 = 0.0;
  double c2 = 1.0;
  double kappa = 1.0;

  /// c1 = 0, c2 = -alpha.
  static HKBParams from_alpha(double alpha, double kappa) { return {0.0, -alpha, kappa}; }
  double alpha() const { return -c2; }
};

/// Which confining drift the HKB model uses.
///
/// `gradient` takes grad V of the potential above, whose Gibbs-type fixed
/// points are rho ~ exp(-beta(alpha cos 2x - kappa <cos(x - y)>)).
/// `printed` flips the sign of the cos 2x drift, i.e. rho * 2 alpha sin 2x
/// inside the divergence, which corresponds to the potential -alpha cos 2x.
enum class HKBDrift { gradient, printed };

struct O2Params {
  double eta_field = 0.05;
};

/// Hegselmann-Krause bounded-confidence kernel on [0, 1].
struct HKParams {
  double r = 0.1;
  double epsilon_reg = 0.005;
};

/// Von Mises interaction on [-pi, pi]^2:
/// W(z) = -normalization * exp(theta (cos z1 + cos z2)).
struct VonMisesParams {
  double theta = 1.0;
  /// Non-positive means "use I0(1)^-2".
  double normalization = 0.0;
};

Model make_hkb(const HKBParams& p, HKBDrift drift = HKBDrift::gradient);
Model make_o2(const O2Params& p);
Model make_hk(const HKParams& p);
Model make_von_mises(const VonMisesParams& p);
/// V = W = 0 on the given domain.
Model make_free(const TorusDomain& domain);

/// Custom potentials. Gradients must be supplied; W must be symmetric.
Model make_custom(std::string name, TorusDomain domain,
                  std::function<double(const Point&)> v, std::function<Point(const Point&)> grad_v,
                  std::function<double(const Point&, const Point&)> w,
                  std::function<Point(const Point&, const Point&)> grad_w);

/// Build a model by name from a flat parameter map.
///
/// Names: "hkb" (alpha or c1/c2, kappa, drift_printed), "o2" (eta),
/// "hk" (r, epsilon), "von_mises" (theta, normalization), "free" (dimension).
Model make_model(std::string_view name, const ParamMap& params);

/// Confining drift coefficients for the HKB model: drift(x) = s1 sin x + s2 sin 2x.
struct HKBDriftDescriptor {
  double sin_x = 0.0;
  double sin_2x = 0.0;
  /// Potential whose gradient is the drift (up to a constant).
  double potential(double x) const;
  double drift(double x) const;
};

HKBDriftDescriptor hkb_sign_convention(const HKBParams& p, HKBDrift drift = HKBDrift::printed);

/// Modified Bessel function I0 by its power series (relative truncation 1e-14).
double bessel_i0(double x);
/// Modified Bessel function I1 by its power series.
double bessel_i1(double x);

/// Derivative of the regularized Hegselmann-Krause potential, W'(z) for the
/// periodic difference z: z inside the radius, then a linear ramp to zero of
/// width epsilon, zero beyond.
double hk_kernel_derivative(double z, const HKParams& p);
/// Antiderivative of hk_kernel_derivative with W(0) = 0.
double hk_kernel(double z, const HKParams& p);

}  // namespace mvsteady
