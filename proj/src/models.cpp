#include "mvsteady/models.hpp"

#include <cmath>
#include <numbers>

namespace mvsteady {

namespace {

constexpr double kPi = std::numbers::pi;

double param_or(const ParamMap& m, std::string_view key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

}  // namespace

double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return sum;
}

double bessel_i1(double x) {
  const double q = 0.25 * x * x;
  double term = 0.5 * x, sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    sum += term;
    if (std::abs(term) < 1e-14 * std::abs(sum)) break;
  }
  return sum;
}

double HKBDriftDescriptor::drift(double x) const { return sin_x * std::sin(x) + sin_2x * std::sin(2.0 * x); }

double HKBDriftDescriptor::potential(double x) const {
  return -sin_x * std::cos(x) - 0.5 * sin_2x * std::cos(2.0 * x);
}

HKBDriftDescriptor hkb_sign_convention(const HKBParams& p, HKBDrift drift) {
  // grad V for V = -c1 cos x - c2 cos 2x is c1 sin x + 2 c2 sin 2x.
  if (drift == HKBDrift::gradient) return {p.c1, 2.0 * p.c2};
  return {p.c1, -2.0 * p.c2};
}

Model make_hkb(const HKBParams& p, HKBDrift drift) {
  if (!(p.kappa >= 0.0)) throw InputError("HKB: kappa must be >= 0");
  const auto desc = hkb_sign_convention(p, drift);
  Model m;
  m.name = "hkb";
  m.domain = TorusDomain::line(0.0, 2.0 * kPi);
  m.params = {{"c1", p.c1}, {"c2", p.c2}, {"kappa", p.kappa},
              {"drift_printed", drift == HKBDrift::printed ? 1.0 : 0.0}};
  m.confining = [desc](const Point& x) { return desc.potential(x[0]); };
  m.confining_gradient = [desc](const Point& x) { return Point(desc.drift(x[0]), 0.0); };
  const double kappa = p.kappa;
  m.interaction = [kappa](const Point& x, const Point& y) { return -kappa * std::cos(x[0] - y[0]); };
  m.interaction_gradient = [kappa](const Point& x, const Point& y) {
    return Point(kappa * std::sin(x[0] - y[0]), 0.0);
  };
  m.has_interaction = kappa != 0.0;
  m.translation_invariant = p.c1 == 0.0 && p.c2 == 0.0;
  return m;
}

Model make_o2(const O2Params& p) {
  if (!(p.eta_field > 0.0 && p.eta_field < 1.0)) throw InputError("O(2): eta must lie in (0, 1)");
  const double eta = p.eta_field;
  Model m;
  m.name = "o2";
  m.domain = TorusDomain::line(0.0, 1.0);
  m.params = {{"eta", eta}};
  m.confining = [eta](const Point& x) { return -eta * std::cos(2.0 * kPi * x[0]); };
  m.confining_gradient = [eta](const Point& x) {
    return Point(2.0 * kPi * eta * std::sin(2.0 * kPi * x[0]), 0.0);
  };
  m.interaction = [](const Point& x, const Point& y) { return -std::cos(2.0 * kPi * (x[0] - y[0])); };
  m.interaction_gradient = [](const Point& x, const Point& y) {
    return Point(2.0 * kPi * std::sin(2.0 * kPi * (x[0] - y[0])), 0.0);
  };
  return m;
}

double hk_kernel_derivative(double z, const HKParams& p) {
  const double a = std::abs(z);
  const double s = z < 0.0 ? -1.0 : 1.0;
  if (a <= p.r) return z;
  if (a < p.r + p.epsilon_reg) return s * p.r * (p.r + p.epsilon_reg - a) / p.epsilon_reg;
  return 0.0;
}

double hk_kernel(double z, const HKParams& p) {
  const double a = std::abs(z);
  if (a <= p.r) return 0.5 * a * a;
  const double e = p.epsilon_reg;
  const double t = std::min(a, p.r + e) - p.r;
  return 0.5 * p.r * p.r + p.r * t - 0.5 * p.r * t * t / e;
}

Model make_hk(const HKParams& p) {
  if (!(p.r > 0.0 && p.r < 1.0)) throw InputError("HK: radius must lie in (0, 1)");
  if (!(p.epsilon_reg > 0.0) || p.r + p.epsilon_reg >= 0.5) {
    throw InputError("HK: regularization width must be positive and r + epsilon < 1/2");
  }
  Model m;
  m.name = "hk";
  m.domain = TorusDomain::line(0.0, 1.0);
  m.params = {{"r", p.r}, {"epsilon", p.epsilon_reg}};
  m.confining = [](const Point&) { return 0.0; };
  m.confining_gradient = [](const Point&) { return Point(0.0, 0.0); };
  const TorusDomain dom = m.domain;
  m.interaction = [p, dom](const Point& x, const Point& y) { return hk_kernel(dom.wrap(0, x[0] - y[0]), p); };
  m.interaction_gradient = [p, dom](const Point& x, const Point& y) {
    return Point(hk_kernel_derivative(dom.wrap(0, x[0] - y[0]), p), 0.0);
  };
  m.translation_invariant = true;
  return m;
}

Model make_von_mises(const VonMisesParams& p) {
  if (!(p.theta > 0.0)) throw InputError("Von Mises: theta must be positive");
  double c = p.normalization;
  if (c <= 0.0) {
    const double i0 = bessel_i0(1.0);
    c = 1.0 / (i0 * i0);
  }
  const double theta = p.theta;
  Model m;
  m.name = "von_mises";
  m.domain = TorusDomain::square(-kPi, kPi);
  m.params = {{"theta", theta}, {"normalization", c}};
  m.confining = [](const Point&) { return 0.0; };
  m.confining_gradient = [](const Point&) { return Point(0.0, 0.0); };
  m.interaction = [c, theta](const Point& x, const Point& y) {
    return -c * std::exp(theta * (std::cos(x[0] - y[0]) + std::cos(x[1] - y[1])));
  };
  m.interaction_gradient = [c, theta](const Point& x, const Point& y) {
    const double z0 = x[0] - y[0], z1 = x[1] - y[1];
    const double e = c * theta * std::exp(theta * (std::cos(z0) + std::cos(z1)));
    return Point(e * std::sin(z0), e * std::sin(z1));
  };
  m.translation_invariant = true;
  return m;
}

Model make_free(const TorusDomain& domain) {
  Model m;
  m.name = "free";
  m.domain = domain;
  m.confining = [](const Point&) { return 0.0; };
  m.confining_gradient = [](const Point&) { return Point(0.0, 0.0); };
  m.interaction = [](const Point&, const Point&) { return 0.0; };
  m.interaction_gradient = [](const Point&, const Point&) { return Point(0.0, 0.0); };
  m.translation_invariant = true;
  m.has_interaction = false;
  return m;
}

Model make_custom(std::string name, TorusDomain domain, std::function<double(const Point&)> v,
                  std::function<Point(const Point&)> grad_v,
                  std::function<double(const Point&, const Point&)> w,
                  std::function<Point(const Point&, const Point&)> grad_w) {
  if (!v || !grad_v || !w || !grad_w) throw InputError("custom model: all four potential callbacks are required");
  Model m;
  m.name = std::move(name);
  m.domain = std::move(domain);
  m.confining = std::move(v);
  m.confining_gradient = std::move(grad_v);
  m.interaction = std::move(w);
  m.interaction_gradient = std::move(grad_w);
  return m;
}

Model make_model(std::string_view name, const ParamMap& params) {
  if (name == "hkb") {
    HKBParams p;
    if (params.contains("alpha")) {
      p = HKBParams::from_alpha(params.find("alpha")->second, param_or(params, "kappa", 1.0));
    } else {
      p.c1 = param_or(params, "c1", 0.0);
      p.c2 = param_or(params, "c2", 1.0);
      p.kappa = param_or(params, "kappa", 1.0);
    }
    const bool printed = param_or(params, "drift_printed", 0.0) != 0.0;
    return make_hkb(p, printed ? HKBDrift::printed : HKBDrift::gradient);
  }
  if (name == "o2") return make_o2({param_or(params, "eta", 0.05)});
  if (name == "hk") return make_hk({param_or(params, "r", 0.1), param_or(params, "epsilon", 0.005)});
  if (name == "von_mises") {
    return make_von_mises({param_or(params, "theta", 1.0), param_or(params, "normalization", 0.0)});
  }
  if (name == "free") {
    const int dim = static_cast<int>(param_or(params, "dimension", 1.0));
    const double lo = param_or(params, "lo", 0.0);
    const double hi = param_or(params, "hi", 2.0 * kPi);
    if (dim == 1) return make_free(TorusDomain::line(lo, hi));
    if (dim == 2) return make_free(TorusDomain::square(lo, hi));
    throw InputError("free model: dimension must be 1 or 2");
  }
  throw InputError("unknown model name '" + std::string(name) + "'");
}

}  // namespace mvsteady
