#include "mvsteady/analysis.hpp"

#include "mvsteady/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mvsteady {

namespace {

double param_or(const ParamMap& p, std::string_view key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// Z^-1 exp(-beta * potential) on the nodes, shifted by the largest exponent first.
Vector gibbs(const Vector& potential, const Vector& weights, double beta_inv) {
  const Vector expo = -potential / beta_inv;
  const double top = expo.maxCoeff();
  if (!std::isfinite(top)) {
    throw NumericalError("Gibbs exponent is not finite (max exponent " + std::to_string(top) + ")");
  }
  const Vector g = (expo.array() - top).exp().matrix();
  return g / weights.dot(g);
}

}  // namespace

Analyzer::Analyzer(Model model, SpectralBasis basis, QuadratureRule quad, double beta_inv)
    : model_(std::move(model)), basis_(std::move(basis)), quad_(std::move(quad)), beta_inv_(beta_inv) {
  if (!(beta_inv_ > 0.0)) throw InputError("beta_inv must be positive");
  psi_ = basis_.values(quad_.nodes);
  const Index n = quad_.size();
  v_.resize(n);
  for (Index q = 0; q < n; ++q) v_[q] = model_.confining(quad_.nodes[static_cast<std::size_t>(q)]);
  w_ = model_.has_interaction
           ? kernels::pairwise(std::span<const Point>(quad_.nodes),
                               [this](const Point& x, const Point& y) { return model_.interaction(x, y); })
           : Matrix::Zero(n, n);
}

Vector Analyzer::convolve(const Vector& rho_nodes) const { return w_ * quad_.weights.cwiseProduct(rho_nodes); }

FreeEnergyReport Analyzer::free_energy(const Vector& a) const {
  constexpr double floor = 1e-12;
  const Vector rho = density_at_nodes(a);
  FreeEnergyReport r;
  Index clamped = 0;
  for (Index q = 0; q < rho.size(); ++q) {
    double value = rho[q];
    if (value < floor) {
      value = floor;
      ++clamped;
    }
    r.entropy += quad_.weights[q] * rho[q] * std::log(value);
  }
  r.entropy *= beta_inv_;
  r.confinement = quad_.weights.dot(v_.cwiseProduct(rho));
  r.interaction = 0.5 * quad_.weights.dot(rho.cwiseProduct(convolve(rho)));
  r.total = r.entropy + r.confinement + r.interaction;
  r.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(rho.size());
  return r;
}

double Analyzer::kirkwood_monroe_residual(const Vector& a) const {
  const Vector rho = density_at_nodes(a);
  const Vector image = gibbs(v_ + convolve(rho), quad_.weights, beta_inv_);
  const Vector diff = rho - image;
  return std::sqrt(quad_.weights.dot(diff.cwiseProduct(diff)));
}

FixedPointResult Analyzer::fixed_point_iterate(const Vector& rho0_nodes, double tol, int max_iter,
                                               double damping) const {
  if (rho0_nodes.size() != quad_.size()) throw InputError("fixed point: initial density must live on the nodes");
  if (rho0_nodes.minCoeff() <= 0.0) throw InputError("fixed point: initial density must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InputError("fixed point: damping must be in (0, 1]");
  FixedPointResult out;
  out.rho = rho0_nodes / quad_.weights.dot(rho0_nodes);
  for (int k = 1; k <= max_iter; ++k) {
    const Vector image = gibbs(v_ + convolve(out.rho), quad_.weights, beta_inv_);
    const Vector next = (1.0 - damping) * out.rho + damping * image;
    const Vector diff = next - out.rho;
    out.rho = next;
    out.iterations = k;
    out.last_increment = std::sqrt(quad_.weights.dot(diff.cwiseProduct(diff)));
    if (out.last_increment <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double Analyzer::free_energy_gradient_probe(const Vector& a, int count, double step, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    Vector dir(a.size());
    for (Index k = 0; k < a.size(); ++k) dir[k] = normal(rng);
    dir[0] = 0.0;
    dir.normalize();
    const double d = (free_energy(a + step * dir).total - free_energy(a - step * dir).total) / (2.0 * step);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

FreeEnergyReport free_energy(const Vector& a, const Model& model, const SpectralBasis& basis,
                             const QuadratureRule& quad, double beta_inv) {
  return Analyzer(model, basis, quad, beta_inv).free_energy(a);
}

double kirkwood_monroe_residual(const Vector& a, const Model& model, const SpectralBasis& basis,
                                const QuadratureRule& quad, double beta_inv) {
  return Analyzer(model, basis, quad, beta_inv).kirkwood_monroe_residual(a);
}

Eigen::Vector2d self_consistency_map(const Eigen::Vector2d& m, const Model& model, double beta_inv,
                                     const QuadratureRule& quad) {
  if (model.name != "hkb") throw InputError("self-consistency map is defined for the HKB model");
  const double kappa = param_or(model.params, "kappa", 0.0);
  const Index n = quad.size();
  Vector potential(n), c(n), s(n);
  for (Index q = 0; q < n; ++q) {
    const Point& x = quad.nodes[static_cast<std::size_t>(q)];
    c[q] = std::cos(x[0]);
    s[q] = std::sin(x[0]);
    potential[q] = model.confining(x) - kappa * (m[0] * c[q] + m[1] * s[q]);
  }
  const Vector rho = gibbs(potential, quad.weights, beta_inv);
  return {quad.weights.dot(c.cwiseProduct(rho)), quad.weights.dot(s.cwiseProduct(rho))};
}

std::vector<double> symmetric_self_consistency_roots(const Model& model, double beta_inv,
                                                     const QuadratureRule& quad, double lo, double hi,
                                                     int scan_points) {
  auto g = [&](double m1) { return self_consistency_map({m1, 0.0}, model, beta_inv, quad)[0] - m1; };
  std::vector<double> roots;
  double x_prev = lo;
  double g_prev = g(lo);
  for (int i = 1; i <= scan_points; ++i) {
    const double x = lo + (hi - lo) * i / scan_points;
    const double gx = g(x);
    if (g_prev == 0.0) {
      roots.push_back(x_prev);
    } else if (g_prev * gx < 0.0) {
      double a = x_prev, b = x, ga = g_prev;
      while (b - a > 1e-13) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if ((gm < 0.0) == (ga < 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    g_prev = gx;
  }
  return roots;
}

OrderParameter estimate_order_parameters(const Vector& a, const SpectralBasis& basis, const Model& model,
                                         double beta_inv, const LssOptions& options) {
  if (basis.dimension() != 1) throw InputError("order-parameter regression is implemented for 1D models");
  const Vector rho = density_on_uniform_grid(a, basis, options.grid_points);
  if (rho.minCoeff() < 0.0) throw InputError("order-parameter regression: density is negative on the grid");
  const auto grid = uniform_grid(basis.domain(), options.grid_points);
  const bool hkb = model.name == "hkb";
  const double kappa = param_or(model.params, "kappa", 0.0);
  const double scale = hkb && kappa > 0.0 ? kappa / beta_inv : 1.0;
  const double w = basis.frequency(0);
  const Index n = rho.size();
  Matrix design(n, 3);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double x = grid[static_cast<std::size_t>(i)][0];
    design(i, 0) = 1.0;
    design(i, 1) = scale * std::cos(w * x);
    design(i, 2) = scale * std::sin(w * x);
    y[i] = std::log(std::max(rho[i], options.log_floor));
    if (hkb) y[i] += model.confining(grid[static_cast<std::size_t>(i)]) / beta_inv;
  }
  const Vector coef = design.colPivHouseholderQr().solve(y);
  return {coef[1], coef[2], -coef[0]};
}

PerturbationTest perturbation_test(const Vector& a, const GalerkinOperators& ops, const StabilityOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector dir(a.size());
  for (Index k = 0; k < a.size(); ++k) dir[k] = normal(rng);
  // Remove the mass component so the perturbed state stays a probability density.
  dir -= ops.zeta * (ops.zeta.dot(dir) / ops.zeta.squaredNorm());
  dir /= std::sqrt(dir.dot(ops.mass * dir));
  const Vector start = a + options.perturbation * dir;

  // Keep every eigenvalue of the linearization inside the RK4 stability region.
  const Matrix lin = ops.mass.llt().solve(rhs_jacobian(a, nullptr, ops));
  const double radius = lin.eigenvalues().cwiseAbs().maxCoeff();
  const double dt = radius > 0.0 ? std::min(options.dt, 2.5 / radius) : options.dt;

  // Integrate in chunks and stop as soon as the verdict is decisive.
  IntegrateOptions io;
  io.target = a;
  io.stride = std::numeric_limits<int>::max();
  const int chunks = 20;
  const double d0 = l2_distance(start, a, ops);
  PerturbationTest out;
  Vector state = start;
  try {
    for (int c = 0; c < chunks; ++c) {
      const double t0 = options.horizon * c / chunks;
      const double t1 = options.horizon * (c + 1) / chunks;
      const auto traj = integrate_forward(state, nullptr, t0, t1, dt, ops, io);
      state = traj.states.back();
      out.growth = traj.distance.back() / d0;
      if (out.growth >= options.decisive_factor || out.growth <= 1.0 / options.decisive_factor) break;
    }
  } catch (const IntegrationFailure&) {
    out.growth = std::numeric_limits<double>::infinity();
  }
  if (out.growth >= options.decisive_factor) {
    out.verdict = Stability::unstable;
  } else if (out.growth <= 1.0 / options.decisive_factor) {
    out.verdict = Stability::stable;
  }
  return out;
}

void classify_stability(SteadyStateSet& set, const GalerkinOperators& ops, const Analyzer& analyzer,
                        const StabilityOptions& options) {
  if (set.states.empty()) return;
  double best = std::numeric_limits<double>::infinity();
  for (auto& s : set.states) {
    s.free_energy = analyzer.free_energy(s.coeffs).total;
    best = std::min(best, s.free_energy);
  }
  const double tol = options.energy_tol * std::max(1.0, std::abs(best));
  for (auto& s : set.states) {
    if (s.translate_of) {
      s.stability = set.states[static_cast<std::size_t>(*s.translate_of)].stability;
      continue;
    }
    s.stability = s.free_energy <= best + tol ? Stability::stable : Stability::unstable;
    if (options.dynamic_check) {
      const auto test = perturbation_test(s.coeffs, ops, options);
      if (test.verdict != Stability::unknown) s.stability = test.verdict;
    }
  }
}

}  // namespace mvsteady
