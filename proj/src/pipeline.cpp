#include "mvsteady/pipeline.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace mvsteady {

namespace {

std::filesystem::path cache_path(const RunConfig& c, const std::string& key, int quad_points) {
  std::string name;
  for (char ch : key) name += std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ? ch : '_';
  char tail[96];
  std::snprintf(tail, sizeof tail, "_l%d_q%d_b%.17g.ops", c.modes_per_axis, quad_points, c.beta_inv);
  return std::filesystem::path(c.cache_dir) / (name + tail);
}

// 1 + sum amplitude cos(k . w x - phase) on the quadrature nodes.
Vector modulation_at_nodes(const std::vector<CosineTerm>& terms, const Problem& p) {
  const Index n = p.quad.size();
  Vector out = Vector::Ones(n);
  for (const auto& t : terms) {
    if (static_cast<int>(t.wavenumber.size()) != p.basis.dimension()) {
      throw ConfigError("cosine term needs " + std::to_string(p.basis.dimension()) + " wavenumber entries");
    }
    for (Index q = 0; q < n; ++q) {
      const Point& x = p.quad.nodes[static_cast<std::size_t>(q)];
      double arg = -t.phase;
      for (int j = 0; j < p.basis.dimension(); ++j) arg += t.wavenumber[static_cast<std::size_t>(j)] * p.basis.frequency(j) * x[j];
      out[q] += t.amplitude * std::cos(arg);
    }
  }
  return out;
}

Vector normalized(Vector a, const Problem& p) {
  const double mass = p.ops.zeta.dot(a);
  if (!(std::abs(mass) > 1e-14)) throw InputError("state has zero mass and cannot be normalized");
  return a / mass;
}

}  // namespace

Problem build_problem(const RunConfig& c, bool control_tensors, int quad_points) {
  Model model = make_model(c.model_name, c.model_params);
  SpectralBasis basis(model.domain, c.modes_per_axis);
  const int q = quad_points > 0 ? quad_points : c.quad_points;
  QuadratureRule quad = build_quadrature(model.domain, q, c.quadrature);
  const std::string key = model_key(model);
  if (!c.cache_dir.empty()) {
    const auto path = cache_path(c, key, q);
    if (auto cached = load_operators(path, key, c.modes_per_axis, q, c.beta_inv)) {
      if (!control_tensors || !cached->control.empty()) {
        return Problem{std::move(model), std::move(basis), std::move(quad), std::move(*cached)};
      }
    }
    GalerkinOperators ops = assemble_operators(basis, quad, model, c.beta_inv, {control_tensors});
    std::filesystem::create_directories(c.cache_dir);
    save_operators(path, ops);
    return Problem{std::move(model), std::move(basis), std::move(quad), std::move(ops)};
  }
  GalerkinOperators ops = assemble_operators(basis, quad, model, c.beta_inv, {control_tensors});
  return Problem{std::move(model), std::move(basis), std::move(quad), std::move(ops)};
}

Vector read_coefficients(const std::filesystem::path& path, Index expected_size) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open coefficient file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  const nlohmann::json& arr = j.is_object() && j.contains("coefficients") ? j["coefficients"] : j;
  if (!arr.is_array()) throw InputError(path.string() + ": expected an array of coefficients");
  if (static_cast<Index>(arr.size()) != expected_size) {
    throw InputError(path.string() + ": expected " + std::to_string(expected_size) + " coefficients, found " +
                     std::to_string(arr.size()));
  }
  Vector a(expected_size);
  for (Index i = 0; i < expected_size; ++i) {
    if (!arr[static_cast<std::size_t>(i)].is_number()) throw InputError(path.string() + ": non-numeric coefficient");
    a[i] = arr[static_cast<std::size_t>(i)].get<double>();
  }
  return a;
}

Vector initial_guess(const GuessSpec& spec, const Problem& p, double beta_inv, std::uint64_t seed) {
  switch (spec.kind) {
    case GuessSpec::Kind::zero:
      return Vector::Zero(p.basis.size());
    case GuessSpec::Kind::uniform:
      return uniform_density_coefficients(p.basis);
    case GuessSpec::Kind::random: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Vector a(p.basis.size());
      for (Index i = 0; i < a.size(); ++i) a[i] = unit(rng);
      return normalized(std::move(a), p);
    }
    case GuessSpec::Kind::fixed_point: {
      const Vector rho0 = modulation_at_nodes(spec.seed, p);
      if (rho0.minCoeff() <= 0.0) throw ConfigError("fixed-point seed density must be positive");
      const Analyzer analyzer(p.model, p.basis, p.quad, beta_inv);
      const auto fp = analyzer.fixed_point_iterate(rho0, spec.tol, spec.max_iter, spec.damping);
      return project_function(fp.rho, p.basis, p.quad);
    }
    case GuessSpec::Kind::file:
      return read_coefficients(spec.file, p.basis.size());
  }
  throw InputError("unknown guess kind");
}

Vector build_state(const StateSpec& spec, const Problem& p, const Vector* target) {
  Vector a;
  switch (spec.kind) {
    case StateSpec::Kind::uniform:
      a = uniform_density_coefficients(p.basis);
      break;
    case StateSpec::Kind::target:
      if (target == nullptr) throw ConfigError("initial state 'target' needs a resolved target state");
      a = *target;
      break;
    case StateSpec::Kind::file:
      a = read_coefficients(spec.file, p.basis.size());
      break;
  }
  if (!spec.modulation.empty()) {
    const Vector rho = evaluate_density(a, p.basis, p.quad.nodes).cwiseProduct(modulation_at_nodes(spec.modulation, p));
    a = normalized(project_function(rho, p.basis, p.quad), p);
  }
  for (const auto& o : spec.offsets) {
    if (o.index >= a.size()) throw ConfigError("state offset index " + std::to_string(o.index) + " is out of range");
    a[o.index] += o.value;
  }
  return a;
}

SteadyStateRun run_steady_states(const RunConfig& c, const Problem& p) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Vector> guesses;
  for (std::size_t i = 0; i < c.guesses.size(); ++i) {
    guesses.push_back(initial_guess(c.guesses[i], p, c.beta_inv, c.seed + i));
  }
  SteadyStateRun run;
  run.config = c;
  run.set = find_all_steady_states(p.ops, guesses, c.deflation, c.newton, c.filter);

  const Analyzer analyzer(p.model, p.basis, p.quad, c.beta_inv);
  StabilityOptions stability = c.stability;
  stability.seed = c.seed;
  classify_stability(run.set, p.ops, analyzer, stability);
  for (auto& s : run.set.states) {
    run.kirkwood_monroe.push_back(analyzer.kirkwood_monroe_residual(s.coeffs));
    if (p.basis.dimension() == 1 && s.positive) {
      s.order_params = estimate_order_parameters(s.coeffs, p.basis, p.model, c.beta_inv, c.lss);
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::vector<SteadyStateRun> run_steady_state_sweep(const RunConfig& c) {
  std::vector<SteadyStateRun> runs;
  if (!c.sweep) {
    runs.push_back(run_steady_states(c, build_problem(c, false)));
    return runs;
  }
  for (double v : c.sweep->values) {
    const RunConfig single = apply_sweep_value(c, v);
    runs.push_back(run_steady_states(single, build_problem(single, false)));
    runs.back().sweep_value = v;
  }
  return runs;
}

std::size_t select_state(const std::vector<SteadyState>& states, const TargetSpec& spec, const SpectralBasis& basis) {
  const Vector uniform = uniform_density_coefficients(basis);
  auto is_uniform = [&](const SteadyState& s) {
    return s.coeffs.size() == uniform.size() && (s.coeffs - uniform).lpNorm<Eigen::Infinity>() <= 1e-6;
  };
  std::vector<std::size_t> picked;
  if (spec.select == "min_free_energy" || spec.select == "max_free_energy") {
    const bool want_min = spec.select == "min_free_energy";
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (std::isnan(states[i].free_energy)) continue;
      if (!best || (want_min ? states[i].free_energy < states[*best].free_energy
                             : states[i].free_energy > states[*best].free_energy)) {
        best = i;
      }
    }
    if (best) picked.push_back(*best);
  } else {
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i];
      const bool keep = spec.select == "all" || (spec.select == "stable" && s.stability == Stability::stable) ||
                        (spec.select == "unstable" && s.stability == Stability::unstable) ||
                        (spec.select == "uniform" && is_uniform(s)) ||
                        (spec.select == "nonuniform" && !is_uniform(s));
      if (keep) picked.push_back(i);
    }
  }
  if (picked.empty()) throw ConfigError("target selector '" + spec.select + "' matches no steady state");
  if (spec.index) {
    if (static_cast<std::size_t>(*spec.index) >= picked.size()) {
      throw ConfigError("target index " + std::to_string(*spec.index) + " is out of range: selector '" +
                        spec.select + "' matches " + std::to_string(picked.size()) + " state(s)");
    }
    return picked[static_cast<std::size_t>(*spec.index)];
  }
  if (picked.size() != 1) {
    throw ConfigError("target selector '" + spec.select + "' matches " + std::to_string(picked.size()) +
                      " states; set control.target.index");
  }
  return picked.front();
}

}  // namespace mvsteady
