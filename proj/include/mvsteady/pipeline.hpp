#pragma once

#include "mvsteady/config.hpp"

#include <optional>
#include <vector>

namespace mvsteady {

/// Everything one discretized run needs.
struct Problem {
  Model model;
  SpectralBasis basis;
  QuadratureRule quad;
  GalerkinOperators ops;
};

/// Builds model, basis, quadrature and operators. `quad_points` overrides the
/// configured quadrature size when positive. Operators are read from and
/// written to `config.cache_dir` when it is set.
Problem build_problem(const RunConfig& config, bool control_tensors, int quad_points = 0);

/// Coefficients of a deflation starting point.
Vector initial_guess(const GuessSpec& spec, const Problem& problem, double beta_inv, std::uint64_t seed);

/// Coefficients of an evolve/stabilize starting state; `target` is required
/// for StateSpec::Kind::target.
Vector build_state(const StateSpec& spec, const Problem& problem, const Vector* target);

/// Reads coefficients from a JSON file holding an array or {"coefficients": [...]}.
Vector read_coefficients(const std::filesystem::path& path, Index expected_size);

struct SteadyStateRun {
  RunConfig config;
  std::optional<double> sweep_value;
  SteadyStateSet set;
  std::vector<double> kirkwood_monroe;
  double seconds = 0.0;
};

/// Deflation, positivity filter, translation tags, order parameters and
/// stability for a config without a sweep.
SteadyStateRun run_steady_states(const RunConfig& config, const Problem& problem);

/// One run per sweep value (or a single run).
std::vector<SteadyStateRun> run_steady_state_sweep(const RunConfig& config);

/// Index into `states` of the state the target spec picks out.
std::size_t select_state(const std::vector<SteadyState>& states, const TargetSpec& spec, const SpectralBasis& basis);

}  // namespace mvsteady
