#pragma once

#include "mvsteady/analysis.hpp"
#include "mvsteady/control.hpp"
#include "mvsteady/deflation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvsteady {

/// Raised for malformed configuration; the message names the offending field.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// rho(x) proportional to 1 + sum amplitude * cos(k . w x - phase).
struct CosineTerm {
  std::vector<int> wavenumber;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct CoefficientOffset {
  Index index = 0;
  double value = 0.0;
};

/// Starting point of one deflation chain.
struct GuessSpec {
  enum class Kind { zero, uniform, random, fixed_point, file };
  Kind kind = Kind::zero;
  /// Shape of the positive density that seeds the fixed-point iteration.
  std::vector<CosineTerm> seed;
  double damping = 1.0;
  double tol = 1e-12;
  int max_iter = 5000;
  std::string file;
};

/// Initial state for evolve and stabilize runs.
struct StateSpec {
  enum class Kind { uniform, target, file };
  Kind kind = Kind::uniform;
  std::vector<CosineTerm> modulation;
  std::vector<CoefficientOffset> offsets;
  std::string file;
};

/// Picks exactly one steady state: filter by `select`, then take `index`
/// within the filtered list (required when the filter leaves several).
struct TargetSpec {
  std::string states_file;
  std::string select = "all";
  std::optional<int> index;
  int run = 0;
  /// Also consider roots dropped by the positivity filter (listed after the
  /// accepted ones), e.g. a sharply peaked target whose truncation dips below zero.
  bool include_rejected = false;
};

struct SweepSpec {
  /// "beta_inv" or "model.<parameter>".
  std::string parameter;
  std::vector<double> values;
};

struct RunConfig {
  nlohmann::json resolved;

  std::string model_name;
  ParamMap model_params;

  int modes_per_axis = 16;
  int quad_points = 100;
  QuadratureKind quadrature = QuadratureKind::gauss_legendre;
  double beta_inv = 1.0;
  std::string cache_dir;

  DeflationConfig deflation;
  std::uint64_t seed = 0;
  std::vector<GuessSpec> guesses;
  NewtonConfig newton;
  FilterConfig filter;
  StabilityOptions stability;
  LssOptions lss;
  std::optional<SweepSpec> sweep;

  struct Evolve {
    double t_end = 10.0;
    double dt = 0.01;
    StateSpec initial;
    TargetSpec reference;
    bool has_reference = false;
  } evolve;

  struct Control {
    TargetSpec target;
    StateSpec initial;
    OCPConfig ocp;
    MPCConfig mpc;
    bool compare_uncontrolled = true;
  } control;

  struct Verify {
    int refinement = 2;
    double residual_tol = 1e-8;
    double kirkwood_monroe_tol = 1e-6;
    double self_consistency_tol = 1e-3;
  } verify;

  struct Output {
    std::filesystem::path directory = "out";
    int snapshot_stride = 100;
    int density_points_1d = 512;
    int density_points_2d = 128;
    bool densities = true;
  } output;
};

/// Every key with its default value; user files may only use these keys.
nlohmann::json default_config();

/// Parses JSON text; syntax errors become ConfigError with line information.
nlohmann::json parse_config_text(const std::string& text, const std::string& origin);
nlohmann::json read_config_file(const std::filesystem::path& path);

/// defaults <- preset <- user, applied as JSON merge patches.
nlohmann::json resolve_config(const nlohmann::json& user, const std::string& preset_name = "");

/// Validates and converts a resolved document. Unknown keys and wrongly typed
/// values raise ConfigError naming the JSON path.
RunConfig parse_config(const nlohmann::json& resolved);

/// Copy of `config` with the sweep parameter set to `value` and the sweep removed.
RunConfig apply_sweep_value(const RunConfig& config, double value);

}  // namespace mvsteady
