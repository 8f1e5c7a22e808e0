#include "mvsteady/presets.hpp"
#include "mvsteady/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace mvsteady;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kNoRoots = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::string states;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Options& opt, bool require_source) {
  if (require_source && opt.config.empty() && opt.preset.empty()) {
    throw ConfigError("give --config <path> and/or --preset <name>");
  }
  nlohmann::json user;
  if (!opt.config.empty()) user = read_config_file(opt.config);
  nlohmann::json resolved = resolve_config(user, opt.preset);
  if (!opt.out.empty()) resolved["output"]["directory"] = opt.out;
  if (opt.seed) resolved["deflation"]["seed"] = *opt.seed;
  RunConfig c = parse_config(resolved);
  fs::create_directories(c.output.directory);
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int density_points(const RunConfig& c, const SpectralBasis& basis) {
  return basis.dimension() == 1 ? c.output.density_points_1d : c.output.density_points_2d;
}

std::string numbered(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem, i);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------- steady-states

int cmd_steady_states(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = load(opt, true);
  const auto runs = run_steady_state_sweep(c);

  std::vector<std::string> files;
  std::ostringstream rep;
  rep << "steady-states: model " << c.model_name << ", modes per axis " << c.modes_per_axis << ", quadrature "
      << c.quad_points << "\n";
  std::size_t total = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    const Model model = make_model(run.config.model_name, run.config.model_params);
    const SpectralBasis basis(model.domain, run.config.modes_per_axis);
    rep << "\nrun " << r << ": beta_inv " << format_double(run.config.beta_inv);
    if (run.sweep_value) rep << " (" << c.sweep->parameter << " = " << format_double(*run.sweep_value) << ")";
    rep << ", " << run.set.states.size() << " state(s), " << run.set.rejected.size() << " rejected, "
        << run.set.newton_solves << " Newton solves, " << fmt("%.2f", run.seconds) << " s\n";
    for (std::size_t i = 0; i < run.set.states.size(); ++i) {
      const auto& s = run.set.states[i];
      std::string name;
      if (c.output.densities) {
        name = numbered("density", total);
        write_density_csv(c.output.directory / name, s.coeffs, basis, density_points(c, basis));
      }
      files.push_back(name);
      ++total;
      rep << "  [" << i << "] " << to_string(s.stability) << "  |F| " << fmt("%.3e", s.residual_norm) << "  KM "
          << fmt("%.3e", run.kirkwood_monroe[i]) << "  F " << fmt("%.10f", s.free_energy) << "  min rho "
          << fmt("%.3e", s.min_density);
      if (s.order_params) rep << "  m1 " << fmt("%.6f", s.order_params->m1) << "  m2 " << fmt("%.6f", s.order_params->m2);
      if (s.translate_of) rep << "  translate of [" << *s.translate_of << "]";
      rep << "\n";
    }
  }
  write_json(c.output.directory / "steadystates.json", steady_states_document(c, runs, files));
  rep << "\n" << total << " state(s) in total, " << fmt("%.2f", seconds_since(t0)) << " s\n";
  write_text(c.output.directory / "report.txt", rep.str());
  std::cout << rep.str();
  return total > 0 ? kOk : kNoRoots;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const Options& opt) {
  const RunConfig cli = load(opt, false);
  const fs::path path = opt.states.empty() ? cli.output.directory / "steadystates.json" : fs::path(opt.states);
  const StoredSteadyStates stored = read_steady_states(path);
  const RunConfig base = parse_config(stored.config);
  const auto& tol = cli.verify;

  std::ostringstream rep;
  rep << "verify: " << path.string() << ", quadrature refined " << tol.refinement << "x\n";
  rep << "run  state  |F| fine      KM fine       |m-R(m)|      result\n";
  bool all_pass = true;
  std::size_t checked = 0;
  for (std::size_t r = 0; r < stored.runs.size(); ++r) {
    const auto& run = stored.runs[r];
    const RunConfig c = run.sweep_value ? apply_sweep_value(base, *run.sweep_value) : base;
    const Problem fine = build_problem(c, false, c.quad_points * tol.refinement);
    const Analyzer analyzer(fine.model, fine.basis, fine.quad, c.beta_inv);
    for (std::size_t i = 0; i < run.states.size(); ++i) {
      const Vector& a = run.states[i].coeffs;
      if (a.size() != fine.basis.size()) throw InputError("stored state has the wrong number of coefficients");
      const double res = residual(a, fine.ops).norm();
      const double km = analyzer.kirkwood_monroe_residual(a);
      bool pass = res <= tol.residual_tol && km <= tol.kirkwood_monroe_tol;
      std::string sc = "-";
      if (fine.model.name == "hkb" && fine.basis.dimension() == 1 && density_on_uniform_grid(a, fine.basis, c.lss.grid_points).minCoeff() >= 0.0) {
        const auto op = estimate_order_parameters(a, fine.basis, fine.model, c.beta_inv, c.lss);
        const Eigen::Vector2d m(op.m1, op.m2);
        const double gap = (m - self_consistency_map(m, fine.model, c.beta_inv, fine.quad)).norm();
        sc = fmt("%.3e", gap);
        pass = pass && gap <= tol.self_consistency_tol;
      }
      all_pass = all_pass && pass;
      ++checked;
      char line[160];
      std::snprintf(line, sizeof line, "%3zu  %5zu  %.3e     %.3e     %-12s  %s\n", r, i, res, km, sc.c_str(),
                    pass ? "PASS" : "FAIL");
      rep << line;
    }
  }
  rep << checked << " state(s) checked: " << (all_pass ? "all pass" : "failures present") << "\n";
  write_text(cli.output.directory / "report.txt", rep.str());
  std::cout << rep.str();
  return all_pass ? kOk : kNumerical;
}

// ---------------------------------------------------------------- shared by evolve / stabilize

struct Resolved {
  RunConfig config;
  Problem problem;
  Vector target;
};

Resolved resolve_target(const RunConfig& c, const TargetSpec& spec, bool control_tensors) {
  RunConfig eff = c;
  if (c.sweep) {
    if (static_cast<std::size_t>(spec.run) >= c.sweep->values.size()) throw ConfigError("target run index out of range");
    eff = apply_sweep_value(c, c.sweep->values[static_cast<std::size_t>(spec.run)]);
  }
  Problem problem = build_problem(eff, control_tensors);
  std::vector<SteadyState> states;
  if (!spec.states_file.empty()) {
    const auto stored = read_steady_states(spec.states_file);
    if (static_cast<std::size_t>(spec.run) >= stored.runs.size()) throw ConfigError("target run index out of range");
    const auto& run = stored.runs[static_cast<std::size_t>(spec.run)];
    states = run.states;
    if (spec.include_rejected) states.insert(states.end(), run.rejected.begin(), run.rejected.end());
  } else {
    std::cerr << "computing steady states for the target\n";
    auto set = run_steady_states(eff, problem).set;
    states = std::move(set.states);
    if (spec.include_rejected) states.insert(states.end(), set.rejected.begin(), set.rejected.end());
  }
  const std::size_t idx = select_state(states, spec, problem.basis);
  Vector target = states[idx].coeffs;
  if (target.size() != problem.basis.size()) throw ConfigError("target state does not match the configured basis");
  return {std::move(eff), std::move(problem), std::move(target)};
}

void write_snapshots(const RunConfig& c, const Trajectory& traj, const SpectralBasis& basis) {
  if (!c.output.densities) return;
  const fs::path dir = c.output.directory / "snapshots";
  fs::create_directories(dir);
  const auto stride = static_cast<std::size_t>(c.output.snapshot_stride);
  std::size_t k = 0;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    if (i % stride != 0 && i + 1 != traj.states.size()) continue;
    write_density_csv(dir / numbered("density", k++), traj.states[i], basis, density_points(c, basis));
  }
}

// ---------------------------------------------------------------- evolve

int cmd_evolve(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c0 = load(opt, true);
  std::optional<Resolved> res;
  if (c0.evolve.has_reference) res.emplace(resolve_target(c0, c0.evolve.reference, false));
  const RunConfig& c = res ? res->config : c0;
  const Problem problem = res ? std::move(res->problem) : build_problem(c, false);
  const Vector* target = res ? &res->target : nullptr;
  const Vector a0 = build_state(c.evolve.initial, problem, target);

  IntegrateOptions io;
  if (target) io.target = *target;
  io.diagnostics_mesh = problem.basis.dimension() == 1 ? 256 : 32;
  Trajectory traj;
  int code = kOk;
  std::string failure;
  try {
    traj = integrate_forward(a0, nullptr, 0.0, c.evolve.t_end, c.evolve.dt, problem.ops, io);
  } catch (const IntegrationFailure& e) {
    traj = e.partial();
    failure = e.what();
    code = kNumerical;
  }

  std::vector<std::string> header{"t", "mass", "min_density"};
  if (target) header.push_back("distance");
  CsvWriter csv(c.output.directory / "trajectory.csv", header);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i], traj.mass[i], traj.min_density[i]};
    if (target) row.push_back(traj.distance[i]);
    csv.row(row);
  }
  write_snapshots(c, traj, problem.basis);

  std::ostringstream rep;
  rep << "evolve: t in [0, " << format_double(c.evolve.t_end) << "], dt " << format_double(c.evolve.dt) << ", "
      << traj.times.size() << " stored states\n";
  rep << "max mass drift " << fmt("%.3e", traj.max_mass_drift()) << "\n";
  if (target && !traj.distance.empty()) {
    rep << "distance to reference: initial " << fmt("%.6e", traj.distance.front()) << ", final "
        << fmt("%.6e", traj.distance.back()) << "\n";
  }
  if (!failure.empty()) rep << "integration failed: " << failure << " (last good state written)\n";
  rep << "runtime " << fmt("%.2f", seconds_since(t0)) << " s\n";
  write_text(c.output.directory / "report.txt", rep.str());
  std::cout << rep.str();
  return code;
}

// ---------------------------------------------------------------- stabilize

int cmd_stabilize(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c0 = load(opt, true);
  Resolved res = resolve_target(c0, c0.control.target, true);
  const RunConfig& c = res.config;
  const Problem& p = res.problem;
  const Vector a0 = build_state(c.control.initial, p, &res.target);

  const MPCResult mpc = mpc_loop(a0, res.target, c.control.mpc, c.control.ocp, p.ops);

  // Uncontrolled reference over the same segments, so both series share a time grid.
  std::vector<double> free_distance;
  std::string free_failure;
  if (c.control.compare_uncontrolled) {
    IntegrateOptions io;
    io.target = res.target;
    const double interval = c.control.mpc.span / c.control.mpc.n_steps;
    Vector a = a0;
    try {
      for (int h = 0; h < c.control.mpc.n_steps; ++h) {
        const auto seg = integrate_forward(a, nullptr, h * interval, (h + 1) * interval, c.control.ocp.dt, p.ops, io);
        free_distance.insert(free_distance.end(), seg.distance.begin() + (h == 0 ? 0 : 1), seg.distance.end());
        a = seg.states.back();
      }
    } catch (const IntegrationFailure& e) {
      free_failure = e.what();
    }
  }

  const auto& traj = mpc.trajectory;
  std::vector<std::string> header{"t", "distance", "mass"};
  if (c.control.compare_uncontrolled) header.push_back("uncontrolled_distance");
  {
    CsvWriter csv(c.output.directory / "trajectory.csv", header);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      std::vector<double> row{traj.times[i], traj.distance[i], traj.mass[i]};
      if (c.control.compare_uncontrolled) row.push_back(i < free_distance.size() ? free_distance[i] : std::nan(""));
      csv.row(row);
    }
  }
  {
    std::vector<std::string> ch{"t", "inner_iterations", "inner_converged", "window_cost", "control_norm"};
    for (int j = 0; j < p.basis.dimension(); ++j) {
      for (Index k = 0; k < p.basis.size(); ++k) ch.push_back("u" + std::to_string(j) + "_" + std::to_string(k));
    }
    CsvWriter csv(c.output.directory / "controls.csv", ch);
    for (std::size_t h = 0; h < mpc.applied.size(); ++h) {
      const Matrix& u = mpc.applied[h];
      double norm_sq = 0.0;
      for (Index j = 0; j < u.cols(); ++j) norm_sq += u.col(j).dot(p.ops.mass * u.col(j));
      std::vector<double> row{mpc.control_times[h], static_cast<double>(mpc.inner_iterations[h]),
                              mpc.inner_converged[h] ? 1.0 : 0.0, mpc.window_costs[h], std::sqrt(norm_sq)};
      for (Index j = 0; j < u.cols(); ++j) {
        for (Index k = 0; k < u.rows(); ++k) row.push_back(u(k, j));
      }
      csv.row(row);
    }
  }
  write_snapshots(c, traj, p.basis);

  std::ostringstream rep;
  rep << "stabilize: span " << format_double(c.control.mpc.span) << ", window " << format_double(c.control.mpc.window)
      << ", " << c.control.mpc.n_steps << " feedback updates, gamma " << format_double(c.control.ocp.gamma)
      << ", eta " << format_double(c.control.ocp.eta) << "\n";
  rep << "controlled distance: initial " << fmt("%.6e", traj.distance.front()) << ", final "
      << fmt("%.6e", traj.distance.back()) << "\n";
  if (!free_distance.empty()) {
    rep << "uncontrolled distance: final " << fmt("%.6e", free_distance.back());
    if (!free_failure.empty()) rep << " (stopped early: " << free_failure << ")";
    rep << "\ncontrolled / uncontrolled final: " << fmt("%.4f", traj.distance.back() / free_distance.back()) << "\n";
  }
  rep << "inner solves without convergence: " << mpc.warnings << " of " << mpc.applied.size() << "\n";
  rep << "max mass drift " << fmt("%.3e", traj.max_mass_drift()) << "\n";
  rep << "runtime " << fmt("%.2f", seconds_since(t0)) << " s\n";
  write_text(c.output.directory / "report.txt", rep.str());
  std::cout << rep.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvsteady: steady states and feedback control of McKean-Vlasov equations on the torus"};
  app.require_subcommand(1);
  Options opt;
  std::string names;
  for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config file");
    sub->add_option("--preset", opt.preset, "named preset (" + names + ")");
    sub->add_option("--out", opt.out, "output directory (overrides output.directory)");
    sub->add_option("--seed", opt.seed, "seed for random initial guesses and perturbation tests");
  };
  auto* steady = app.add_subcommand("steady-states", "enumerate steady states by deflation");
  auto* verify = app.add_subcommand("verify", "re-check stored steady states on a refined quadrature");
  auto* evolve = app.add_subcommand("evolve", "integrate the uncontrolled dynamics");
  auto* stabilize = app.add_subcommand("stabilize", "steer the dynamics to a target state by MPC");
  for (auto* sub : {steady, verify, evolve, stabilize}) add_common(sub);
  verify->add_option("--states", opt.states, "steadystates.json to check (default: <out>/steadystates.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInput;
  }

  try {
    if (*steady) return cmd_steady_states(opt);
    if (*verify) return cmd_verify(opt);
    if (*evolve) return cmd_evolve(opt);
    return cmd_stabilize(opt);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
