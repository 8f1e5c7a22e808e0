#include "mvsteady/config.hpp"

#include "mvsteady/presets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mvsteady {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

// Object view that remembers which keys were read so leftovers can be reported.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& at(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) fail(child(key), "missing");
    return *v;
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(child(key), "must be finite");
    return x;
  }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0)) fail(child(key), "must be positive");
    return x;
  }

  int integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    return v.get<int>();
  }

  int positive_integer(const std::string& key) {
    const int x = integer(key);
    if (x < 1) fail(child(key), "must be at least 1");
    return x;
  }

  bool boolean(const std::string& key) {
    const json& v = at(key);
    if (!v.is_boolean()) fail(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    return v.get<std::string>();
  }

  Obj object(const std::string& key) { return Obj(at(key), child(key)); }

  const json& array(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(child(key), "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) fail(child(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<CosineTerm> parse_cosines(const json& arr, const std::string& path) {
  if (!arr.is_array()) fail(path, "expected an array");
  std::vector<CosineTerm> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Obj o(arr[i], path + "[" + std::to_string(i) + "]");
    CosineTerm t;
    const json& k = o.array("wavenumber");
    for (const auto& v : k) {
      if (!v.is_number_integer()) fail(o.child("wavenumber"), "expected integers");
      t.wavenumber.push_back(v.get<int>());
    }
    if (t.wavenumber.empty() || t.wavenumber.size() > 2) fail(o.child("wavenumber"), "needs one entry per axis");
    t.amplitude = o.number("amplitude");
    if (o.find("phase") != nullptr) t.phase = o.number("phase");
    o.finish();
    out.push_back(std::move(t));
  }
  return out;
}

GuessSpec parse_guess(const json& j, const std::string& path) {
  Obj o(j, path);
  GuessSpec g;
  const std::string kind = o.string("kind");
  if (kind == "zero") {
    g.kind = GuessSpec::Kind::zero;
  } else if (kind == "uniform") {
    g.kind = GuessSpec::Kind::uniform;
  } else if (kind == "random") {
    g.kind = GuessSpec::Kind::random;
  } else if (kind == "fixed_point") {
    g.kind = GuessSpec::Kind::fixed_point;
  } else if (kind == "file") {
    g.kind = GuessSpec::Kind::file;
  } else {
    fail(o.child("kind"), "expected zero, uniform, random, fixed_point or file");
  }
  if (const json* s = o.find("seed")) g.seed = parse_cosines(*s, o.child("seed"));
  if (o.find("damping") != nullptr) g.damping = o.number("damping");
  if (o.find("tol") != nullptr) g.tol = o.positive("tol");
  if (o.find("max_iter") != nullptr) g.max_iter = o.positive_integer("max_iter");
  if (o.find("file") != nullptr) g.file = o.string("file");
  if (!(g.damping > 0.0 && g.damping <= 1.0)) fail(o.child("damping"), "must lie in (0, 1]");
  if (g.kind == GuessSpec::Kind::file && g.file.empty()) fail(o.child("file"), "required for kind 'file'");
  o.finish();
  return g;
}

StateSpec parse_state(Obj o) {
  StateSpec s;
  const std::string kind = o.string("kind");
  if (kind == "uniform") {
    s.kind = StateSpec::Kind::uniform;
  } else if (kind == "target") {
    s.kind = StateSpec::Kind::target;
  } else if (kind == "file") {
    s.kind = StateSpec::Kind::file;
  } else {
    fail(o.child("kind"), "expected uniform, target or file");
  }
  s.modulation = parse_cosines(o.array("modulation"), o.child("modulation"));
  const json& offsets = o.array("offsets");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    Obj e(offsets[i], o.child("offsets") + "[" + std::to_string(i) + "]");
    const int idx = e.integer("index");
    if (idx < 0) fail(e.child("index"), "must be non-negative");
    s.offsets.push_back({idx, e.number("value")});
    e.finish();
  }
  s.file = o.string("file");
  if (s.kind == StateSpec::Kind::file && s.file.empty()) fail(o.child("file"), "required for kind 'file'");
  o.finish();
  return s;
}

TargetSpec parse_target(Obj o) {
  TargetSpec t;
  if (o.find("states_file") != nullptr) t.states_file = o.string("states_file");
  if (o.find("select") != nullptr) t.select = o.string("select");
  static const std::set<std::string> selectors{"all",    "stable",          "unstable",       "uniform",
                                               "nonuniform", "min_free_energy", "max_free_energy"};
  if (!selectors.count(t.select)) {
    fail(o.child("select"),
         "expected all, stable, unstable, uniform, nonuniform, min_free_energy or max_free_energy");
  }
  if (o.find("index") != nullptr) {
    t.index = o.integer("index");
    if (*t.index < 0) fail(o.child("index"), "must be non-negative");
  }
  if (o.find("run") != nullptr) t.run = o.integer("run");
  if (o.find("include_rejected") != nullptr) t.include_rejected = o.boolean("include_rejected");
  if (t.run < 0) fail(o.child("run"), "must be non-negative");
  o.finish();
  return t;
}

json state_default() {
  return {{"kind", "uniform"}, {"modulation", json::array()}, {"offsets", json::array()}, {"file", ""}};
}

json target_default() { return {{"states_file", ""}, {"select", "all"}, {"index", nullptr}, {"run", 0}, {"include_rejected", false}}; }

}  // namespace

json default_config() {
  return {
      {"model", {{"name", "hkb"}, {"params", json::object()}}},
      {"discretization",
       {{"modes_per_axis", 16},
        {"quadrature_points", 100},
        {"quadrature", "gauss_legendre"},
        {"beta_inv", 1.0},
        {"cache_dir", ""}}},
      {"deflation",
       {{"power", 2.0},
        {"shift", 1.0},
        {"max_roots", 32},
        {"divergence_cap", 1e8},
        {"seed", 0},
        {"guesses", json::array({{{"kind", "zero"}}})}}},
      {"newton", {{"step_tol", 1e-10}, {"accept_tol", 1e-9}, {"max_iter", 1000}}},
      {"filter", {{"mesh_points", 512}, {"positivity_tol", 1e-8}, {"dedup_tol", 1e-6}, {"translation_tol", 1e-4}}},
      {"stability",
       {{"energy_tol", 1e-7},
        {"dynamic_check", true},
        {"perturbation", 1e-3},
        {"horizon", 20.0},
        {"dt", 0.01},
        {"decisive_factor", 10.0}}},
      {"order_parameters", {{"grid_points", 512}, {"log_floor", 1e-12}}},
      {"sweep", nullptr},
      {"evolve", {{"t_end", 10.0}, {"dt", 0.01}, {"initial", state_default()}, {"reference", nullptr}}},
      {"control",
       {{"target", target_default()},
        {"initial", state_default()},
        {"gamma", 0.01},
        {"eta", 1.0},
        {"delta", 1.0},
        {"tol_u", 1e-10},
        {"max_iter", 50},
        {"max_backtracks", 20},
        {"dt", 0.01},
        {"smoothing", 0.0},
        {"window", 0.1},
        {"span", 1.0},
        {"n_steps", 10},
        {"warm_start", true},
        {"compare_uncontrolled", true}}},
      {"verify",
       {{"refinement", 2}, {"residual_tol", 1e-8}, {"kirkwood_monroe_tol", 1e-6}, {"self_consistency_tol", 1e-3}}},
      {"output",
       {{"directory", "out"},
        {"snapshot_stride", 100},
        {"density_points_1d", 512},
        {"density_points_2d", 128},
        {"densities", true}}},
  };
}

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    // The byte offset is all the parser reports; turn it into a line number.
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
  }
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const json j = parse_config_text(buf.str(), path.string());
  if (!j.is_object() || j.empty()) throw ConfigError(path.string() + ": config must be a non-empty JSON object");
  return j;
}

json resolve_config(const json& user, const std::string& preset_name) {
  if (!user.is_null() && !user.is_object()) throw ConfigError("config must be a JSON object");
  json doc = default_config();
  if (!preset_name.empty()) doc.merge_patch(preset(preset_name));
  if (!user.is_null()) doc.merge_patch(user);
  return doc;
}

RunConfig parse_config(const json& resolved) {
  RunConfig c;
  c.resolved = resolved;
  Obj root(resolved, "");

  {
    Obj m = root.object("model");
    c.model_name = m.string("name");
    Obj params = m.object("params");
    for (const auto& [key, value] : m.at("params").items()) {
      c.model_params[key] = params.number(key);
    }
    params.finish();
    m.finish();
  }
  {
    Obj d = root.object("discretization");
    c.modes_per_axis = d.positive_integer("modes_per_axis");
    c.quad_points = d.positive_integer("quadrature_points");
    const std::string kind = d.string("quadrature");
    if (kind == "gauss_legendre") {
      c.quadrature = QuadratureKind::gauss_legendre;
    } else if (kind == "uniform") {
      c.quadrature = QuadratureKind::uniform;
    } else {
      fail(d.child("quadrature"), "expected gauss_legendre or uniform");
    }
    c.beta_inv = d.positive("beta_inv");
    c.cache_dir = d.string("cache_dir");
    d.finish();
  }
  {
    Obj d = root.object("deflation");
    c.deflation.power = d.positive("power");
    c.deflation.shift = d.number("shift");
    if (c.deflation.shift < 0.0) fail(d.child("shift"), "must be non-negative");
    c.deflation.max_roots = d.positive_integer("max_roots");
    c.deflation.divergence_cap = d.positive("divergence_cap");
    const json& seed = d.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      fail(d.child("seed"), "expected a non-negative integer");
    }
    c.seed = seed.get<std::uint64_t>();
    const json& guesses = d.array("guesses");
    if (guesses.empty()) fail(d.child("guesses"), "needs at least one initial guess");
    for (std::size_t i = 0; i < guesses.size(); ++i) {
      c.guesses.push_back(parse_guess(guesses[i], d.child("guesses") + "[" + std::to_string(i) + "]"));
    }
    d.finish();
  }
  {
    Obj n = root.object("newton");
    c.newton.step_tol = n.positive("step_tol");
    c.newton.accept_tol = n.positive("accept_tol");
    c.newton.max_iter = n.positive_integer("max_iter");
    n.finish();
  }
  {
    Obj f = root.object("filter");
    c.filter.mesh_points = f.positive_integer("mesh_points");
    c.filter.positivity_tol = f.number("positivity_tol");
    c.filter.dedup_tol = f.positive("dedup_tol");
    c.filter.translation_tol = f.positive("translation_tol");
    f.finish();
  }
  {
    Obj s = root.object("stability");
    c.stability.energy_tol = s.positive("energy_tol");
    c.stability.dynamic_check = s.boolean("dynamic_check");
    c.stability.perturbation = s.positive("perturbation");
    c.stability.horizon = s.positive("horizon");
    c.stability.dt = s.positive("dt");
    c.stability.decisive_factor = s.positive("decisive_factor");
    if (!(c.stability.decisive_factor > 1.0)) fail(s.child("decisive_factor"), "must exceed 1");
    s.finish();
  }
  {
    Obj o = root.object("order_parameters");
    c.lss.grid_points = o.positive_integer("grid_points");
    c.lss.log_floor = o.positive("log_floor");
    o.finish();
  }
  if (root.find("sweep") != nullptr) {
    Obj s = root.object("sweep");
    SweepSpec sw;
    sw.parameter = s.string("parameter");
    if (sw.parameter != "beta_inv" && sw.parameter.rfind("model.", 0) != 0) {
      fail(s.child("parameter"), "expected beta_inv or model.<name>");
    }
    for (const auto& v : s.array("values")) {
      if (!v.is_number()) fail(s.child("values"), "expected numbers");
      sw.values.push_back(v.get<double>());
    }
    if (sw.values.empty()) fail(s.child("values"), "needs at least one value");
    s.finish();
    c.sweep = std::move(sw);
  }
  {
    Obj e = root.object("evolve");
    c.evolve.t_end = e.positive("t_end");
    c.evolve.dt = e.positive("dt");
    c.evolve.initial = parse_state(e.object("initial"));
    if (e.find("reference") != nullptr) {
      c.evolve.reference = parse_target(e.object("reference"));
      c.evolve.has_reference = true;
    }
    e.finish();
  }
  {
    Obj k = root.object("control");
    c.control.target = parse_target(k.object("target"));
    c.control.initial = parse_state(k.object("initial"));
    OCPConfig& ocp = c.control.ocp;
    ocp.gamma = k.positive("gamma");
    ocp.eta = k.number("eta");
    if (ocp.eta < 0.0) fail(k.child("eta"), "must be non-negative");
    ocp.delta = k.positive("delta");
    ocp.tol_u = k.positive("tol_u");
    ocp.max_iter = k.positive_integer("max_iter");
    ocp.max_backtracks = k.integer("max_backtracks");
    if (ocp.max_backtracks < 0) fail(k.child("max_backtracks"), "must be non-negative");
    ocp.dt = k.positive("dt");
    ocp.smoothing = k.number("smoothing");
    if (ocp.smoothing < 0.0) fail(k.child("smoothing"), "must be non-negative");
    MPCConfig& mpc = c.control.mpc;
    mpc.window = k.positive("window");
    ocp.horizon = mpc.window;
    mpc.span = k.positive("span");
    mpc.n_steps = k.positive_integer("n_steps");
    mpc.warm_start = k.boolean("warm_start");
    if (!(mpc.window < mpc.span)) fail(k.child("window"), "must be shorter than control.span");
    c.control.compare_uncontrolled = k.boolean("compare_uncontrolled");
    k.finish();
  }
  {
    Obj v = root.object("verify");
    c.verify.refinement = v.positive_integer("refinement");
    c.verify.residual_tol = v.positive("residual_tol");
    c.verify.kirkwood_monroe_tol = v.positive("kirkwood_monroe_tol");
    c.verify.self_consistency_tol = v.positive("self_consistency_tol");
    v.finish();
  }
  {
    Obj o = root.object("output");
    c.output.directory = o.string("directory");
    c.output.snapshot_stride = o.positive_integer("snapshot_stride");
    c.output.density_points_1d = o.positive_integer("density_points_1d");
    c.output.density_points_2d = o.positive_integer("density_points_2d");
    c.output.densities = o.boolean("densities");
    o.finish();
  }
  root.finish();
  return c;
}

RunConfig apply_sweep_value(const RunConfig& config, double value) {
  if (!config.sweep) throw InputError("config has no sweep");
  RunConfig out = config;
  const std::string& p = config.sweep->parameter;
  if (p == "beta_inv") {
    if (!(value > 0.0)) throw ConfigError("config field 'sweep.values': beta_inv values must be positive");
    out.beta_inv = value;
    out.resolved["discretization"]["beta_inv"] = value;
  } else {
    const std::string name = p.substr(6);
    out.model_params[name] = value;
    out.resolved["model"]["params"][name] = value;
  }
  out.sweep.reset();
  out.resolved.erase("sweep");
  return out;
}

}  // namespace mvsteady
