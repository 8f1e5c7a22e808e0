#include "mvsteady/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mvsteady {

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : file_(std::fopen(path.string().c_str(), "w")), columns_(header.size()) {
  if (file_ == nullptr) throw InputError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(file_, "%s%s", i ? "," : "", header[i].c_str());
  std::fputc('\n', file_);
}

CsvWriter::~CsvWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw InputError("CSV row has the wrong number of columns");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::fprintf(file_, "%s%s", i ? "," : "", format_double(values[i]).c_str());
  }
  std::fputc('\n', file_);
}

void write_density_csv(const std::filesystem::path& path, const Vector& coeffs, const SpectralBasis& basis,
                       int points_per_axis) {
  const Vector rho = density_on_uniform_grid(coeffs, basis, points_per_axis);
  const auto grid = uniform_grid(basis.domain(), points_per_axis);
  if (basis.dimension() == 1) {
    CsvWriter csv(path, {"x", "rho"});
    for (Index i = 0; i < rho.size(); ++i) csv.row({grid[static_cast<std::size_t>(i)][0], rho[i]});
  } else {
    CsvWriter csv(path, {"x", "y", "rho"});
    for (Index i = 0; i < rho.size(); ++i) {
      const Point& p = grid[static_cast<std::size_t>(i)];
      csv.row({p[0], p[1], rho[i]});
    }
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

json state_to_json(const SteadyState& s, std::optional<double> kirkwood_monroe) {
  json j;
  j["coefficients"] = std::vector<double>(s.coeffs.data(), s.coeffs.data() + s.coeffs.size());
  j["residual_norm"] = s.residual_norm;
  j["kirkwood_monroe_residual"] = kirkwood_monroe ? json(*kirkwood_monroe) : json(nullptr);
  j["free_energy"] = std::isfinite(s.free_energy) ? json(s.free_energy) : json(nullptr);
  j["stability"] = to_string(s.stability);
  j["positive"] = s.positive;
  j["min_density"] = s.min_density;
  if (s.order_params) {
    j["order_parameters"] = {{"m1", s.order_params->m1}, {"m2", s.order_params->m2}, {"log_z", s.order_params->log_z}};
  } else {
    j["order_parameters"] = nullptr;
  }
  j["translate_of"] = s.translate_of ? json(*s.translate_of) : json(nullptr);
  j["shift"] = {s.shift[0], s.shift[1]};
  j["chain"] = s.chain;
  j["depth"] = s.depth;
  return j;
}

SteadyState state_from_json(const json& j) {
  SteadyState s;
  try {
    const auto c = j.at("coefficients").get<std::vector<double>>();
    s.coeffs = Eigen::Map<const Vector>(c.data(), static_cast<Index>(c.size()));
    s.residual_norm = j.at("residual_norm").get<double>();
    s.free_energy = j.at("free_energy").is_null() ? std::nan("") : j.at("free_energy").get<double>();
    const std::string st = j.at("stability").get<std::string>();
    s.stability = st == "stable" ? Stability::stable : st == "unstable" ? Stability::unstable : Stability::unknown;
    s.positive = j.at("positive").get<bool>();
    s.min_density = j.at("min_density").get<double>();
    if (!j.at("order_parameters").is_null()) {
      const auto& o = j.at("order_parameters");
      s.order_params = OrderParameter{o.at("m1").get<double>(), o.at("m2").get<double>(), o.at("log_z").get<double>()};
    }
    if (!j.at("translate_of").is_null()) s.translate_of = j.at("translate_of").get<Index>();
    s.shift = Point(j.at("shift").at(0).get<double>(), j.at("shift").at(1).get<double>());
    s.chain = j.at("chain").get<int>();
    s.depth = j.at("depth").get<int>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed steady state record: ") + e.what());
  }
  return s;
}

json steady_states_document(const RunConfig& config, const std::vector<SteadyStateRun>& runs,
                            const std::vector<std::string>& density_files) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = config.resolved;
  json jruns = json::array();
  std::size_t file_idx = 0;
  for (const auto& run : runs) {
    json r;
    r["sweep_value"] = run.sweep_value ? json(*run.sweep_value) : json(nullptr);
    r["beta_inv"] = run.config.beta_inv;
    r["model_params"] = run.config.model_params;
    r["newton_solves"] = run.set.newton_solves;
    r["chain_stop_reasons"] = run.set.chain_stop_reasons;
    json states = json::array();
    for (std::size_t i = 0; i < run.set.states.size(); ++i) {
      json s = state_to_json(run.set.states[i], run.kirkwood_monroe.at(i));
      s["index"] = i;
      s["density_file"] = file_idx < density_files.size() ? density_files[file_idx] : "";
      ++file_idx;
      states.push_back(std::move(s));
    }
    r["states"] = std::move(states);
    json rejected = json::array();
    for (const auto& s : run.set.rejected) rejected.push_back(state_to_json(s, std::nullopt));
    r["rejected"] = std::move(rejected);
    jruns.push_back(std::move(r));
  }
  doc["runs"] = std::move(jruns);
  return doc;
}

StoredSteadyStates read_steady_states(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open steady-state file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("schema_version", -1) != kSchemaVersion) {
    throw InputError(path.string() + ": not a steady-state file of schema version " + std::to_string(kSchemaVersion));
  }
  StoredSteadyStates out;
  try {
    out.config = doc.at("config");
    for (const auto& r : doc.at("runs")) {
      StoredRun run;
      if (!r.at("sweep_value").is_null()) run.sweep_value = r.at("sweep_value").get<double>();
      for (const auto& s : r.at("states")) run.states.push_back(state_from_json(s));
      for (const auto& s : r.at("rejected")) run.rejected.push_back(state_from_json(s));
      out.runs.push_back(std::move(run));
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace mvsteady
