#pragma once

#include "mvsteady/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace mvsteady {

inline constexpr int kSchemaVersion = 1;

/// %.17g: enough digits for an exact double round trip.
std::string format_double(double x);

/// Minimal CSV writer: one header line, numeric rows in %.17g.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter();

  void row(const std::vector<double>& values);
  void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

 private:
  std::FILE* file_ = nullptr;
  std::size_t columns_ = 0;
};

/// Writes x[,y],rho on a uniform grid with `points_per_axis` nodes per axis.
void write_density_csv(const std::filesystem::path& path, const Vector& coeffs, const SpectralBasis& basis,
                       int points_per_axis);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json state_to_json(const SteadyState& s, std::optional<double> kirkwood_monroe);
SteadyState state_from_json(const nlohmann::json& j);

/// Full steadystates.json document; `density_files` holds one name per state
/// across all runs (empty strings when densities were not written).
nlohmann::json steady_states_document(const RunConfig& config, const std::vector<SteadyStateRun>& runs,
                                      const std::vector<std::string>& density_files);

struct StoredRun {
  std::optional<double> sweep_value;
  std::vector<SteadyState> states;
  std::vector<SteadyState> rejected;
};

struct StoredSteadyStates {
  nlohmann::json config;
  std::vector<StoredRun> runs;
};

/// Reads a steadystates.json written by `steady_states_document`.
StoredSteadyStates read_steady_states(const std::filesystem::path& path);

}  // namespace mvsteady
