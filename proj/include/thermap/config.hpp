#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermap/electrothermal.hpp"
#include "thermap/floorplan.hpp"
#include "thermap/thermal.hpp"

namespace thermap {

/// Parsed run configuration. Relative paths are resolved against the
/// directory of the config file. An empty floorplan path selects the
/// built-in APU floorplan.
struct RunConfig {
  std::filesystem::path floorplan;
  std::filesystem::path workloads;
  std::filesystem::path calibration;
  std::filesystem::path output_dir;
  std::filesystem::path cache;  ///< response matrix cache, default output_dir/response_matrix.txt
  BoundaryConditions boundary;
  int nx = 64, ny = 64;
  std::vector<double> cpu_freqs_ghz{1.4, 3.0};
  std::uint64_t seed = 20240521;
  double noise_sigma_k = 0.1;
  unsigned threads = 0;
};

/// Parses "NxN" (e.g. "64x64"). Throws Error(Input) on anything else.
std::pair<int, int> parse_resolution(std::string_view s);

/// Throws Error(Parse) for malformed JSON or unknown keys, Error(Input) for
/// missing referenced files.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Defaults pointing at the shipped data directory.
RunConfig default_run_config(const std::filesystem::path& data_dir);

std::vector<WorkloadProfile> parse_workloads(std::string_view text);
Calibration parse_calibration(std::string_view text);

Floorplan load_floorplan(const RunConfig& cfg);
std::vector<WorkloadProfile> load_workloads(const RunConfig& cfg);
Calibration load_calibration(const RunConfig& cfg);

struct ModelBuild {
  ResponseMatrix R;
  bool cache_hit = false;
  std::string cache_note;  ///< why an existing cache was rejected, empty otherwise
};

/// Response matrix for cfg's grid: reused from cfg.cache when its metadata
/// matches, otherwise rebuilt and written back.
ModelBuild obtain_response_matrix(const Floorplan& fp, const RunConfig& cfg);

const WorkloadProfile* find_workload(const std::vector<WorkloadProfile>& ws, std::string_view name);

}  // namespace thermap
