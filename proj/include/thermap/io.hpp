#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thermap/floorplan.hpp"
#include "thermap/maps.hpp"
#include "thermap/sched.hpp"
#include "thermap/thermal.hpp"

namespace thermap {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// CSV. Every file starts with a header row carrying units.

/// block,temperature_c
void write_thermal_csv(std::ostream& os, const Floorplan& fp, const ThermalMap& t_celsius);
/// Reads block,temperature_c rows keyed by block name, returned in floorplan
/// order. Throws Error(Dimension) when the row count differs from the
/// floorplan, Error(Parse) for malformed rows or unknown/duplicate blocks.
ThermalMap read_thermal_csv(std::istream& is, const Floorplan& fp);

/// block,power_w,share_pct
void write_power_csv(std::ostream& os, const Floorplan& fp, const PowerMap& p);

/// One row per result: decision, runtime, power, energy, peak, hotspot, then
/// per-block power (W) and temperature (degC) columns.
void write_eval_csv(std::ostream& os, const Floorplan& fp, const std::string& workload,
                    const std::vector<EvalResult>& results, bool header = true);

/// workload,objective,device,cpu_freq_ghz,host_core,status
void write_summary_csv(std::ostream& os, const Floorplan& fp, const SummaryTable& t);
/// Aligned text grid, one row per workload, one column per objective.
std::string format_summary_text(const SummaryTable& t);

// Response matrix cache: a text header with the grid hash, resolution and
// block order, then one row of R per line.

void save_response_matrix(const std::filesystem::path& path, const ResponseMatrix& R);

struct CacheLookup {
  std::optional<ResponseMatrix> matrix;
  std::string reason;  ///< why the cache was not usable
};

/// Loads a cache only if its header matches `expected_key`, the resolution
/// and the block names; otherwise returns the mismatch reason.
CacheLookup load_response_matrix(const std::filesystem::path& path, std::uint64_t expected_key, int nx, int ny,
                                 const std::vector<std::string>& block_names);

// Heatmaps.

inline constexpr double kHeatmapMaxC = 100.0;

/// Block temperature per raster cell (row-major, y up), `background` outside blocks.
Eigen::VectorXd rasterize_blocks(const Floorplan& fp, int nx, int ny, const Eigen::VectorXd& block_values,
                                 double background);

/// Binary 8-bit PGM (P5), top row first, grey level linear from lo (black) to hi (white).
void write_pgm(std::ostream& os, int nx, int ny, const Eigen::VectorXd& cells, double lo, double hi);

}  // namespace thermap
