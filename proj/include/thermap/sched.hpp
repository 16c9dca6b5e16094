#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermap/electrothermal.hpp"
#include "thermap/floorplan.hpp"
#include "thermap/maps.hpp"
#include "thermap/thermal.hpp"

namespace thermap {

enum class Objective { MinPower, MinPeakTemp, MinRuntime, MinEnergy };

std::string_view to_string(Objective o);
/// Accepts the CLI spellings: power, temp, runtime, energy.
std::optional<Objective> objective_from_string(std::string_view s);

struct EvalResult {
  ScheduleDecision decision;
  double runtime = 0;      // s
  double total_power = 0;  // W, converged and leakage-inclusive
  double energy = 0;       // J
  double peak_temp = 0;    // degC
  std::string hotspot_block;
  PowerMap power_breakdown;
  ThermalMap temperatures;  // degC per block
  int fixed_point_iterations = 0;
};

double objective_value(const EvalResult& r, Objective o);

/// Everything evaluate() needs besides the workload: geometry, the thermal
/// model, the electrical calibration and per-block leakage derived from it.
struct ModelContext {
  Floorplan floorplan;
  ResponseMatrix R;
  Calibration calibration;
  double inlet = 12.1;  // degC
  std::vector<LeakageModel> leakage;

  /// Derives the leakage models and checks that R matches the floorplan.
  ModelContext(Floorplan fp, ResponseMatrix r, Calibration cal, double inlet_c);
};

struct DecisionSpace {
  std::vector<double> cpu_freqs_ghz{1.4, 3.0};
  bool include_cpu = true;
  bool include_gpu = true;
  /// When false, GPU decisions use only the canonical (first host-capable) core.
  bool host_affinity = true;
};

/// Device outer, then CPU frequency ascending, then host core ascending. CPU
/// decisions carry the canonical core.
std::vector<ScheduleDecision> enumerate_decisions(const DecisionSpace& space, const Floorplan& fp,
                                                  const DvfsTable& dvfs);

/// Total order used for tie-breaking: CPU before GPU, lower frequency, lower core.
bool decision_before(const ScheduleDecision& a, const ScheduleDecision& b);

std::string describe(const ScheduleDecision& d, const Floorplan& fp);

/// dynamic_power -> fixed_point -> runtime_model -> energy. Throws
/// Error(Runaway) when the coupled solve diverges.
EvalResult evaluate(const WorkloadProfile& w, const ScheduleDecision& d, const ModelContext& ctx);

/// One entry per decision, in input order. Failures are captured, not thrown.
struct EvalOutcome {
  ScheduleDecision decision;
  std::optional<EvalResult> result;
  std::optional<Error> error;
};

/// Evaluates independent decisions on up to `threads` workers (0 = hardware
/// concurrency). Output order and content do not depend on the thread count.
std::vector<EvalOutcome> evaluate_all(const WorkloadProfile& w, const std::vector<ScheduleDecision>& decisions,
                                      const ModelContext& ctx, unsigned threads = 0);

/// Stable sort by objective value; ties fall back to decision_before().
/// Throws Error(Input) on an empty list.
std::vector<EvalResult> rank(std::vector<EvalResult> results, Objective obj);

/// GPU launch from each listed host core at the calibration's affinity
/// frequency, in list order. Throws Error(Validation) for a core that cannot host.
std::vector<EvalResult> affinity_sweep(const WorkloadProfile& w, const std::vector<std::size_t>& cores,
                                       const ModelContext& ctx);

struct SummaryCell {
  std::optional<ScheduleDecision> winner;
  std::string error;  ///< set when the cell failed
};

struct SummaryTable {
  std::vector<std::string> workloads;
  std::vector<Objective> objectives;
  std::vector<std::vector<SummaryCell>> cells;  ///< [workload][objective]
};

/// Winning decision for each workload and objective. A workload whose
/// decisions fail to evaluate has every cell marked failed.
SummaryTable summary_table(const std::vector<WorkloadProfile>& workloads, const std::vector<Objective>& objectives,
                           const ModelContext& ctx, const DecisionSpace& space = {}, unsigned threads = 0);

}  // namespace thermap
