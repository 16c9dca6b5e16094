#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "thermap/floorplan.hpp"
#include "thermap/maps.hpp"
#include "thermap/thermal.hpp"

namespace thermap {

struct OperatingPoint {
  double freq_ghz;
  double volt_v;

  double fv2() const { return freq_ghz * volt_v * volt_v; }
};

/// Frequency/voltage configuration. CPU cores and L2 follow the CPU table,
/// the GPU array and GMC run at the fixed GPU point, the UNB at the uncore point.
struct DvfsTable {
  std::vector<OperatingPoint> cpu{{1.4, 0.9}, {3.0, 1.2}};
  OperatingPoint gpu{0.8, 1.0};
  OperatingPoint uncore{1.0, 1.0};
  double ref_cpu_freq_ghz = 3.0;  ///< frequency at which base_work is measured
  double ref_gpu_freq_ghz = 0.8;

  /// Throws Error(Validation) when `freq_ghz` is not a table entry.
  double cpu_volt(double freq_ghz) const;
  void validate() const;
};

struct DvfsState {
  double cpu_freq_ghz = 0;
  double cpu_volt_v = 0;
  double gpu_freq_ghz = 0;

  friend bool operator==(const DvfsState&, const DvfsState&) = default;
};

DvfsState dvfs_state(const DvfsTable& table, double cpu_freq_ghz);

inline constexpr std::size_t kDeviceClassCount = 7;
using ClassArray = std::array<double, kDeviceClassCount>;
using OptionalClassArray = std::array<std::optional<double>, kDeviceClassCount>;

inline std::size_t class_index(DeviceClass c) { return static_cast<std::size_t>(c); }

struct WorkloadProfile {
  std::string name;
  double cpu_load = 0;            ///< share of runtime on the CPU host when launched on GPU
  double divergence_penalty = 1;  ///< GPU slowdown from irregular control flow, >= 1
  double parallel_fraction = 1;   ///< Amdahl fraction for the 4-core CPU path
  double base_work = 1;           ///< seconds at the reference frequencies
  double speedup_gpu = 1;         ///< GPU throughput relative to one CPU core at reference clocks
  OptionalClassArray activity{};  ///< switching activity per device class, in [0, 1]

  /// Activity of class c; GpuAux falls back to GpuSimd, anything unset is 0.
  double activity_of(DeviceClass c) const;
  void validate() const;
};

/// Exponential leakage: p0 * 2^((t - t0) / doubling_interval).
struct LeakageModel {
  double p0 = 0;                   // W at t0
  double t0 = 50;                  // degC
  double doubling_interval = 25;   // K
};

double leakage_power(const LeakageModel& model, double t_celsius);

/// Per-class leakage density at a common reference temperature.
struct LeakageConfig {
  double reference_temp_c = 50;
  double doubling_interval_k = 25;
  ClassArray density_w_per_mm2{};
};

std::vector<LeakageModel> leakage_models(const Floorplan& fp, const LeakageConfig& cfg);

struct FixedPointOptions {
  double damping = 0.5;
  double tol = 0.01;  // K
  int max_iter = 100;
  double hard_cap_c = 150;

  void validate() const;
};

/// Electrical calibration shared by every workload.
struct Calibration {
  DvfsTable dvfs;
  OptionalClassArray capacitance{};  ///< effective switched capacitance, W / (GHz V^2)
  LeakageConfig leakage;
  FixedPointOptions fixed_point;
  double affinity_freq_ghz = 3.0;    ///< CPU DVFS point used by affinity sweeps
};

enum class Device { Cpu, Gpu };

std::string_view to_string(Device d);

struct ScheduleDecision {
  Device device = Device::Cpu;
  std::size_t host_core = 0;  ///< block index; runs the serial part when device == Gpu
  DvfsState dvfs;

  friend bool operator==(const ScheduleDecision&, const ScheduleDecision&) = default;
};

/// Throws Error(Validation) when host_core is not a host-capable block.
void validate_decision(const ScheduleDecision& d, const Floorplan& fp);

/// activity * capacitance * f * V^2 per block. Cpu activates every core, the
/// L2s and the UNB. Gpu activates SIMD, auxiliary units, GMC, UNB and the host
/// core at cpu_load of its CPU-path power; the other cores only leak.
PowerMap dynamic_power(const WorkloadProfile& w, const ScheduleDecision& d, const Floorplan& fp,
                       const Calibration& cal);

struct CoupledState {
  ThermalMap t;  // degC
  PowerMap p;    // dynamic + leakage, W
  int iterations = 0;
};

/// Damped Picard iteration on t = inlet + R (p_dyn + leak(t)):
///   t_{k+1} = (1 - damping) t_k + damping (inlet + R (p_dyn + leak(t_k))).
/// Stops once the undamped update moves no block by more than tol (which
/// bounds the damped step as well). Starts from inlet + R p_dyn unless an
/// initial guess is given. Throws Error(Runaway) past max_iter or hard_cap_c.
CoupledState fixed_point(const ResponseMatrix& R, const PowerMap& p_dyn, std::span<const LeakageModel> leak,
                         double inlet, const FixedPointOptions& opts = {},
                         const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Seconds. CPU path: Amdahl over 4 cores scaled by f_ref / f. GPU path: the
/// host share scales with the CPU clock, the kernel share with the GPU clock,
/// divergence penalty and GPU speedup.
double runtime_model(const WorkloadProfile& w, const ScheduleDecision& d, const DvfsTable& dvfs);

/// Joules.
double energy(double runtime_s, double total_power_w);

}  // namespace thermap
