#include "thermap/electrothermal.hpp"

#include <cmath>
#include <sstream>

#include "thermap/error.hpp"

namespace thermap {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

double DvfsTable::cpu_volt(double freq_ghz) const {
  for (const auto& op : cpu)
    if (std::abs(op.freq_ghz - freq_ghz) < 1e-9) return op.volt_v;
  std::ostringstream os;
  os << "CPU frequency " << freq_ghz << " GHz is not in the DVFS table";
  invalid(os.str());
}

void DvfsTable::validate() const {
  if (cpu.empty()) invalid("DVFS table has no CPU operating points");
  for (const auto& op : cpu)
    if (!(op.freq_ghz > 0) || !(op.volt_v > 0)) invalid("DVFS table entries must be positive");
  if (!(gpu.freq_ghz > 0) || !(gpu.volt_v > 0)) invalid("GPU operating point must be positive");
  if (!(uncore.freq_ghz > 0) || !(uncore.volt_v > 0)) invalid("uncore operating point must be positive");
  if (!(ref_cpu_freq_ghz > 0) || !(ref_gpu_freq_ghz > 0)) invalid("reference frequencies must be positive");
}

DvfsState dvfs_state(const DvfsTable& table, double cpu_freq_ghz) {
  return {cpu_freq_ghz, table.cpu_volt(cpu_freq_ghz), table.gpu.freq_ghz};
}

double WorkloadProfile::activity_of(DeviceClass c) const {
  if (const auto& a = activity[class_index(c)]) return *a;
  if (c == DeviceClass::GpuAux) return activity_of(DeviceClass::GpuSimd);
  return 0.0;
}

void WorkloadProfile::validate() const {
  const std::string who = "workload '" + name + "': ";
  if (name.empty()) invalid("workload with empty name");
  if (!in_unit(cpu_load)) invalid(who + "cpu_load must lie in [0, 1]");
  if (!in_unit(parallel_fraction)) invalid(who + "parallel_fraction must lie in [0, 1]");
  if (!(divergence_penalty >= 1)) invalid(who + "divergence_penalty must be >= 1");
  if (!(speedup_gpu > 0)) invalid(who + "speedup_gpu must be positive");
  if (!(base_work >= 0)) invalid(who + "base_work must be non-negative");
  for (const auto& a : activity)
    if (a && !in_unit(*a)) invalid(who + "activity factors must lie in [0, 1]");
}

double leakage_power(const LeakageModel& m, double t_celsius) {
  return m.p0 * std::exp2((t_celsius - m.t0) / m.doubling_interval);
}

std::vector<LeakageModel> leakage_models(const Floorplan& fp, const LeakageConfig& cfg) {
  if (!(cfg.doubling_interval_k > 0)) invalid("leakage doubling interval must be positive");
  std::vector<LeakageModel> out;
  out.reserve(fp.size());
  for (const auto& b : fp.blocks()) {
    const double density = cfg.density_w_per_mm2[class_index(b.device_class)];
    if (!(density >= 0)) invalid("leakage density for '" + b.name + "' must be non-negative");
    out.push_back({density * b.rect.area() * 1e6, cfg.reference_temp_c, cfg.doubling_interval_k});
  }
  return out;
}

void FixedPointOptions::validate() const {
  if (!(damping > 0 && damping <= 1)) invalid("fixed point damping must lie in (0, 1]");
  if (!(tol > 0)) invalid("fixed point tolerance must be positive");
  if (max_iter < 1) invalid("fixed point needs at least one iteration");
}

std::string_view to_string(Device d) { return d == Device::Cpu ? "CPU" : "CPU-GPU"; }

void validate_decision(const ScheduleDecision& d, const Floorplan& fp) {
  if (d.host_core >= fp.size() || !fp[d.host_core].host_capable)
    invalid("host core index " + std::to_string(d.host_core) + " is not a host-capable block");
}

PowerMap dynamic_power(const WorkloadProfile& w, const ScheduleDecision& d, const Floorplan& fp,
                       const Calibration& cal) {
  validate_decision(d, fp);
  const OperatingPoint cpu{d.dvfs.cpu_freq_ghz, d.dvfs.cpu_volt_v};
  const OperatingPoint gpu{d.dvfs.gpu_freq_ghz, cal.dvfs.gpu.volt_v};

  auto block_power = [&](std::size_t i, const OperatingPoint& op) {
    const DeviceClass c = fp[i].device_class;
    const auto& cap = cal.capacitance[class_index(c)];
    if (!cap) invalid("no capacitance constant for activated class " + std::string(to_string(c)));
    return w.activity_of(c) * *cap * op.fv2();
  };

  PowerMap p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fp.size())), Provenance::Synthetic};
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    switch (fp[i].device_class) {
      case DeviceClass::CpuCore:
        if (d.device == Device::Cpu)
          p.values[idx] = block_power(i, cpu);
        else if (i == d.host_core)
          p.values[idx] = w.cpu_load * block_power(i, cpu);
        break;
      case DeviceClass::L2Cache:
        if (d.device == Device::Cpu) p.values[idx] = block_power(i, cpu);
        break;
      case DeviceClass::Unb:
        p.values[idx] = block_power(i, cal.dvfs.uncore);
        break;
      case DeviceClass::GpuSimd:
      case DeviceClass::GpuAux:
      case DeviceClass::Gmc:
        if (d.device == Device::Gpu) p.values[idx] = block_power(i, gpu);
        break;
      case DeviceClass::Other:
        break;
    }
  }
  return p;
}

CoupledState fixed_point(const ResponseMatrix& R, const PowerMap& p_dyn, std::span<const LeakageModel> leak,
                         double inlet, const FixedPointOptions& opts, const std::optional<Eigen::VectorXd>& initial) {
  opts.validate();
  const Eigen::Index n = R.size();
  check_power_map(p_dyn, n, "fixed_point");
  check_dimension(n, static_cast<Eigen::Index>(leak.size()), "fixed_point (leakage models)");

  auto leakage = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd l(n);
    for (Eigen::Index i = 0; i < n; ++i) l[i] = leakage_power(leak[static_cast<std::size_t>(i)], t[i]);
    return l;
  };
  auto runaway = [&](const std::string& why) {
    throw Error(ErrorKind::Runaway, "electro-thermal fixed point: " + why);
  };

  Eigen::VectorXd t;
  if (initial) {
    check_dimension(n, initial->size(), "fixed_point (initial guess)");
    t = *initial;
  } else {
    t = (R.matrix * p_dyn.values).array() + inlet;
  }

  int it = 0;
  bool converged = false;
  while (it < opts.max_iter) {
    ++it;
    const Eigen::VectorXd target = (R.matrix * (p_dyn.values + leakage(t))).array() + inlet;
    if (!target.allFinite()) runaway("temperature became non-finite");
    const double step = (target - t).lpNorm<Eigen::Infinity>();
    t = (1.0 - opts.damping) * t + opts.damping * target;
    if (t.maxCoeff() > opts.hard_cap_c) {
      std::ostringstream os;
      os << "block temperature " << t.maxCoeff() << " degC exceeds the " << opts.hard_cap_c << " degC cap";
      runaway(os.str());
    }
    if (step <= opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) runaway("no convergence within " + std::to_string(opts.max_iter) + " iterations");

  CoupledState out;
  out.t = {t, TemperatureKind::Celsius, Provenance::Forward};
  out.p = {p_dyn.values + leakage(t), Provenance::Forward};
  out.iterations = it;
  return out;
}

double runtime_model(const WorkloadProfile& w, const ScheduleDecision& d, const DvfsTable& dvfs) {
  const double cpu_scale = dvfs.ref_cpu_freq_ghz / d.dvfs.cpu_freq_ghz;
  if (d.device == Device::Cpu)
    return w.base_work * ((1.0 - w.parallel_fraction) + w.parallel_fraction / 4.0) * cpu_scale;
  const double gpu_scale = dvfs.ref_gpu_freq_ghz / d.dvfs.gpu_freq_ghz;
  return w.base_work *
         (w.cpu_load * cpu_scale + (1.0 - w.cpu_load) * w.divergence_penalty * gpu_scale / w.speedup_gpu);
}

double energy(double runtime_s, double total_power_w) {
  if (!(runtime_s >= 0) || !(total_power_w >= 0))
    throw Error(ErrorKind::Input, "energy: runtime and power must be non-negative");
  return runtime_s * total_power_w;
}

}  // namespace thermap
