#include "thermap/sched.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>
#include <tuple>

#include "thermap/error.hpp"

namespace thermap {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::MinPower: return "min_power";
    case Objective::MinPeakTemp: return "min_peak_temp";
    case Objective::MinRuntime: return "min_runtime";
    case Objective::MinEnergy: return "min_energy";
  }
  return "unknown";
}

std::optional<Objective> objective_from_string(std::string_view s) {
  if (s == "power") return Objective::MinPower;
  if (s == "temp") return Objective::MinPeakTemp;
  if (s == "runtime") return Objective::MinRuntime;
  if (s == "energy") return Objective::MinEnergy;
  return std::nullopt;
}

double objective_value(const EvalResult& r, Objective o) {
  switch (o) {
    case Objective::MinPower: return r.total_power;
    case Objective::MinPeakTemp: return r.peak_temp;
    case Objective::MinRuntime: return r.runtime;
    case Objective::MinEnergy: return r.energy;
  }
  return 0;
}

ModelContext::ModelContext(Floorplan fp, ResponseMatrix r, Calibration cal, double inlet_c)
    : floorplan(std::move(fp)), R(std::move(r)), calibration(std::move(cal)), inlet(inlet_c) {
  check_dimension(static_cast<Eigen::Index>(floorplan.size()), R.size(), "model context (response matrix)");
  if (!R.block_names.empty() && R.block_names != floorplan.block_names())
    throw Error(ErrorKind::Validation, "model context: response matrix blocks do not match the floorplan");
  calibration.dvfs.validate();
  leakage = leakage_models(floorplan, calibration.leakage);
}

std::vector<ScheduleDecision> enumerate_decisions(const DecisionSpace& space, const Floorplan& fp,
                                                  const DvfsTable& dvfs) {
  if (space.cpu_freqs_ghz.empty()) throw Error(ErrorKind::Validation, "decision space has no CPU frequencies");
  std::vector<double> freqs = space.cpu_freqs_ghz;
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());

  const auto hosts = fp.host_capable_indices();
  const std::size_t canonical = hosts.front();

  std::vector<ScheduleDecision> out;
  if (space.include_cpu)
    for (double f : freqs) out.push_back({Device::Cpu, canonical, dvfs_state(dvfs, f)});
  if (space.include_gpu)
    for (double f : freqs) {
      if (space.host_affinity)
        for (std::size_t h : hosts) out.push_back({Device::Gpu, h, dvfs_state(dvfs, f)});
      else
        out.push_back({Device::Gpu, canonical, dvfs_state(dvfs, f)});
    }
  return out;
}

bool decision_before(const ScheduleDecision& a, const ScheduleDecision& b) {
  return std::tuple(static_cast<int>(a.device), a.dvfs.cpu_freq_ghz, a.host_core) <
         std::tuple(static_cast<int>(b.device), b.dvfs.cpu_freq_ghz, b.host_core);
}

std::string describe(const ScheduleDecision& d, const Floorplan& fp) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f GHz, ", d.dvfs.cpu_freq_ghz);
  std::string s = buf + std::string(to_string(d.device));
  if (d.device == Device::Gpu && d.host_core < fp.size()) s += " @" + fp[d.host_core].name;
  return s;
}

namespace {

// Sum of the sorted entries: equal multisets of block powers give bit-equal
// totals wherever the host core sits in the vector.
double order_free_total(const Eigen::VectorXd& v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0;
  for (double x : sorted) sum += x;
  return sum;
}

}  // namespace

EvalResult evaluate(const WorkloadProfile& w, const ScheduleDecision& d, const ModelContext& ctx) {
  const PowerMap p_dyn = dynamic_power(w, d, ctx.floorplan, ctx.calibration);
  const CoupledState s = fixed_point(ctx.R, p_dyn, ctx.leakage, ctx.inlet, ctx.calibration.fixed_point);

  EvalResult r;
  r.decision = d;
  r.runtime = runtime_model(w, d, ctx.calibration.dvfs);
  r.total_power = order_free_total(s.p.values);
  r.energy = energy(r.runtime, r.total_power);
  Eigen::Index hot = 0;
  r.peak_temp = s.t.values.maxCoeff(&hot);
  r.hotspot_block = ctx.floorplan[static_cast<std::size_t>(hot)].name;
  r.power_breakdown = s.p;
  r.temperatures = s.t;
  r.fixed_point_iterations = s.iterations;
  return r;
}

std::vector<EvalOutcome> evaluate_all(const WorkloadProfile& w, const std::vector<ScheduleDecision>& decisions,
                                      const ModelContext& ctx, unsigned threads) {
  std::vector<EvalOutcome> out(decisions.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) out[i].decision = decisions[i];

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        out[i].result = evaluate(w, out[i].decision, ctx);
      } catch (const Error& e) {
        out[i].error = e;
      } catch (const std::exception& e) {
        out[i].error = Error(ErrorKind::Solver, e.what());
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(out.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return out;
}

std::vector<EvalResult> rank(std::vector<EvalResult> results, Objective obj) {
  if (results.empty()) throw Error(ErrorKind::Input, "rank: no results to order");
  std::stable_sort(results.begin(), results.end(), [obj](const EvalResult& a, const EvalResult& b) {
    const double va = objective_value(a, obj), vb = objective_value(b, obj);
    if (va != vb) return va < vb;
    return decision_before(a.decision, b.decision);
  });
  return results;
}

std::vector<EvalResult> affinity_sweep(const WorkloadProfile& w, const std::vector<std::size_t>& cores,
                                       const ModelContext& ctx) {
  const DvfsState dvfs = dvfs_state(ctx.calibration.dvfs, ctx.calibration.affinity_freq_ghz);
  std::vector<EvalResult> out;
  out.reserve(cores.size());
  for (std::size_t c : cores) {
    ScheduleDecision d{Device::Gpu, c, dvfs};
    validate_decision(d, ctx.floorplan);
    out.push_back(evaluate(w, d, ctx));
  }
  return out;
}

SummaryTable summary_table(const std::vector<WorkloadProfile>& workloads, const std::vector<Objective>& objectives,
                           const ModelContext& ctx, const DecisionSpace& space, unsigned threads) {
  SummaryTable t;
  t.objectives = objectives;
  const auto decisions = enumerate_decisions(space, ctx.floorplan, ctx.calibration.dvfs);
  for (const auto& w : workloads) {
    t.workloads.push_back(w.name);
    auto& row = t.cells.emplace_back(objectives.size());

    std::vector<EvalResult> results;
    std::string failure;
    for (auto& o : evaluate_all(w, decisions, ctx, threads)) {
      if (o.error) {
        failure = describe(o.decision, ctx.floorplan) + ": " + o.error->what();
        break;
      }
      results.push_back(std::move(*o.result));
    }
    for (std::size_t k = 0; k < objectives.size(); ++k) {
      if (!failure.empty())
        row[k].error = failure;
      else
        row[k].winner = rank(results, objectives[k]).front().decision;
    }
  }
  return t;
}

}  // namespace thermap
