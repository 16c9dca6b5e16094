// thermap: build the thermal model, run forward/inverse solves and evaluate
// DVFS and scheduling choices.
//
// Exit codes: 0 ok, 2 usage, 3 parse, 4 validation, 5 dimension, 6 input,
// 7 solver, 8 thermal runaway, 1 anything else.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "thermap/config.hpp"
#include "thermap/inverse.hpp"
#include "thermap/io.hpp"
#include "thermap/sched.hpp"

namespace fs = std::filesystem;
using namespace thermap;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return 3;
    case ErrorKind::Validation: return 4;
    case ErrorKind::Dimension: return 5;
    case ErrorKind::Input: return 6;
    case ErrorKind::Solver: return 7;
    case ErrorKind::Runaway: return 8;
  }
  return 1;
}

struct Globals {
  std::string config;
  std::string resolution;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? default_run_config(THERMAP_DATA_DIR) : load_run_config(g.config);
  if (!g.resolution.empty()) std::tie(cfg.nx, cfg.ny) = parse_resolution(g.resolution);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.output_dir.empty()) {
    const bool default_cache = cfg.cache == cfg.output_dir / "response_matrix.txt";
    cfg.output_dir = g.output_dir;
    if (default_cache) cfg.cache = cfg.output_dir / "response_matrix.txt";
  }
  fs::create_directories(cfg.output_dir);
  return cfg;
}

ResponseMatrix load_model(const Floorplan& fp, const RunConfig& cfg) {
  auto m = obtain_response_matrix(fp, cfg);
  if (m.cache_hit)
    std::cerr << "cache hit: " << cfg.cache.string() << '\n';
  else if (!m.cache_note.empty())
    std::cerr << "warning: cache rejected (" << m.cache_note << "), rebuilt " << cfg.cache.string() << '\n';
  else
    std::cerr << "built response matrix " << m.R.size() << 'x' << m.R.size() << " at " << cfg.nx << 'x' << cfg.ny
              << " -> " << cfg.cache.string() << '\n';
  return std::move(m.R);
}

PowerMap read_power_csv(const fs::path& path, const Floorplan& fp) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("block,power_w", 0) != 0) throw Error(ErrorKind::Parse, "power CSV header must start with 'block,power_w'");
  PowerMap p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fp.size())), Provenance::Synthetic};
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, value;
    std::getline(ls, name, ',');
    std::getline(ls, value, ',');
    const auto idx = fp.index_of(name);
    if (!idx) throw Error(ErrorKind::Parse, "power CSV: unknown block '" + name + "'");
    try {
      p.values[static_cast<Eigen::Index>(*idx)] = std::stod(value);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Parse, "power CSV: bad value for '" + name + "'");
    }
    ++rows;
  }
  check_dimension(p.size(), rows, "power CSV");
  check_power_map(p, p.size(), "power CSV");
  return p;
}

void write_heatmap(const fs::path& dir, const std::string& stem, const Floorplan& fp, const RunConfig& cfg,
                   const ThermalMap& t) {
  fs::create_directories(dir);
  const auto cells = rasterize_blocks(fp, cfg.nx, cfg.ny, t.values, cfg.boundary.inlet_temperature);
  std::ofstream out(dir / (stem + ".pgm"), std::ios::binary);
  write_pgm(out, cfg.nx, cfg.ny, cells, cfg.boundary.inlet_temperature, kHeatmapMaxC);
}

std::string decision_stem(const std::string& workload, const ScheduleDecision& d, const Floorplan& fp) {
  std::ostringstream os;
  os << workload << '_' << (d.device == Device::Cpu ? "cpu" : "gpu") << '_'
     << static_cast<int>(std::lround(d.dvfs.cpu_freq_ghz * 1000)) << "mhz";
  if (d.device == Device::Gpu) os << '_' << fp[d.host_core].name;
  return os.str();
}

int cmd_build_model(const Globals& g) {
  const RunConfig cfg = resolve_config(g);
  const Floorplan fp = load_floorplan(cfg);
  const ResponseMatrix R = load_model(fp, cfg);
  std::cout << "blocks " << R.size() << ", resolution " << R.nx << 'x' << R.ny << ", min entry "
            << R.matrix.minCoeff() << " K/W, max entry " << R.matrix.maxCoeff() << " K/W\n";
  return 0;
}

int cmd_forward(const Globals& g, const std::string& power_path, double noise, const std::string& out_path,
                bool heatmaps) {
  const RunConfig cfg = resolve_config(g);
  const Floorplan fp = load_floorplan(cfg);
  const ResponseMatrix R = load_model(fp, cfg);
  const PowerMap p = power_path.empty() ? reference_power_map(fp) : read_power_csv(power_path, fp);

  ThermalMap t = forward(R, p).to_celsius(cfg.boundary.inlet_temperature);
  if (noise > 0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> n(0.0, noise);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.values[i] += n(rng);
  }
  const fs::path path = out_path.empty() ? cfg.output_dir / "forward_thermal.csv" : fs::path(out_path);
  std::ofstream out(path);
  write_thermal_csv(out, fp, t);
  if (heatmaps) write_heatmap(cfg.output_dir / "heatmaps", "forward", fp, cfg, t);
  std::cout << "total power " << p.total() << " W, peak " << t.values.maxCoeff() << " degC -> " << path.string()
            << '\n';
  return 0;
}

int cmd_invert(const Globals& g, const std::string& csv, double lambda, const std::string& out_path) {
  const RunConfig cfg = resolve_config(g);
  const Floorplan fp = load_floorplan(cfg);
  std::istringstream in(read_text_file(csv));
  const ThermalMap t = read_thermal_csv(in, fp);
  const ResponseMatrix R = load_model(fp, cfg);

  InversionOptions opts;
  opts.tikhonov_lambda = lambda;
  const auto res = reconstruct(R, t, cfg.boundary.inlet_temperature, opts);
  ThermalMap rise = t.to_rise(cfg.boundary.inlet_temperature);
  rise.values = rise.values.cwiseMax(0.0);
  const auto kkt = certify(R, rise, res, opts);

  const fs::path path = out_path.empty() ? cfg.output_dir / "reconstructed_power.csv" : fs::path(out_path);
  std::ofstream out(path);
  write_power_csv(out, fp, res.p_star);
  std::cout << "total power " << res.p_star.total() << " W\n"
            << "residual norm " << res.residual_norm << " K\n"
            << "iterations " << res.iterations << (res.converged ? "" : " (not converged)") << '\n'
            << "KKT " << (kkt.ok ? "ok" : "FAILED") << " (max violation " << kkt.max_violation << " x tol)\n"
            << "-> " << path.string() << '\n';
  return kkt.ok && res.converged ? 0 : exit_code(ErrorKind::Solver);
}

int cmd_evaluate(const Globals& g, const std::string& name, const std::string& objective, bool affinity,
                 bool heatmaps) {
  const RunConfig cfg = resolve_config(g);
  const Floorplan fp = load_floorplan(cfg);
  const auto workloads = load_workloads(cfg);
  Calibration cal = load_calibration(cfg);

  std::vector<WorkloadProfile> selected;
  if (name == "all") {
    selected = workloads;
  } else if (const auto* w = find_workload(workloads, name)) {
    selected.push_back(*w);
  } else {
    std::string known;
    for (const auto& w : workloads) known += (known.empty() ? "" : ", ") + w.name;
    throw Error(ErrorKind::Input, "unknown workload '" + name + "'; available: " + known + ", all");
  }

  std::optional<Objective> obj;
  if (!objective.empty()) obj = objective_from_string(objective);

  const ModelContext ctx(fp, load_model(fp, cfg), cal, cfg.boundary.inlet_temperature);
  DecisionSpace space;
  space.cpu_freqs_ghz = cfg.cpu_freqs_ghz;
  const auto decisions = enumerate_decisions(space, fp, cal.dvfs);
  const std::string tag = name == "all" ? "all" : name;

  int status = 0;
  if (affinity) {
    const fs::path path = cfg.output_dir / ("affinity_" + tag + ".csv");
    std::ofstream out(path);
    bool header = true;
    for (const auto& w : selected) {
      const auto rows = affinity_sweep(w, fp.host_capable_indices(), ctx);
      write_eval_csv(out, fp, w.name, rows, header);
      header = false;
      for (const auto& r : rows)
        std::cout << w.name << "  host " << fp[r.decision.host_core].name << "  " << r.total_power << " W  "
                  << r.peak_temp << " degC  hotspot " << r.hotspot_block << '\n';
      if (heatmaps)
        for (const auto& r : rows)
          write_heatmap(cfg.output_dir / "heatmaps", "affinity_" + decision_stem(w.name, r.decision, fp), fp, cfg,
                        r.temperatures);
    }
    std::cout << "-> " << path.string() << '\n';
    return 0;
  }

  const fs::path path = cfg.output_dir / ("eval_" + tag + ".csv");
  std::ofstream out(path);
  bool header = true;
  for (const auto& w : selected) {
    std::vector<EvalResult> ok;
    for (auto& o : evaluate_all(w, decisions, ctx, cfg.threads)) {
      if (o.error) {
        std::cerr << w.name << " [" << describe(o.decision, fp) << "]: " << to_string(o.error->kind()) << ": "
                  << o.error->what() << '\n';
        status = exit_code(o.error->kind());
        continue;
      }
      ok.push_back(std::move(*o.result));
    }
    write_eval_csv(out, fp, w.name, ok, header);
    header = false;
    if (heatmaps)
      for (const auto& r : ok)
        write_heatmap(cfg.output_dir / "heatmaps", decision_stem(w.name, r.decision, fp), fp, cfg, r.temperatures);
    if (name != "all" && !ok.empty()) {
      const auto ranked = rank(ok, obj.value_or(Objective::MinEnergy));
      std::cout << w.name << " ranked by " << to_string(obj.value_or(Objective::MinEnergy)) << ":\n";
      for (const auto& r : ranked)
        std::cout << "  " << describe(r.decision, fp) << "  " << objective_value(r, obj.value_or(Objective::MinEnergy))
                  << '\n';
    }
  }
  std::cout << "-> " << path.string() << '\n';

  if (name == "all") {
    const std::vector<Objective> objectives =
        obj ? std::vector<Objective>{*obj}
            : std::vector<Objective>{Objective::MinPower, Objective::MinRuntime, Objective::MinEnergy};
    const auto table = summary_table(selected, objectives, ctx, space, cfg.threads);
    std::ofstream csv(cfg.output_dir / "summary.csv");
    write_summary_csv(csv, fp, table);
    const std::string text = format_summary_text(table);
    write_text_file(cfg.output_dir / "summary.txt", text);
    std::cout << text;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermal power mapping and CPU-GPU scheduling evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may also follow the subcommand
  Globals g;
  app.add_option("--config", g.config, "run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--resolution", g.resolution, "grid resolution NxN (default 64x64)");
  app.add_option("--seed", g.seed, "random seed for noise injection");
  app.add_option("--output-dir", g.output_dir, "override the configured output directory");

  auto* build = app.add_subcommand("build-model", "build or reuse the cached response matrix");

  auto* fwd = app.add_subcommand("forward", "temperatures for a power map");
  std::string power_path, fwd_out;
  double noise = 0;
  bool heatmaps = false;
  fwd->add_option("--power", power_path, "power CSV (block,power_w); default: reference power map")
      ->check(CLI::ExistingFile);
  fwd->add_option("--noise", noise, "Gaussian sensor noise sigma, K")->check(CLI::NonNegativeNumber);
  fwd->add_option("-o,--out", fwd_out, "output thermal CSV");
  fwd->add_flag("--heatmaps", heatmaps, "write a PGM heatmap");

  auto* inv = app.add_subcommand("invert", "reconstruct block power from a thermal CSV");
  std::string thermal_csv, inv_out;
  double lambda = 0;
  inv->add_option("thermal_csv", thermal_csv, "block,temperature_c")->required()->check(CLI::ExistingFile);
  inv->add_option("--lambda", lambda, "Tikhonov weight")->check(CLI::NonNegativeNumber);
  inv->add_option("-o,--out", inv_out, "output power CSV");

  auto* ev = app.add_subcommand("evaluate", "evaluate scheduling decisions for a workload or 'all'");
  std::string workload, objective;
  bool affinity = false;
  ev->add_option("workload", workload, "workload name or 'all'")->required();
  ev->add_option("--objective", objective, "ranking objective")
      ->check(CLI::IsMember({"power", "temp", "runtime", "energy"}));
  ev->add_flag("--affinity-sweep", affinity, "launch on GPU from every host-capable core");
  ev->add_flag("--heatmaps", heatmaps, "write PGM heatmaps per decision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*build) return cmd_build_model(g);
    if (*fwd) return cmd_forward(g, power_path, noise, fwd_out, heatmaps);
    if (*inv) return cmd_invert(g, thermal_csv, lambda, inv_out);
    if (*ev) return cmd_evaluate(g, workload, objective, affinity, heatmaps);
  } catch (const Error& e) {
    std::cerr << "thermap: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "thermap: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
