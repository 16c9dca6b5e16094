#include "thermap/config.hpp"

#include <charconv>
#include <set>

#include <json.hpp>

#include "thermap/error.hpp"
#include "thermap/io.hpp"

namespace thermap {

namespace {

using nlohmann::json;

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::Parse, where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw Error(ErrorKind::Parse, where + ": unknown key '" + k + "'");
  }
}

DeviceClass class_key(const std::string& k, const std::string& where) {
  const auto c = device_class_from_string(k);
  if (!c) throw Error(ErrorKind::Parse, where + ": unknown device class '" + k + "'");
  return *c;
}

OperatingPoint operating_point(const json& j, const std::string& where) {
  only_keys(j, {"freq_ghz", "volt_v"}, where);
  return {j.at("freq_ghz").get<double>(), j.at("volt_v").get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p))
    throw Error(ErrorKind::Input, std::string(what) + " file not found: " + p.string());
}

}  // namespace

std::pair<int, int> parse_resolution(std::string_view s) {
  const auto x = s.find('x');
  auto num = [&](std::string_view part) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty())
      throw Error(ErrorKind::Input, "resolution must look like 64x64, got '" + std::string(s) + "'");
    return v;
  };
  if (x == std::string_view::npos)
    throw Error(ErrorKind::Input, "resolution must look like 64x64, got '" + std::string(s) + "'");
  return {num(s.substr(0, x)), num(s.substr(x + 1))};
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_json(text, "run config");
  RunConfig cfg;
  try {
    only_keys(doc, {"floorplan", "workloads", "calibration", "output_dir", "cache", "boundary", "resolution",
                    "cpu_freqs_ghz", "seed", "noise_sigma_k", "threads"},
              "run config");
    if (doc.contains("floorplan")) {
      const auto fp = doc.at("floorplan").get<std::string>();
      if (fp != "builtin") cfg.floorplan = resolve(base_dir, fp);
    }
    cfg.workloads = resolve(base_dir, doc.at("workloads").get<std::string>());
    cfg.calibration = resolve(base_dir, doc.at("calibration").get<std::string>());
    cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    if (doc.contains("cache")) cfg.cache = resolve(base_dir, doc.at("cache").get<std::string>());
    if (doc.contains("boundary")) {
      const auto& b = doc.at("boundary");
      only_keys(b, {"inlet_temperature_c", "effective_h_top", "h_natural", "recorded_flow_rate_gpm",
                    "recorded_pressure_psi"},
                "run config boundary");
      cfg.boundary.inlet_temperature = b.value("inlet_temperature_c", cfg.boundary.inlet_temperature);
      cfg.boundary.effective_h_top = b.value("effective_h_top", cfg.boundary.effective_h_top);
      cfg.boundary.h_natural = b.value("h_natural", cfg.boundary.h_natural);
      cfg.boundary.recorded_flow_rate_gpm = b.value("recorded_flow_rate_gpm", cfg.boundary.recorded_flow_rate_gpm);
      cfg.boundary.recorded_pressure_psi = b.value("recorded_pressure_psi", cfg.boundary.recorded_pressure_psi);
    }
    if (doc.contains("resolution")) std::tie(cfg.nx, cfg.ny) = parse_resolution(doc.at("resolution").get<std::string>());
    if (doc.contains("cpu_freqs_ghz")) cfg.cpu_freqs_ghz = doc.at("cpu_freqs_ghz").get<std::vector<double>>();
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.noise_sigma_k = doc.value("noise_sigma_k", cfg.noise_sigma_k);
    cfg.threads = doc.value("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("run config: ") + e.what());
  }
  if (cfg.cache.empty()) cfg.cache = cfg.output_dir / "response_matrix.txt";
  cfg.boundary.validate();
  if (!cfg.floorplan.empty()) require_file(cfg.floorplan, "floorplan");
  require_file(cfg.workloads, "workloads");
  require_file(cfg.calibration, "calibration");
  if (cfg.cpu_freqs_ghz.empty()) throw Error(ErrorKind::Validation, "run config: cpu_freqs_ghz is empty");
  if (!(cfg.noise_sigma_k >= 0)) throw Error(ErrorKind::Validation, "run config: noise_sigma_k must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  require_file(path, "config");
  return parse_run_config(read_text_file(path), path.parent_path());
}

RunConfig default_run_config(const std::filesystem::path& data_dir) {
  RunConfig cfg;
  cfg.floorplan = data_dir / "apu_floorplan.json";
  cfg.workloads = data_dir / "workloads.json";
  cfg.calibration = data_dir / "calibration.json";
  cfg.output_dir = "out";
  cfg.cache = cfg.output_dir / "response_matrix.txt";
  return cfg;
}

std::vector<WorkloadProfile> parse_workloads(std::string_view text) {
  const json doc = parse_json(text, "workloads");
  std::vector<WorkloadProfile> out;
  std::set<std::string> names;
  std::string current = "<document>";
  try {
    only_keys(doc, {"workloads"}, "workloads");
    for (const auto& j : doc.at("workloads")) {
      current = j.value("name", std::string("<unnamed>"));
      const std::string where = "workload '" + current + "'";
      only_keys(j, {"name", "cpu_load", "divergence_penalty", "parallel_fraction", "base_work_s", "speedup_gpu",
                    "activity", "note"},
                where);
      WorkloadProfile w;
      w.name = j.at("name").get<std::string>();
      w.cpu_load = j.at("cpu_load").get<double>();
      w.divergence_penalty = j.value("divergence_penalty", 1.0);
      w.parallel_fraction = j.value("parallel_fraction", 1.0);
      w.base_work = j.at("base_work_s").get<double>();
      w.speedup_gpu = j.value("speedup_gpu", 1.0);
      for (const auto& [k, v] : j.at("activity").items()) w.activity[class_index(class_key(k, where))] = v.get<double>();
      w.validate();
      if (!names.insert(w.name).second) throw Error(ErrorKind::Validation, "duplicate workload '" + w.name + "'");
      out.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "workloads: in '" + current + "': " + e.what());
  }
  return out;
}

Calibration parse_calibration(std::string_view text) {
  const json doc = parse_json(text, "calibration");
  Calibration cal;
  try {
    only_keys(doc, {"dvfs", "capacitance_w_per_ghz_v2", "leakage", "fixed_point", "affinity_freq_ghz", "note"},
              "calibration");
    if (doc.contains("dvfs")) {
      const auto& d = doc.at("dvfs");
      only_keys(d, {"cpu", "gpu", "uncore", "ref_cpu_freq_ghz", "ref_gpu_freq_ghz"}, "calibration dvfs");
      if (d.contains("cpu")) {
        cal.dvfs.cpu.clear();
        for (const auto& op : d.at("cpu")) cal.dvfs.cpu.push_back(operating_point(op, "calibration dvfs.cpu"));
      }
      if (d.contains("gpu")) cal.dvfs.gpu = operating_point(d.at("gpu"), "calibration dvfs.gpu");
      if (d.contains("uncore")) cal.dvfs.uncore = operating_point(d.at("uncore"), "calibration dvfs.uncore");
      cal.dvfs.ref_cpu_freq_ghz = d.value("ref_cpu_freq_ghz", cal.dvfs.ref_cpu_freq_ghz);
      cal.dvfs.ref_gpu_freq_ghz = d.value("ref_gpu_freq_ghz", cal.dvfs.ref_gpu_freq_ghz);
    }
    for (const auto& [k, v] : doc.at("capacitance_w_per_ghz_v2").items())
      cal.capacitance[class_index(class_key(k, "calibration capacitance"))] = v.get<double>();
    if (doc.contains("leakage")) {
      const auto& l = doc.at("leakage");
      only_keys(l, {"reference_temp_c", "doubling_interval_k", "density_w_per_mm2"}, "calibration leakage");
      cal.leakage.reference_temp_c = l.value("reference_temp_c", cal.leakage.reference_temp_c);
      cal.leakage.doubling_interval_k = l.value("doubling_interval_k", cal.leakage.doubling_interval_k);
      if (l.contains("density_w_per_mm2"))
        for (const auto& [k, v] : l.at("density_w_per_mm2").items())
          cal.leakage.density_w_per_mm2[class_index(class_key(k, "calibration leakage"))] = v.get<double>();
    }
    if (doc.contains("fixed_point")) {
      const auto& f = doc.at("fixed_point");
      only_keys(f, {"damping", "tolerance_k", "max_iterations", "hard_cap_c"}, "calibration fixed_point");
      cal.fixed_point.damping = f.value("damping", cal.fixed_point.damping);
      cal.fixed_point.tol = f.value("tolerance_k", cal.fixed_point.tol);
      cal.fixed_point.max_iter = f.value("max_iterations", cal.fixed_point.max_iter);
      cal.fixed_point.hard_cap_c = f.value("hard_cap_c", cal.fixed_point.hard_cap_c);
    }
    cal.affinity_freq_ghz = doc.value("affinity_freq_ghz", cal.affinity_freq_ghz);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("calibration: ") + e.what());
  }
  cal.dvfs.validate();
  cal.fixed_point.validate();
  for (const auto& c : cal.capacitance)
    if (c && !(*c >= 0)) throw Error(ErrorKind::Validation, "calibration: capacitance must be non-negative");
  if (!(cal.leakage.doubling_interval_k > 0))
    throw Error(ErrorKind::Validation, "calibration: doubling interval must be positive");
  cal.dvfs.cpu_volt(cal.affinity_freq_ghz);
  return cal;
}

Floorplan load_floorplan(const RunConfig& cfg) {
  if (cfg.floorplan.empty()) return builtin_apu_floorplan();
  return parse_floorplan(read_text_file(cfg.floorplan));
}

std::vector<WorkloadProfile> load_workloads(const RunConfig& cfg) { return parse_workloads(read_text_file(cfg.workloads)); }

Calibration load_calibration(const RunConfig& cfg) { return parse_calibration(read_text_file(cfg.calibration)); }

ModelBuild obtain_response_matrix(const Floorplan& fp, const RunConfig& cfg) {
  const ThermalGrid grid = build_grid(fp, cfg.nx, cfg.ny, cfg.boundary);
  ModelBuild out;
  if (std::filesystem::exists(cfg.cache)) {
    auto hit = load_response_matrix(cfg.cache, grid.metadata_hash(), cfg.nx, cfg.ny, fp.block_names());
    if (hit.matrix) {
      out.R = std::move(*hit.matrix);
      out.cache_hit = true;
      return out;
    }
    out.cache_note = hit.reason;
  }
  out.R = build_response_matrix(grid, cfg.threads);
  if (cfg.cache.has_parent_path()) std::filesystem::create_directories(cfg.cache.parent_path());
  save_response_matrix(cfg.cache, out.R);
  return out;
}

const WorkloadProfile* find_workload(const std::vector<WorkloadProfile>& ws, std::string_view name) {
  for (const auto& w : ws)
    if (w.name == name) return &w;
  return nullptr;
}

}  // namespace thermap
