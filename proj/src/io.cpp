#include "thermap/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "thermap/error.hpp"

namespace thermap {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorKind::Parse, msg); }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Input, "write failed: " + path.string());
}

void write_thermal_csv(std::ostream& os, const Floorplan& fp, const ThermalMap& t) {
  check_dimension(static_cast<Eigen::Index>(fp.size()), t.size(), "write_thermal_csv");
  if (t.kind != TemperatureKind::Celsius)
    throw Error(ErrorKind::Input, "write_thermal_csv: expected absolute temperatures");
  os << "block,temperature_c\n";
  for (std::size_t i = 0; i < fp.size(); ++i)
    os << fp[i].name << ',' << fmt("%.9f", t.values[static_cast<Eigen::Index>(i)]) << '\n';
}

ThermalMap read_thermal_csv(std::istream& is, const Floorplan& fp) {
  std::string line;
  if (!std::getline(is, line)) parse_error("thermal CSV is empty");
  const auto head = split(line, ',');
  if (head.size() != 2 || head[0] != "block" || head[1] != "temperature_c")
    parse_error("thermal CSV header must be 'block,temperature_c'");

  const auto n = static_cast<Eigen::Index>(fp.size());
  ThermalMap t{Eigen::VectorXd::Constant(n, std::nan("")), TemperatureKind::Celsius, Provenance::Forward};
  std::vector<bool> seen(fp.size(), false);
  Eigen::Index rows = 0;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::string where = "thermal CSV line " + std::to_string(lineno);
    if (cells.size() != 2) parse_error(where + ": expected 2 fields");
    ++rows;
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      parse_error(where + ": '" + cells[1] + "' is not a number");
    }
    if (rows > n) continue;  // reported as a dimension error below
    const auto idx = fp.index_of(cells[0]);
    if (!idx) parse_error(where + ": unknown block '" + cells[0] + "'");
    if (seen[*idx]) parse_error(where + ": duplicate block '" + cells[0] + "'");
    seen[*idx] = true;
    t.values[static_cast<Eigen::Index>(*idx)] = v;
  }
  check_dimension(n, rows, "thermal CSV");
  return t;
}

void write_power_csv(std::ostream& os, const Floorplan& fp, const PowerMap& p) {
  check_dimension(static_cast<Eigen::Index>(fp.size()), p.size(), "write_power_csv");
  const double total = p.total();
  os << "block,power_w,share_pct\n";
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const double v = p.values[static_cast<Eigen::Index>(i)];
    os << fp[i].name << ',' << fmt("%.9f", v) << ',' << fmt("%.4f", total > 0 ? 100.0 * v / total : 0.0) << '\n';
  }
}

void write_eval_csv(std::ostream& os, const Floorplan& fp, const std::string& workload,
                    const std::vector<EvalResult>& results, bool header) {
  if (header) {
    os << "workload,device,cpu_freq_ghz,cpu_volt_v,host_core,runtime_s,total_power_w,energy_j,peak_temp_c,"
          "hotspot_block,fixed_point_iterations";
    for (const auto& b : fp.blocks()) os << ",power_" << b.name << "_w";
    for (const auto& b : fp.blocks()) os << ",temp_" << b.name << "_c";
    os << '\n';
  }
  for (const auto& r : results) {
    const auto& d = r.decision;
    os << workload << ',' << to_string(d.device) << ',' << fmt("%.3f", d.dvfs.cpu_freq_ghz) << ','
       << fmt("%.3f", d.dvfs.cpu_volt_v) << ',' << fp[d.host_core].name << ',' << fmt("%.6f", r.runtime) << ','
       << fmt("%.6f", r.total_power) << ',' << fmt("%.6f", r.energy) << ',' << fmt("%.6f", r.peak_temp) << ','
       << r.hotspot_block << ',' << r.fixed_point_iterations;
    for (Eigen::Index i = 0; i < r.power_breakdown.size(); ++i) os << ',' << fmt("%.6f", r.power_breakdown.values[i]);
    for (Eigen::Index i = 0; i < r.temperatures.size(); ++i) os << ',' << fmt("%.6f", r.temperatures.values[i]);
    os << '\n';
  }
}

void write_summary_csv(std::ostream& os, const Floorplan& fp, const SummaryTable& t) {
  os << "workload,objective,device,cpu_freq_ghz,host_core,status\n";
  for (std::size_t w = 0; w < t.workloads.size(); ++w)
    for (std::size_t k = 0; k < t.objectives.size(); ++k) {
      const auto& c = t.cells[w][k];
      os << t.workloads[w] << ',' << to_string(t.objectives[k]) << ',';
      if (c.winner)
        os << to_string(c.winner->device) << ',' << fmt("%.3f", c.winner->dvfs.cpu_freq_ghz) << ','
           << fp[c.winner->host_core].name << ",ok\n";
      else
        os << ",,,failed\n";
    }
}

std::string format_summary_text(const SummaryTable& t) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"workload"};
  for (auto o : t.objectives) head.emplace_back(to_string(o));
  grid.push_back(head);
  for (std::size_t w = 0; w < t.workloads.size(); ++w) {
    std::vector<std::string> row{t.workloads[w]};
    for (std::size_t k = 0; k < t.objectives.size(); ++k) {
      const auto& c = t.cells[w][k];
      row.push_back(c.winner ? fmt("%.1f GHz, ", c.winner->dvfs.cpu_freq_ghz) + std::string(to_string(c.winner->device))
                             : "FAILED");
    }
    grid.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream os;
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      os << (i + 1 < row.size() ? "  " : "");
    }
    os << '\n';
  }
  return os.str();
}

void save_response_matrix(const std::filesystem::path& path, const ResponseMatrix& R) {
  std::ostringstream os;
  os << "# thermap response matrix v1\n";
  os << "# key " << hex(R.key) << '\n';
  os << "# resolution " << R.nx << 'x' << R.ny << '\n';
  os << "# blocks";
  for (std::size_t i = 0; i < R.block_names.size(); ++i) os << (i ? "," : " ") << R.block_names[i];
  os << '\n';
  for (Eigen::Index i = 0; i < R.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < R.matrix.cols(); ++j) os << (j ? " " : "") << fmt("%.17g", R.matrix(i, j));
    os << '\n';
  }
  write_text_file(path, os.str());
}

CacheLookup load_response_matrix(const std::filesystem::path& path, std::uint64_t expected_key, int nx, int ny,
                                 const std::vector<std::string>& block_names) {
  CacheLookup out;
  std::ifstream in(path);
  if (!in) {
    out.reason = "no cache at " + path.string();
    return out;
  }
  std::string magic, key, res, blocks;
  std::getline(in, magic);
  std::getline(in, key);
  std::getline(in, res);
  std::getline(in, blocks);
  std::string expect_blocks = "# blocks";
  for (std::size_t i = 0; i < block_names.size(); ++i) expect_blocks += (i ? "," : " ") + block_names[i];

  if (magic != "# thermap response matrix v1") out.reason = "unrecognized cache header";
  else if (key != "# key " + hex(expected_key)) out.reason = "model hash mismatch";
  else if (res != "# resolution " + std::to_string(nx) + "x" + std::to_string(ny)) out.reason = "resolution mismatch";
  else if (blocks != expect_blocks) out.reason = "block list mismatch";
  if (!out.reason.empty()) return out;

  const auto n = static_cast<Eigen::Index>(block_names.size());
  ResponseMatrix R{Eigen::MatrixXd(n, n), nx, ny, expected_key, block_names};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!(in >> R.matrix(i, j))) {
        out.reason = "truncated matrix body";
        return out;
      }
  std::string rest;
  if (in >> rest) {
    out.reason = "trailing data after matrix body";
    return out;
  }
  if (!R.matrix.allFinite()) {
    out.reason = "non-finite matrix entry";
    return out;
  }
  out.matrix = std::move(R);
  return out;
}

Eigen::VectorXd rasterize_blocks(const Floorplan& fp, int nx, int ny, const Eigen::VectorXd& block_values,
                                 double background) {
  check_dimension(static_cast<Eigen::Index>(fp.size()), block_values.size(), "rasterize_blocks");
  if (nx < 1 || ny < 1) throw Error(ErrorKind::Input, "rasterize_blocks: empty raster");
  Eigen::VectorXd cells = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nx) * ny, background);
  const double dx = fp.die_width() / nx, dy = fp.die_height() / ny;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + 0.5) * dx, cy = (j + 0.5) * dy;
      for (std::size_t b = 0; b < fp.size(); ++b)
        if (fp[b].rect.contains(cx, cy)) {
          cells[static_cast<Eigen::Index>(j) * nx + i] = block_values[static_cast<Eigen::Index>(b)];
          break;
        }
    }
  return cells;
}

void write_pgm(std::ostream& os, int nx, int ny, const Eigen::VectorXd& cells, double lo, double hi) {
  check_dimension(static_cast<Eigen::Index>(nx) * ny, cells.size(), "write_pgm");
  if (!(hi > lo)) throw Error(ErrorKind::Input, "write_pgm: empty value range");
  os << "P5\n" << nx << ' ' << ny << "\n255\n";
  for (int j = ny - 1; j >= 0; --j)
    for (int i = 0; i < nx; ++i) {
      const double u = std::clamp((cells[static_cast<Eigen::Index>(j) * nx + i] - lo) / (hi - lo), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u))));
    }
}

}  // namespace thermap
