#include "thermap/thermal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/SparseCholesky>

#include "thermap/error.hpp"
#include "thermap/hash.hpp"

namespace thermap {

struct ThermalGrid::Factorization {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

void BoundaryConditions::validate() const {
  if (!std::isfinite(inlet_temperature))
    throw Error(ErrorKind::Validation, "boundary conditions: inlet temperature must be finite");
  if (!(h_natural > 0))
    throw Error(ErrorKind::Validation, "boundary conditions: h_natural must be positive");
  if (!(effective_h_top > h_natural))
    throw Error(ErrorKind::Validation, "boundary conditions: effective_h_top must exceed h_natural");
}

std::vector<Layer> default_layer_stack(const Floorplan& fp, double window_thickness) {
  return {
      {"die", materials::silicon, fp.die_thickness()},
      {"tim", materials::mineral_oil, 2e-6},
      {"window", materials::sapphire, window_thickness},
  };
}

namespace {

constexpr double kResidualTol = 1e-10;

std::uint64_t grid_hash(const Floorplan& fp, int nx, int ny, const BoundaryConditions& bc,
                        const std::vector<Layer>& layers, bool lumped) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << serialize_floorplan(fp) << '|' << nx << 'x' << ny << '|' << bc.inlet_temperature << ','
     << bc.effective_h_top << ',' << bc.h_natural << '|' << (lumped ? "lumped" : "fv");
  for (const auto& l : layers) os << '|' << l.name << ',' << l.material.conductivity << ',' << l.thickness;
  return fnv1a64(os.str());
}

// Conductance of a half cell in series with a convective film.
double robin(double h, double area, double half_length, double k) {
  return 1.0 / (half_length / (k * area) + 1.0 / (h * area));
}

}  // namespace

ThermalGrid build_grid(const Floorplan& fp, int nx, int ny, const BoundaryConditions& bc, GridOptions options) {
  bc.validate();
  if (nx < 4 || ny < 4)
    throw Error(ErrorKind::Input, "grid resolution must be at least 4x4, got " + std::to_string(nx) + "x" +
                                      std::to_string(ny));

  ThermalGrid g;
  g.floorplan_ = std::make_shared<const Floorplan>(fp);
  g.nx_ = nx;
  g.ny_ = ny;
  g.bc_ = bc;
  g.layers_ = options.layers.empty() ? default_layer_stack(fp) : std::move(options.layers);
  g.lumped_ = options.lumped;
  for (const auto& l : g.layers_)
    if (!(l.thickness > 0) || !(l.material.conductivity > 0) || !(l.material.density > 0) ||
        !(l.material.specific_heat > 0))
      throw Error(ErrorKind::Validation, "layer '" + l.name + "' needs positive thickness and material data");

  const double dx = fp.die_width() / nx;
  const double dy = fp.die_height() / ny;
  const std::size_t ncell = g.cells_per_layer();

  g.cell_block_.assign(ncell, -1);
  g.block_cells_.assign(fp.size(), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + 0.5) * dx, cy = (j + 0.5) * dy;
      for (std::size_t b = 0; b < fp.size(); ++b) {
        if (fp[b].rect.contains(cx, cy)) {
          g.cell_block_[static_cast<std::size_t>(j) * nx + i] = static_cast<int>(b);
          ++g.block_cells_[b];
          break;
        }
      }
    }
  }
  for (std::size_t b = 0; b < fp.size(); ++b)
    if (g.block_cells_[b] == 0)
      throw Error(ErrorKind::Validation, "resolution " + std::to_string(nx) + "x" + std::to_string(ny) +
                                             " too coarse: block '" + fp[b].name + "' covers no cell");

  const double h_top = bc.effective_h_top, h_nat = bc.h_natural;

  if (g.lumped_) {
    double total_thickness = 0;
    for (const auto& l : g.layers_) total_thickness += l.thickness;
    const double area = fp.die_width() * fp.die_height();
    const double perimeter = 2.0 * (fp.die_width() + fp.die_height());
    const double hA = h_top * area + h_nat * area + h_nat * perimeter * total_thickness;
    g.op_.resize(1, 1);
    g.op_.insert(0, 0) = hA;
    g.boundary_ = Eigen::VectorXd::Constant(1, hA);
  } else {
    const auto nlayer = static_cast<Eigen::Index>(g.layers_.size());
    const Eigen::Index n = nlayer * static_cast<Eigen::Index>(ncell);
    auto node = [&](Eigen::Index l, int i, int j) {
      return l * static_cast<Eigen::Index>(ncell) + static_cast<Eigen::Index>(j) * nx + i;
    };

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 7);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    g.boundary_ = Eigen::VectorXd::Zero(n);
    auto couple = [&](Eigen::Index a, Eigen::Index b, double cond) {
      trips.emplace_back(a, b, -cond);
      trips.emplace_back(b, a, -cond);
      diag[a] += cond;
      diag[b] += cond;
    };

    const double cell_area = dx * dy;
    for (Eigen::Index l = 0; l < nlayer; ++l) {
      const double k = g.layers_[l].material.conductivity;
      const double t = g.layers_[l].thickness;
      const double gx = k * dy * t / dx;
      const double gy = k * dx * t / dy;
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const Eigen::Index c = node(l, i, j);
          if (i + 1 < nx) couple(c, node(l, i + 1, j), gx);
          if (j + 1 < ny) couple(c, node(l, i, j + 1), gy);
          double gb = 0;
          if (i == 0) gb += robin(h_nat, dy * t, 0.5 * dx, k);
          if (i == nx - 1) gb += robin(h_nat, dy * t, 0.5 * dx, k);
          if (j == 0) gb += robin(h_nat, dx * t, 0.5 * dy, k);
          if (j == ny - 1) gb += robin(h_nat, dx * t, 0.5 * dy, k);
          if (l == 0) gb += robin(h_nat, cell_area, 0.5 * t, k);
          if (l == nlayer - 1) gb += robin(h_top, cell_area, 0.5 * t, k);
          g.boundary_[c] = gb;
          if (l + 1 < nlayer) {
            const double k2 = g.layers_[l + 1].material.conductivity;
            const double t2 = g.layers_[l + 1].thickness;
            couple(c, node(l + 1, i, j), 1.0 / (0.5 * t / (k * cell_area) + 0.5 * t2 / (k2 * cell_area)));
          }
        }
      }
    }
    for (Eigen::Index c = 0; c < n; ++c) trips.emplace_back(c, c, diag[c] + g.boundary_[c]);
    g.op_.resize(n, n);
    g.op_.setFromTriplets(trips.begin(), trips.end());
  }
  g.op_.makeCompressed();

  auto f = std::make_shared<ThermalGrid::Factorization>();
  f->ldlt.compute(g.op_);
  if (f->ldlt.info() != Eigen::Success)
    throw Error(ErrorKind::Solver, "conduction operator factorization failed (operator not SPD?)");
  g.factor_ = std::move(f);
  g.hash_ = grid_hash(fp, nx, ny, bc, g.layers_, g.lumped_);
  return g;
}

Eigen::VectorXd ThermalGrid::node_power(const Eigen::VectorXd& block_power) const {
  check_dimension(static_cast<Eigen::Index>(n_blocks()), block_power.size(), "node_power");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(op_.rows());
  if (lumped_) {
    q[0] = block_power.sum();
    return q;
  }
  for (std::size_t c = 0; c < cell_block_.size(); ++c) {
    const int b = cell_block_[c];
    if (b >= 0) q[static_cast<Eigen::Index>(c)] = block_power[b] / block_cells_[static_cast<std::size_t>(b)];
  }
  return q;
}

Eigen::VectorXd ThermalGrid::solve_rise(const Eigen::VectorXd& q) const {
  check_dimension(op_.rows(), q.size(), "solve_rise");
  const double qn = q.norm();
  if (qn == 0.0) return Eigen::VectorXd::Zero(q.size());

  Eigen::VectorXd x = factor_->ldlt.solve(q);
  Eigen::VectorXd r = q - op_ * x;
  if (r.norm() > kResidualTol * qn) {
    x += factor_->ldlt.solve(r);
    r = q - op_ * x;
  }
  const double rel = r.norm() / qn;
  if (!(rel <= kResidualTol) || !x.allFinite()) {
    std::ostringstream os;
    os << "steady-state solve did not converge: relative residual " << rel;
    throw Error(ErrorKind::Solver, os.str());
  }
  return x;
}

Eigen::VectorXd ThermalGrid::die_surface(const Eigen::VectorXd& node_values) const {
  check_dimension(op_.rows(), node_values.size(), "die_surface");
  const auto ncell = static_cast<Eigen::Index>(cells_per_layer());
  if (lumped_) return Eigen::VectorXd::Constant(ncell, node_values[0]);
  return node_values.head(ncell);
}

Eigen::VectorXd ThermalGrid::block_mean(const Eigen::VectorXd& node_values) const {
  const Eigen::VectorXd surface = die_surface(node_values);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_blocks()));
  for (std::size_t c = 0; c < cell_block_.size(); ++c)
    if (cell_block_[c] >= 0) out[cell_block_[c]] += surface[static_cast<Eigen::Index>(c)];
  for (std::size_t b = 0; b < n_blocks(); ++b) out[static_cast<Eigen::Index>(b)] /= block_cells_[b];
  return out;
}

Eigen::VectorXd solve_nodes(const ThermalGrid& grid, const PowerMap& p) {
  check_power_map(p, static_cast<Eigen::Index>(grid.n_blocks()), "solve_steady");
  return grid.solve_rise(grid.node_power(p.values));
}

ThermalMap solve_steady(const ThermalGrid& grid, const PowerMap& p) {
  const Eigen::VectorXd rise = grid.block_mean(solve_nodes(grid, p));
  return {(rise.array() + grid.bc().inlet_temperature).matrix(), TemperatureKind::Celsius, Provenance::Forward};
}

ResponseMatrix build_response_matrix(const ThermalGrid& grid, unsigned threads) {
  const auto n = static_cast<Eigen::Index>(grid.n_blocks());
  ResponseMatrix R;
  R.matrix.resize(n, n);
  R.nx = grid.nx();
  R.ny = grid.ny();
  R.key = grid.metadata_hash();
  R.block_names = grid.floorplan().block_names();

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));

  std::atomic<Eigen::Index> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  Eigen::Index failed_column = -1;

  auto worker = [&] {
    for (Eigen::Index col = next++; col < n; col = next++) {
      try {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
        unit[col] = 1.0;
        R.matrix.col(col) = grid.block_mean(grid.solve_rise(grid.node_power(unit)));
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error || col < failed_column) {
          first_error = std::current_exception();
          failed_column = col;
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const Error& e) {
      throw Error(e.kind(), "response matrix column " + std::to_string(failed_column) + " ('" +
                                R.block_names[static_cast<std::size_t>(failed_column)] + "'): " + e.what());
    }
  }
  return R;
}

ThermalMap forward(const ResponseMatrix& R, const PowerMap& p) {
  return {forward(R, p.values), TemperatureKind::Rise, Provenance::Forward};
}

double validate_model(const ResponseMatrix& R, const ThermalOracle& measure, const PowerMap& base_p,
                      std::size_t delta_block, double delta_w) {
  check_power_map(base_p, R.size(), "validate_model");
  if (delta_block >= static_cast<std::size_t>(R.size()))
    throw Error(ErrorKind::Dimension, "validate_model: block index out of range");
  PowerMap perturbed = base_p;
  perturbed.values[static_cast<Eigen::Index>(delta_block)] += delta_w;
  check_power_map(perturbed, R.size(), "validate_model (perturbed)");

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(R.size());
  delta[static_cast<Eigen::Index>(delta_block)] = delta_w;
  const Eigen::VectorXd predicted = forward(R, delta);
  const Eigen::VectorXd measured = measure(perturbed).values - measure(base_p).values;

  const double scale = predicted.lpNorm<Eigen::Infinity>();
  const double err = (measured - predicted).lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return err;
  return err / scale;
}

double validate_model(const ThermalGrid& grid, const ResponseMatrix& R, const PowerMap& base_p,
                      std::size_t delta_block, double delta_w) {
  return validate_model(R, [&](const PowerMap& p) { return solve_steady(grid, p); }, base_p, delta_block,
                        delta_w);
}

PowerMap reference_power_map(const Floorplan& fp) {
  PowerMap p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fp.size())), Provenance::Synthetic};
  for (std::size_t i = 0; i < fp.size(); ++i) {
    double w = 0;
    switch (fp[i].device_class) {
      case DeviceClass::CpuCore: w = 6.0; break;
      case DeviceClass::L2Cache: w = 2.0; break;
      case DeviceClass::GpuSimd: w = 12.0; break;
      case DeviceClass::GpuAux: w = 3.0; break;
      case DeviceClass::Unb: w = 2.0; break;
      case DeviceClass::Gmc: w = 2.0; break;
      case DeviceClass::Other: w = 1.0; break;
    }
    p.values[static_cast<Eigen::Index>(i)] = w;
  }
  return p;
}

}  // namespace thermap
