#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "thermap/floorplan.hpp"
#include "thermap/maps.hpp"

namespace thermap {

/// Bulk material data. Density and heat capacity are carried for a future
/// transient mode; the steady-state operator only reads conductivity.
struct MaterialProperties {
  double density;        // kg/m^3
  double conductivity;   // W/(m K)
  double specific_heat;  // J/(kg K)
};

namespace materials {
inline constexpr MaterialProperties silicon{2330.0, 148.0, 703.0};
inline constexpr MaterialProperties sapphire{4050.0, 35.0, 761.0};
inline constexpr MaterialProperties mineral_oil{838.0, 0.138, 1670.0};
inline constexpr double mineral_oil_viscosity = 14.246e-3;  // Pa s, recorded only
}  // namespace materials

struct BoundaryConditions {
  double inlet_temperature = 12.1;  // degC
  /// Effective convection coefficient on top of the window, standing in for
  /// the oil channel. 100 W spread uniformly over the built-in die rises
  /// about 63 K; a 40 W mixed load peaks in the 60-70 degC range.
  double effective_h_top = 8000.0;  // W/(m^2 K)
  double h_natural = 5.0;            // W/(m^2 K), every other external wall
  double recorded_flow_rate_gpm = 1.4;
  double recorded_pressure_psi = 28.0;

  void validate() const;
};

struct Layer {
  std::string name;
  MaterialProperties material;
  double thickness;  // m
};

/// Silicon die (floorplan thickness), 2 um oil TIM, sapphire window.
std::vector<Layer> default_layer_stack(const Floorplan& fp, double window_thickness = 1e-3);

struct GridOptions {
  /// Bottom-to-top layer stack; empty selects default_layer_stack().
  std::vector<Layer> layers;
  /// Collapse the whole stack into one isothermal node (conduction disabled).
  /// Used as an analytic sanity configuration: T = T_inlet + Q / sum(h A).
  bool lumped = false;
};

/// Finite-volume discretization of the die + TIM + window stack: uniform
/// nx x ny cells per layer, one cell through each layer's thickness. Power
/// enters the die layer; Robin boundaries reference the inlet temperature,
/// so the unknowns are temperature rises and the operator is SPD.
class ThermalGrid {
 public:
  const Floorplan& floorplan() const { return *floorplan_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const BoundaryConditions& bc() const { return bc_; }
  const std::vector<Layer>& layers() const { return layers_; }
  bool lumped() const { return lumped_; }
  std::size_t n_blocks() const { return floorplan_->size(); }

  /// Block index per surface cell (row-major, y outer), -1 for background silicon.
  const std::vector<int>& cell_block() const { return cell_block_; }
  const std::vector<int>& block_cell_count() const { return block_cells_; }
  std::size_t cells_per_layer() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  Eigen::Index unknowns() const { return op_.rows(); }
  const Eigen::SparseMatrix<double>& conduction_operator() const { return op_; }
  /// Conductance from each node to the inlet reference through its external faces, W/K.
  const Eigen::VectorXd& boundary_conductance() const { return boundary_; }

  /// Stable 64-bit digest of geometry, resolution, stack and boundary conditions.
  std::uint64_t metadata_hash() const { return hash_; }

  /// Spreads per-block power uniformly over the block's die-layer cells.
  Eigen::VectorXd node_power(const Eigen::VectorXd& block_power) const;
  /// Solves operator * rise = node_power. Throws Error(Solver) if the relative
  /// residual exceeds 1e-10 after one refinement step.
  Eigen::VectorXd solve_rise(const Eigen::VectorXd& node_power) const;
  /// Die-layer value per surface cell.
  Eigen::VectorXd die_surface(const Eigen::VectorXd& node_values) const;
  /// Mean of the die-layer values over each block's cells.
  Eigen::VectorXd block_mean(const Eigen::VectorXd& node_values) const;

  friend ThermalGrid build_grid(const Floorplan&, int, int, const BoundaryConditions&, GridOptions);

 private:
  ThermalGrid() = default;

  struct Factorization;

  std::shared_ptr<const Floorplan> floorplan_;
  int nx_ = 0, ny_ = 0;
  BoundaryConditions bc_;
  std::vector<Layer> layers_;
  bool lumped_ = false;
  std::vector<int> cell_block_;
  std::vector<int> block_cells_;
  Eigen::SparseMatrix<double> op_;
  Eigen::VectorXd boundary_;
  std::shared_ptr<const Factorization> factor_;
  std::uint64_t hash_ = 0;
};

/// Assembles and factorizes. Requires nx, ny >= 4 and every block to own at
/// least one cell center; otherwise throws naming the uncovered block.
ThermalGrid build_grid(const Floorplan& fp, int nx, int ny, const BoundaryConditions& bc = {},
                       GridOptions options = {});

/// Per-block mean die temperature (degC) for a block power map (W).
ThermalMap solve_steady(const ThermalGrid& grid, const PowerMap& p);

/// Per-node temperature rise for a block power map; used for rasters and
/// energy bookkeeping.
Eigen::VectorXd solve_nodes(const ThermalGrid& grid, const PowerMap& p);

/// Linear map from block power (W) to mean block temperature rise (K).
struct ResponseMatrix {
  Eigen::MatrixXd matrix;
  int nx = 0, ny = 0;
  std::uint64_t key = 0;  ///< ThermalGrid::metadata_hash() of the source grid
  std::vector<std::string> block_names;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Column i is the rise produced by 1 W in block i. Columns are independent
/// and are solved on up to `threads` workers (0 = hardware concurrency).
ResponseMatrix build_response_matrix(const ThermalGrid& grid, unsigned threads = 0);

/// t = R p, as a temperature rise.
template <typename Derived>
Eigen::VectorXd forward(const ResponseMatrix& R, const Eigen::MatrixBase<Derived>& p) {
  check_dimension(R.size(), p.size(), "forward");
  return R.matrix * p;
}

ThermalMap forward(const ResponseMatrix& R, const PowerMap& p);

using ThermalOracle = std::function<ThermalMap(const PowerMap&)>;

/// Perturbation check of R: apply delta_w to one block on top of base_p,
/// measure both states with `measure`, and compare the measured difference
/// with R * delta. Returns the max-norm error relative to |R * delta|_inf
/// (zero when delta is zero).
double validate_model(const ResponseMatrix& R, const ThermalOracle& measure, const PowerMap& base_p,
                      std::size_t delta_block, double delta_w);

/// Same, measuring with solve_steady() on `grid`.
double validate_model(const ThermalGrid& grid, const ResponseMatrix& R, const PowerMap& base_p,
                      std::size_t delta_block, double delta_w);

/// Fixed mixed-load power map used for refinement and inversion studies
/// (~48 W on the built-in floorplan). Blocks are filled by device class.
PowerMap reference_power_map(const Floorplan& fp);

}  // namespace thermap
