#include <doctest.h>

#include <random>

#include "thermap/electrothermal.hpp"
#include "thermap/error.hpp"
#include "thermap/thermal.hpp"

using namespace thermap;

namespace {

Floorplan one_block(double size = 0.01) {
  return Floorplan(size, size, 750e-6, {Block{"A", {0, 0, size, size}, DeviceClass::CpuCore, true}});
}

const ThermalGrid& apu_grid() {
  static const ThermalGrid g = build_grid(builtin_apu_floorplan(), 64, 64);
  return g;
}

const ResponseMatrix& apu_R() {
  static const ResponseMatrix R = build_response_matrix(apu_grid());
  return R;
}

PowerMap random_power(std::mt19937& rng, Eigen::Index n, double scale = 10.0) {
  std::uniform_real_distribution<double> u(0.0, scale);
  PowerMap p{Eigen::VectorXd(n), Provenance::Synthetic};
  for (Eigen::Index i = 0; i < n; ++i) p.values[i] = u(rng);
  return p;
}

}  // namespace

TEST_CASE("material table") {
  CHECK(materials::silicon.density == 2330.0);
  CHECK(materials::silicon.conductivity == 148.0);
  CHECK(materials::silicon.specific_heat == 703.0);
  CHECK(materials::sapphire.density == 4050.0);
  CHECK(materials::sapphire.conductivity == 35.0);
  CHECK(materials::sapphire.specific_heat == 761.0);
  CHECK(materials::mineral_oil.density == 838.0);
  CHECK(materials::mineral_oil.conductivity == 0.138);
  CHECK(materials::mineral_oil.specific_heat == 1670.0);
}

TEST_CASE("boundary condition defaults and validation") {
  BoundaryConditions bc;
  CHECK(bc.inlet_temperature == 12.1);
  CHECK(bc.h_natural == 5.0);
  CHECK(bc.recorded_flow_rate_gpm == 1.4);
  CHECK(bc.recorded_pressure_psi == 28.0);
  CHECK_NOTHROW(bc.validate());
  bc.effective_h_top = 4.0;
  CHECK_THROWS_AS(bc.validate(), Error);
  bc = {};
  bc.inlet_temperature = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bc.validate(), Error);
}

TEST_CASE("grid sizing") {
  const auto g = build_grid(one_block(), 4, 4);
  CHECK(g.cells_per_layer() == 16);
  CHECK(g.unknowns() == 48);
  CHECK(g.block_cell_count()[0] == 16);
  CHECK_THROWS_AS(build_grid(one_block(), 3, 8), Error);
}

TEST_CASE("block thinner than a cell is a resolution error naming it") {
  const Floorplan fp(0.01, 0.01, 750e-6,
                     {Block{"wide", {0, 0, 0.009, 0.01}, DeviceClass::CpuCore, true},
                      Block{"sliver", {0.0095, 0, 0.0005, 0.01}, DeviceClass::Other, false}});
  try {
    build_grid(fp, 4, 4);
    FAIL("expected a resolution error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("sliver") != std::string::npos);
  }
  CHECK_NOTHROW(build_grid(fp, 64, 64));
}

TEST_CASE("built-in floorplan at 64x64 covers every block") {
  for (int c : apu_grid().block_cell_count()) CHECK(c >= 1);
}

TEST_CASE("operator is symmetric") {
  const Eigen::SparseMatrix<double> A = apu_grid().conduction_operator();
  const Eigen::SparseMatrix<double> At = A.transpose();
  CHECK((A - At).norm() <= 1e-12 * A.norm());
}

TEST_CASE("zero power gives the inlet temperature exactly") {
  const auto t = solve_steady(apu_grid(), PowerMap{Eigen::VectorXd::Zero(11)});
  for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(t.values[i] == 12.1);
}

TEST_CASE("lumped analytic case") {
  const auto fp = one_block(0.012);
  BoundaryConditions bc;
  GridOptions opt;
  opt.lumped = true;
  const auto g = build_grid(fp, 4, 4, bc, opt);
  const double Q = 37.5;
  const double thickness = 750e-6 + 2e-6 + 1e-3;
  const double A = 0.012 * 0.012;
  const double hA = bc.effective_h_top * A + bc.h_natural * A + bc.h_natural * 4 * 0.012 * thickness;
  const auto t = solve_steady(g, PowerMap{Eigen::VectorXd::Constant(1, Q)});
  CHECK(std::abs(t.values[0] - (bc.inlet_temperature + Q / hA)) <= 1e-9);
}

TEST_CASE("energy conservation") {
  std::mt19937 rng(11);
  for (int k = 0; k < 5; ++k) {
    const auto p = random_power(rng, 11);
    const auto rise = solve_nodes(apu_grid(), p);
    const double out = apu_grid().boundary_conductance().dot(rise);
    CHECK(std::abs(out - p.total()) <= 1e-6 * p.total());
  }
}

TEST_CASE("top boundary conductance of a window cell") {
  const auto& g = apu_grid();
  const double dx = 18e-3 / 64, dy = 15e-3 / 64, t = 1e-3, k = 35.0;
  const double h = g.bc().effective_h_top;
  const double expect = 1.0 / (0.5 * t / (k * dx * dy) + 1.0 / (h * dx * dy));
  const Eigen::Index interior = 2 * 64 * 64 + 30 * 64 + 30;
  CHECK(g.boundary_conductance()[interior] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("superposition and homogeneity") {
  std::mt19937 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto p1 = random_power(rng, 11), p2 = random_power(rng, 11);
    const auto t1 = solve_steady(apu_grid(), p1).to_rise(12.1).values;
    const auto t2 = solve_steady(apu_grid(), p2).to_rise(12.1).values;
    const auto t12 = solve_steady(apu_grid(), PowerMap{p1.values + p2.values}).to_rise(12.1).values;
    CHECK((t12 - t1 - t2).lpNorm<Eigen::Infinity>() <= 1e-9);
    const auto t3 = solve_steady(apu_grid(), PowerMap{2.5 * p1.values}).to_rise(12.1).values;
    CHECK((t3 - 2.5 * t1).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("solving twice is bit-identical") {
  std::mt19937 rng(5);
  const auto p = random_power(rng, 11);
  CHECK(solve_steady(apu_grid(), p).values == solve_steady(apu_grid(), p).values);
}

TEST_CASE("discrete maximum principle over random maps") {
  const auto g = build_grid(builtin_apu_floorplan(), 32, 32);
  std::mt19937 rng(17);
  for (int k = 0; k < 100; ++k) {
    auto p = random_power(rng, 11);
    if (k % 3 == 0) p.values.setZero(), p.values[k % 11] = 5.0;
    const auto t = solve_steady(g, p);
    CHECK(t.values.minCoeff() >= 12.1);
    CHECK(solve_nodes(g, p).minCoeff() >= 0.0);
  }
}

TEST_CASE("power on the small CPU cores runs hotter than on the GPU") {
  const auto& fp = apu_grid().floorplan();
  PowerMap cpu{Eigen::VectorXd::Zero(11)}, gpu{Eigen::VectorXd::Zero(11)};
  for (auto i : fp.indices_of(DeviceClass::CpuCore)) cpu.values[static_cast<Eigen::Index>(i)] = 5.0;
  const double gpu_area = 7.5 * 15.0, simd = 7.5 * 12.0;
  gpu.values[*fp.index_of("GpuSimd")] = 20.0 * simd / gpu_area;
  gpu.values[*fp.index_of("GpuAux")] = 20.0 * (gpu_area - simd) / gpu_area;
  CHECK(solve_steady(apu_grid(), cpu).values.maxCoeff() > solve_steady(apu_grid(), gpu).values.maxCoeff());
}

TEST_CASE("one-block response matrix is the self-heating per watt") {
  const auto g = build_grid(one_block(), 8, 8);
  const auto R = build_response_matrix(g);
  REQUIRE(R.size() == 1);
  const double rise = solve_steady(g, PowerMap{Eigen::VectorXd::Constant(1, 1.0)}).values[0] - 12.1;
  CHECK(R.matrix(0, 0) == doctest::Approx(rise).epsilon(1e-12));
}

TEST_CASE("response matrix entries") {
  const auto& R = apu_R().matrix;
  CHECK(R.minCoeff() > 0);
  for (Eigen::Index i = 0; i < R.rows(); ++i)
    for (Eigen::Index j = 0; j < R.cols(); ++j) CHECK(R(i, i) >= R(i, j));
  CHECK(apu_R().key == apu_grid().metadata_hash());
  CHECK(apu_R().block_names == apu_grid().floorplan().block_names());
}

TEST_CASE("response matrix does not depend on the worker count") {
  const auto g = build_grid(builtin_apu_floorplan(), 24, 20);
  CHECK(build_response_matrix(g, 1).matrix == build_response_matrix(g, 4).matrix);
}

TEST_CASE("forward model") {
  const auto& R = apu_R();
  CHECK(forward(R, Eigen::VectorXd::Zero(11)).isZero(0));
  for (Eigen::Index i = 0; i < 11; ++i) CHECK(forward(R, Eigen::VectorXd::Unit(11, i)) == R.matrix.col(i));
  std::mt19937 rng(23);
  const auto p1 = random_power(rng, 11), p2 = random_power(rng, 11);
  CHECK((forward(R, p1.values + p2.values) - forward(R, p1.values) - forward(R, p2.values)).norm() <= 1e-12);
  CHECK(forward(R, p1).kind == TemperatureKind::Rise);
  CHECK_THROWS_AS(forward(R, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("forward matches the full solve") {
  std::mt19937 rng(29);
  for (int k = 0; k < 50; ++k) {
    const auto p = random_power(rng, 11);
    const auto full = solve_steady(apu_grid(), p).to_rise(12.1).values;
    CHECK((forward(apu_R(), p.values) - full).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("perturbation validation") {
  const auto base = reference_power_map(apu_grid().floorplan());
  CHECK(validate_model(apu_grid(), apu_R(), base, 0, 2.0) <= 1e-9);
  CHECK(validate_model(apu_grid(), apu_R(), base, 7, 5.0) <= 1e-9);
  CHECK(validate_model(apu_grid(), apu_R(), base, 3, 0.0) == 0.0);
  CHECK_THROWS_AS(validate_model(apu_grid(), apu_R(), base, 0, -100.0), Error);

  // Leakage feedback makes the measured response nonlinear.
  const std::vector<LeakageModel> leak(11, LeakageModel{0.2, 50.0, 25.0});
  const ThermalOracle coupled = [&](const PowerMap& p) {
    return fixed_point(apu_R(), p, leak, 12.1, FixedPointOptions{0.5, 1e-10, 1000, 150}).t;
  };
  CHECK(validate_model(apu_R(), coupled, base, 0, 5.0) > 1e-3);
}

TEST_CASE("reference power map") {
  const auto p = reference_power_map(builtin_apu_floorplan());
  CHECK(p.total() == doctest::Approx(48.0));
  CHECK((p.values.array() > 0).all());
}

TEST_CASE("grid refinement: 128x128 vs 64x64 peak within 2%") {
  const auto fp = builtin_apu_floorplan();
  const auto p = reference_power_map(fp);
  const double t64 = solve_steady(apu_grid(), p).values.maxCoeff();
  const double t128 = solve_steady(build_grid(fp, 128, 128), p).values.maxCoeff();
  CHECK(std::abs(t128 - t64) <= 0.02 * t128);
  CHECK(std::abs((t128 - 12.1) - (t64 - 12.1)) <= 0.02 * (t128 - 12.1));
}

TEST_CASE("invalid power maps are rejected") {
  PowerMap bad{Eigen::VectorXd::Ones(11)};
  bad.values[2] = -1;
  CHECK_THROWS_AS(solve_steady(apu_grid(), bad), Error);
  CHECK_THROWS_AS(solve_steady(apu_grid(), PowerMap{Eigen::VectorXd::Ones(4)}), Error);
  bad.values[2] = std::nan("");
  CHECK_THROWS_AS(solve_steady(apu_grid(), bad), Error);
}

TEST_CASE("metadata hash tracks the inputs") {
  const auto fp = builtin_apu_floorplan();
  BoundaryConditions bc;
  const auto h0 = build_grid(fp, 16, 16, bc).metadata_hash();
  CHECK(build_grid(fp, 16, 16, bc).metadata_hash() == h0);
  CHECK(build_grid(fp, 16, 20, bc).metadata_hash() != h0);
  bc.effective_h_top = 9000;
  CHECK(build_grid(fp, 16, 16, bc).metadata_hash() != h0);
}
