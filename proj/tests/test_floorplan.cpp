#include <doctest.h>

#include <random>

#include "thermap/error.hpp"
#include "thermap/floorplan.hpp"
#include "thermap/io.hpp"

using namespace thermap;

namespace {

Block blk(std::string name, double x, double y, double w, double h, DeviceClass c = DeviceClass::CpuCore) {
  return {std::move(name), {x, y, w, h}, c, c == DeviceClass::CpuCore};
}

std::string what_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

double class_area(const Floorplan& fp, std::initializer_list<DeviceClass> classes) {
  double a = 0;
  for (const auto& b : fp.blocks())
    for (auto c : classes)
      if (b.device_class == c) a += b.rect.area();
  return a;
}

}  // namespace

TEST_CASE("single 1 cm block parses") {
  const auto fp = parse_floorplan(R"({
    "die": {"width_m": 0.01, "height_m": 0.01},
    "blocks": [{"name": "A", "x_m": 0, "y_m": 0, "w_m": 0.01, "h_m": 0.01, "class": "CpuCore", "host_capable": true}]
  })");
  CHECK(fp.size() == 1);
  CHECK(fp.die_thickness() == doctest::Approx(750e-6));
  CHECK(block_areas(fp)[0] == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("overlap error names both blocks") {
  const auto msg = what_of([] {
    Floorplan(0.01, 0.01, 750e-6, {blk("alpha", 0, 0, 0.006, 0.006), blk("beta", 0.005, 0.005, 0.004, 0.004)});
  });
  CHECK(msg.find("alpha") != std::string::npos);
  CHECK(msg.find("beta") != std::string::npos);
}

TEST_CASE("shared edges are not overlaps") {
  CHECK_NOTHROW(Floorplan(0.01, 0.01, 750e-6, {blk("a", 0, 0, 0.005, 0.01), blk("b", 0.005, 0, 0.005, 0.01)}));
}

TEST_CASE("validation rejects bad geometry and names the block") {
  CHECK(what_of([] { Floorplan(0.01, 0.01, 750e-6, {blk("out", 0.008, 0, 0.004, 0.004)}); }).find("out") !=
        std::string::npos);
  CHECK(what_of([] { Floorplan(0.01, 0.01, 750e-6, {blk("flat", 0, 0, 0.004, 0)}); }).find("flat") !=
        std::string::npos);
  CHECK(what_of([] {
          Floorplan(0.01, 0.01, 750e-6, {blk("twin", 0, 0, 0.002, 0.002), blk("twin", 0.005, 0.005, 0.002, 0.002)});
        }).find("twin") != std::string::npos);
  CHECK(what_of([] { Floorplan(0.01, 0.01, 750e-6, {blk("cache", 0, 0, 0.002, 0.002, DeviceClass::L2Cache)}); })
            .find("host") != std::string::npos);
  CHECK(what_of([] {
          Floorplan(0.01, 0.01, 750e-6,
                    {blk("c", 0, 0, 0.002, 0.002), Block{"l2", {0.003, 0, 0.002, 0.002}, DeviceClass::L2Cache, true}});
        }).find("l2") != std::string::npos);
  CHECK_THROWS_AS(Floorplan(0, 0.01, 750e-6, {blk("c", 0, 0, 0.001, 0.001)}), Error);
}

TEST_CASE("parse errors") {
  auto kind = [](std::string_view text) {
    try {
      parse_floorplan(text);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Input;
  };
  CHECK(kind("{ not json") == ErrorKind::Parse);
  CHECK(kind(R"({"blocks": []})") == ErrorKind::Parse);
  CHECK(kind(R"({"die": {"width_m": 0.01, "height_m": 0.01},
                 "blocks": [{"name": "A", "x_m": 0, "y_m": 0, "w_m": 0.01, "h_m": 0.01, "class": "Npu"}]})") ==
        ErrorKind::Parse);
  CHECK(kind(R"({"die": {"width_m": 0.01, "height_m": 0.01},
                 "blocks": [{"name": "A", "x_m": 0, "y_m": 0, "w_m": 0.02, "h_m": 0.01, "class": "CpuCore",
                             "host_capable": true}]})") == ErrorKind::Validation);
}

TEST_CASE("built-in APU layout") {
  const auto fp = builtin_apu_floorplan();
  REQUIRE(fp.size() == 11);
  CHECK(fp.approximate());
  CHECK(fp.indices_of(DeviceClass::CpuCore).size() == 4);
  CHECK(fp.indices_of(DeviceClass::L2Cache).size() == 2);
  CHECK(fp.indices_of(DeviceClass::GpuSimd).size() == 1);
  CHECK(fp.indices_of(DeviceClass::GpuAux).size() == 1);
  CHECK(fp.indices_of(DeviceClass::Unb).size() == 1);
  CHECK(fp.indices_of(DeviceClass::Gmc).size() == 1);
  CHECK(fp.host_capable_indices() == std::vector<std::size_t>{0, 1, 2, 3});

  const auto core = [&](int i) { return *fp.index_of("Core" + std::to_string(i)); };
  CHECK(distance_to_gpu(fp, core(3)) < distance_to_gpu(fp, core(0)));
  for (int i = 0; i < 3; ++i) CHECK(distance_to_gpu(fp, core(i + 1)) < distance_to_gpu(fp, core(i)));

  const double gpu = class_area(fp, {DeviceClass::GpuSimd, DeviceClass::GpuAux});
  const double cpu = class_area(fp, {DeviceClass::CpuCore});
  CHECK(gpu / cpu >= 1.5);

  // GPU on one side of the die, the CPU cores to its right.
  for (auto c : fp.indices_of(DeviceClass::CpuCore))
    for (auto g : fp.indices_of(DeviceClass::GpuSimd)) CHECK(fp[c].rect.x >= fp[g].rect.right() - 1e-12);

  CHECK(block_areas(fp).sum() <= fp.die_width() * fp.die_height() * (1 + 1e-12));
}

TEST_CASE("merged GPU variant") {
  const auto fp = builtin_apu_floorplan(true);
  CHECK(fp.size() == 10);
  CHECK(fp.indices_of(DeviceClass::GpuAux).empty());
  CHECK(class_area(fp, {DeviceClass::GpuSimd}) ==
        doctest::Approx(class_area(builtin_apu_floorplan(), {DeviceClass::GpuSimd, DeviceClass::GpuAux})));
}

TEST_CASE("serialize round trip and shipped file") {
  const auto fp = builtin_apu_floorplan();
  CHECK(parse_floorplan(serialize_floorplan(fp)) == fp);
  CHECK(parse_floorplan(read_text_file(std::string(THERMAP_DATA_DIR) + "/apu_floorplan.json")) == fp);
}

TEST_CASE("equal blocks have equal areas") {
  const Floorplan fp(0.01, 0.01, 750e-6, {blk("a", 0, 0, 0.003, 0.002), blk("b", 0.005, 0.005, 0.003, 0.002)});
  const auto a = block_areas(fp);
  CHECK(a[0] == a[1]);
}

TEST_CASE("property: accepted random floorplans are disjoint, in bounds and round trip") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double W = 0.005 + 0.02 * u(rng), H = 0.005 + 0.02 * u(rng);
    std::vector<Block> blocks;
    const int n = 1 + static_cast<int>(u(rng) * 6);
    for (int k = 0; k < n; ++k) {
      const double w = W * (0.05 + 0.4 * u(rng)), h = H * (0.05 + 0.4 * u(rng));
      const double x = (W - w) * u(rng) * 1.1, y = (H - h) * u(rng) * 1.1;
      blocks.push_back(blk("b" + std::to_string(k), x, y, w, h, k == 0 ? DeviceClass::CpuCore : DeviceClass::Other));
    }
    try {
      const Floorplan fp(W, H, 750e-6, blocks);
      ++accepted;
      for (std::size_t i = 0; i < fp.size(); ++i) {
        const auto& r = fp[i].rect;
        CHECK(r.x >= -1e-12);
        CHECK(r.y >= -1e-12);
        CHECK(r.right() <= W + 1e-12);
        CHECK(r.top() <= H + 1e-12);
        for (std::size_t j = i + 1; j < fp.size(); ++j) CHECK_FALSE(interiors_overlap(r, fp[j].rect));
      }
      CHECK(parse_floorplan(serialize_floorplan(fp)) == fp);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      ++rejected;
    }
  }
  CHECK(accepted > 20);
  CHECK(rejected > 20);
}

TEST_CASE("rect distance") {
  const Rect a{0, 0, 1, 1}, b{2, 0, 1, 1}, c{4, 5, 1, 1};
  CHECK(rect_distance(a, b) == doctest::Approx(1.0));
  CHECK(rect_distance(a, c) == doctest::Approx(5.0));
  CHECK(rect_distance(a, Rect{1, 0, 1, 1}) == 0.0);
}
