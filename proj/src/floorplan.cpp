#include "thermap/floorplan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "thermap/error.hpp"

namespace thermap {

namespace {

constexpr std::array<std::pair<DeviceClass, std::string_view>, 7> kClassNames{{
    {DeviceClass::CpuCore, "CpuCore"},
    {DeviceClass::L2Cache, "L2Cache"},
    {DeviceClass::GpuSimd, "GpuSimd"},
    {DeviceClass::GpuAux, "GpuAux"},
    {DeviceClass::Unb, "Unb"},
    {DeviceClass::Gmc, "Gmc"},
    {DeviceClass::Other, "Other"},
}};

// Coordinates are compared with a picometer slack so that rectangles built
// from decimal millimeters can share edges.
constexpr double kGeomTol = 1e-12;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }

}  // namespace

std::string_view to_string(DeviceClass c) {
  for (const auto& [k, name] : kClassNames)
    if (k == c) return name;
  return "Other";
}

std::optional<DeviceClass> device_class_from_string(std::string_view s) {
  for (const auto& [k, name] : kClassNames)
    if (name == s) return k;
  return std::nullopt;
}

bool interiors_overlap(const Rect& a, const Rect& b, double tol) {
  const double ox = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double oy = std::min(a.top(), b.top()) - std::max(a.y, b.y);
  return ox > tol && oy > tol;
}

double rect_distance(const Rect& a, const Rect& b) {
  const double dx = std::max({0.0, a.x - b.right(), b.x - a.right()});
  const double dy = std::max({0.0, a.y - b.top(), b.y - a.top()});
  return std::hypot(dx, dy);
}

Floorplan::Floorplan(double die_width, double die_height, double die_thickness,
                     std::vector<Block> blocks, std::string name, bool approximate)
    : die_width_(die_width),
      die_height_(die_height),
      die_thickness_(die_thickness),
      blocks_(std::move(blocks)),
      name_(std::move(name)),
      approximate_(approximate) {
  if (!(die_width_ > 0) || !(die_height_ > 0) || !(die_thickness_ > 0))
    invalid("die dimensions must be positive");
  if (blocks_.empty()) invalid("floorplan has no blocks");

  std::set<std::string, std::less<>> names;
  bool any_host = false;
  for (const auto& b : blocks_) {
    if (b.name.empty()) invalid("block with empty name");
    if (!names.insert(b.name).second) invalid("duplicate block name '" + b.name + "'");
    const auto& r = b.rect;
    if (!(r.width > 0) || !(r.height > 0))
      invalid("block '" + b.name + "' has non-positive width or height");
    if (r.x < -kGeomTol || r.y < -kGeomTol || r.right() > die_width_ + kGeomTol ||
        r.top() > die_height_ + kGeomTol)
      invalid("block '" + b.name + "' lies outside the die");
    if (b.host_capable && b.device_class != DeviceClass::CpuCore)
      invalid("block '" + b.name + "' is host_capable but not a CpuCore");
    any_host = any_host || b.host_capable;
  }
  if (!any_host) invalid("floorplan has no host_capable block");

  for (std::size_t i = 0; i < blocks_.size(); ++i)
    for (std::size_t j = i + 1; j < blocks_.size(); ++j)
      if (interiors_overlap(blocks_[i].rect, blocks_[j].rect, kGeomTol))
        invalid("blocks '" + blocks_[i].name + "' and '" + blocks_[j].name + "' overlap");
}

std::optional<std::size_t> Floorplan::index_of(std::string_view block_name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == block_name) return i;
  return std::nullopt;
}

std::vector<std::size_t> Floorplan::indices_of(DeviceClass c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].device_class == c) out.push_back(i);
  return out;
}

std::vector<std::size_t> Floorplan::host_capable_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].host_capable) out.push_back(i);
  return out;
}

std::vector<std::string> Floorplan::block_names() const {
  std::vector<std::string> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.name);
  return out;
}

Floorplan parse_floorplan(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("floorplan: ") + e.what());
  }

  std::string current = "<die>";
  try {
    const auto& die = doc.at("die");
    const double w = die.at("width_m").get<double>();
    const double h = die.at("height_m").get<double>();
    const double t = die.value("thickness_m", Floorplan::kDefaultThickness);

    std::vector<Block> blocks;
    for (const auto& jb : doc.at("blocks")) {
      current = jb.value("name", std::string("<unnamed>"));
      Block b;
      b.name = jb.at("name").get<std::string>();
      b.rect = {jb.at("x_m").get<double>(), jb.at("y_m").get<double>(), jb.at("w_m").get<double>(),
                jb.at("h_m").get<double>()};
      const auto cls = jb.at("class").get<std::string>();
      const auto dc = device_class_from_string(cls);
      if (!dc) throw Error(ErrorKind::Parse, "floorplan: block '" + b.name + "' has unknown class '" + cls + "'");
      b.device_class = *dc;
      b.host_capable = jb.value("host_capable", false);
      blocks.push_back(std::move(b));
    }
    return Floorplan(w, h, t, std::move(blocks), doc.value("name", std::string{}),
                     doc.value("approximate", false));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "floorplan: in '" + current + "': " + e.what());
  }
}

std::string serialize_floorplan(const Floorplan& fp) {
  using nlohmann::ordered_json;
  ordered_json doc;
  if (!fp.name().empty()) doc["name"] = fp.name();
  doc["approximate"] = fp.approximate();
  doc["die"] = {{"width_m", fp.die_width()}, {"height_m", fp.die_height()}, {"thickness_m", fp.die_thickness()}};
  auto blocks = ordered_json::array();
  for (const auto& b : fp.blocks()) {
    blocks.push_back({{"name", b.name},
                      {"x_m", b.rect.x},
                      {"y_m", b.rect.y},
                      {"w_m", b.rect.width},
                      {"h_m", b.rect.height},
                      {"class", std::string(to_string(b.device_class))},
                      {"host_capable", b.host_capable}});
  }
  doc["blocks"] = std::move(blocks);
  return doc.dump(2) + "\n";
}

Floorplan builtin_apu_floorplan(bool merge_gpu) {
  constexpr double mm = 1e-3;
  auto blk = [&](const char* name, double x, double y, double w, double h, DeviceClass c) {
    return Block{name, {x * mm, y * mm, w * mm, h * mm}, c, c == DeviceClass::CpuCore};
  };
  using C = DeviceClass;
  std::vector<Block> blocks{
      // x86 modules: M1 = {Core0, Core1}, M2 = {Core2, Core3}; core row y in [5, 10] mm.
      blk("Core0", 12.0, 5.0, 1.5, 5.0, C::CpuCore),
      blk("Core1", 10.5, 5.0, 1.5, 5.0, C::CpuCore),
      blk("Core2", 9.0, 5.0, 1.5, 5.0, C::CpuCore),
      blk("Core3", 7.5, 5.0, 1.5, 5.0, C::CpuCore),
      blk("L2_M1", 11.0, 10.0, 2.5, 5.0, C::L2Cache),
      blk("L2_M2", 7.5, 10.0, 2.5, 5.0, C::L2Cache),
      blk("UNB", 10.0, 10.0, 1.0, 5.0, C::Unb),
  };
  if (merge_gpu) {
    blocks.push_back(blk("GPU", 0.0, 0.0, 7.5, 15.0, C::GpuSimd));
  } else {
    blocks.push_back(blk("GpuSimd", 0.0, 3.0, 7.5, 12.0, C::GpuSimd));
    blocks.push_back(blk("GpuAux", 0.0, 0.0, 7.5, 3.0, C::GpuAux));
  }
  blocks.push_back(blk("GMC", 7.5, 0.0, 3.5, 5.0, C::Gmc));
  blocks.push_back(blk("IO", 13.5, 0.0, 4.5, 15.0, C::Other));
  return Floorplan(0.018, 0.015, Floorplan::kDefaultThickness, std::move(blocks),
                   merge_gpu ? "A10-5700 (approximate, merged GPU)" : "A10-5700 (approximate)", true);
}

Eigen::VectorXd block_areas(const Floorplan& fp) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(fp.size()));
  for (std::size_t i = 0; i < fp.size(); ++i) a[static_cast<Eigen::Index>(i)] = fp[i].rect.area();
  return a;
}

double distance_to_gpu(const Floorplan& fp, std::size_t i) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : fp.blocks())
    if (b.device_class == DeviceClass::GpuSimd || b.device_class == DeviceClass::GpuAux)
      best = std::min(best, rect_distance(fp[i].rect, b.rect));
  return best;
}

}  // namespace thermap
