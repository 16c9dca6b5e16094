#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace thermap {

enum class DeviceClass { CpuCore, L2Cache, GpuSimd, GpuAux, Unb, Gmc, Other };

std::string_view to_string(DeviceClass c);
std::optional<DeviceClass> device_class_from_string(std::string_view s);

/// Axis-aligned rectangle on the die plane, meters. (x, y) is the lower-left corner.
struct Rect {
  double x = 0, y = 0, width = 0, height = 0;

  double area() const { return width * height; }
  double right() const { return x + width; }
  double top() const { return y + height; }
  Eigen::Vector2d center() const { return {x + 0.5 * width, y + 0.5 * height}; }
  bool contains(double px, double py) const { return px > x && px < right() && py > y && py < top(); }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// True when the interiors of a and b intersect by more than `tol` in both axes.
bool interiors_overlap(const Rect& a, const Rect& b, double tol = 1e-12);

/// Euclidean gap between two rectangles; zero when they touch or overlap.
double rect_distance(const Rect& a, const Rect& b);

struct Block {
  std::string name;
  Rect rect;
  DeviceClass device_class = DeviceClass::Other;
  bool host_capable = false;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Die geometry. Block order is the canonical index order of every
/// per-block vector and matrix downstream. Immutable once validated.
class Floorplan {
 public:
  static constexpr double kDefaultThickness = 750e-6;

  /// Validates and constructs. Throws Error(Validation) naming the offending block.
  Floorplan(double die_width, double die_height, double die_thickness, std::vector<Block> blocks,
            std::string name = {}, bool approximate = false);

  double die_width() const { return die_width_; }
  double die_height() const { return die_height_; }
  double die_thickness() const { return die_thickness_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  const Block& operator[](std::size_t i) const { return blocks_[i]; }
  const std::string& name() const { return name_; }
  bool approximate() const { return approximate_; }

  std::optional<std::size_t> index_of(std::string_view block_name) const;
  std::vector<std::size_t> indices_of(DeviceClass c) const;
  std::vector<std::size_t> host_capable_indices() const;
  std::vector<std::string> block_names() const;

  friend bool operator==(const Floorplan&, const Floorplan&) = default;

 private:
  double die_width_, die_height_, die_thickness_;
  std::vector<Block> blocks_;
  std::string name_;
  bool approximate_;
};

/// Parses the JSON floorplan document:
///   { "die": {"width_m", "height_m", "thickness_m"},
///     "blocks": [{"name", "x_m", "y_m", "w_m", "h_m", "class", "host_capable"}] }
/// Optional top-level "name" and "approximate" are carried as metadata.
Floorplan parse_floorplan(std::string_view text);

std::string serialize_floorplan(const Floorplan& fp);

/// Approximate AMD A10-5700 layout (18 mm x 15 mm). GPU on the left, the two
/// x86 modules on the right with cores in a row ordered so that Core3 abuts
/// the GPU and Core0 is farthest from it. With `merge_gpu` the SIMD array and
/// the auxiliary units collapse into one GpuSimd block.
Floorplan builtin_apu_floorplan(bool merge_gpu = false);

/// width * height per block in canonical order, m^2.
Eigen::VectorXd block_areas(const Floorplan& fp);

/// Gap distance from block i to the nearest GPU block (GpuSimd or GpuAux).
double distance_to_gpu(const Floorplan& fp, std::size_t i);

}  // namespace thermap
