#pragma once

#include <optional>
#include <vector>

namespace hashproctor {

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  bool contains(int px, int py) const noexcept { return px >= x && px < x + w && py >= y && py < y + h; }
  /// Intersection with a width*height raster; nullopt when empty.
  std::optional<BoundingBox> clipped(int width, int height) const noexcept;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// 2-D landmark coordinates in pixels; points may fall outside the frame.
using LandmarkSet = std::vector<Point>;

}  // namespace hashproctor
