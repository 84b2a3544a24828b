#include "hashproctor/geometry.hpp"

#include <algorithm>

namespace hashproctor {

std::optional<BoundingBox> BoundingBox::clipped(int width, int height) const noexcept {
  const long x0 = std::max<long>(x, 0);
  const long y0 = std::max<long>(y, 0);
  const long x1 = std::min<long>(static_cast<long>(x) + w, width);
  const long y1 = std::min<long>(static_cast<long>(y) + h, height);
  if (w < 1 || h < 1 || x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
}

}  // namespace hashproctor
