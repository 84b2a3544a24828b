#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hashproctor {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved 8-bit raster, either 1 (gray) or 3 (RGB) channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;
  std::int64_t index = 0;
  double timestamp = 0.0;

  Frame() = default;
  Frame(int w, int h, int ch, std::uint8_t fill = 0);

  bool empty() const noexcept { return width <= 0 || height <= 0 || data.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(channels);
  }
  std::uint8_t* pixel(int x, int y) noexcept { return data.data() + offset(x, y); }
  const std::uint8_t* pixel(int x, int y) const noexcept { return data.data() + offset(x, y); }

  /// Same raster contents; index and timestamp are ignored.
  bool same_pixels(const Frame& other) const noexcept;
};

/// Single-channel luminance image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace hashproctor
