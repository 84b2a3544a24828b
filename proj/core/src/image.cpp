#include "hashproctor/image.hpp"

#include <utility>

#include "hashproctor/error.hpp"

namespace hashproctor {

Frame::Frame(int w, int h, int ch, std::uint8_t fill) : width(w), height(h), channels(ch) {
  if (w < 1 || h < 1 || (ch != 1 && ch != 3)) {
    throw Error(ErrorKind::InvalidInput, "frame needs positive dimensions and 1 or 3 channels");
  }
  data.assign(pixel_count() * static_cast<std::size_t>(ch), fill);
}

bool Frame::same_pixels(const Frame& other) const noexcept {
  return width == other.width && height == other.height && channels == other.channels && data == other.data;
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "gray image needs positive dimensions");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidInput, "gray image needs positive dimensions");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::InvalidInput, "gray image data length does not match width*height");
  }
}

}  // namespace hashproctor
