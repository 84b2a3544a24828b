#include "hashproctor/facehide.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hashproctor/detections.hpp"
#include "hashproctor/error.hpp"

namespace hashproctor {

const char* to_string(HideMode mode) noexcept {
  switch (mode) {
    case HideMode::Blur: return "blur";
    case HideMode::Mask: return "mask";
  }
  return "unknown";
}

HideMode parse_hide_mode(std::string_view name) {
  if (name == "blur") return HideMode::Blur;
  if (name == "mask") return HideMode::Mask;
  throw Error(ErrorKind::InvalidInput, "unknown hide mode '" + std::string(name) + "'");
}

void validate(const HideConfig& cfg) {
  if (cfg.blur_level < 1) throw Error(ErrorKind::InvalidInput, "blur level must be at least 1");
  if (cfg.point_size < 1) throw Error(ErrorKind::InvalidInput, "point size must be at least 1");
}

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Eye pixels are saved before hiding and written back afterwards, so hiding
// can run in place.
struct EyePatches {
  std::vector<std::pair<BoundingBox, std::vector<std::uint8_t>>> patches;

  EyePatches(const Frame& frame, std::span<const BoundingBox> eyes) {
    for (const auto& eye : eyes) {
      const auto box = eye.clipped(frame.width, frame.height);
      if (!box) continue;
      const std::size_t bytes = static_cast<std::size_t>(box->w) * static_cast<std::size_t>(frame.channels);
      std::vector<std::uint8_t> data(bytes * static_cast<std::size_t>(box->h));
      for (int y = 0; y < box->h; ++y) {
        std::copy_n(frame.pixel(box->x, box->y + y), bytes, data.data() + static_cast<std::size_t>(y) * bytes);
      }
      patches.emplace_back(*box, std::move(data));
    }
  }

  void restore(Frame& frame) const {
    for (const auto& [box, data] : patches) {
      const std::size_t bytes = static_cast<std::size_t>(box.w) * static_cast<std::size_t>(frame.channels);
      for (int y = 0; y < box.h; ++y) {
        std::copy_n(data.data() + static_cast<std::size_t>(y) * bytes, bytes, frame.pixel(box.x, box.y + y));
      }
    }
  }
};

// The horizontal pass reads every source pixel before the vertical pass
// writes, so `out` and `src` may be the same frame.
void blur_region(Frame& out, const Frame& src, const BoundingBox& region, int level) {
  const auto kd = gaussian_kernel(level);
  std::vector<float> kernel(kd.begin(), kd.end());
  const int w = region.w;
  const int h = region.h;
  const int c = src.channels;
  const int taps = 2 * level + 1;
  const std::size_t row_len = static_cast<std::size_t>(w) * static_cast<std::size_t>(c);

  std::vector<int> xmap(static_cast<std::size_t>(w + 2 * level));
  for (int i = 0; i < w + 2 * level; ++i) xmap[static_cast<std::size_t>(i)] = region.x + reflect101(i - level, w);

  std::vector<float> tmp(row_len * static_cast<std::size_t>(h));
  std::vector<float> padded(static_cast<std::size_t>(w + 2 * level) * static_cast<std::size_t>(c));
  for (int y = 0; y < h; ++y) {
    const int sy = region.y + y;
    for (std::size_t i = 0; i < xmap.size(); ++i) {
      const std::uint8_t* px = src.pixel(xmap[i], sy);
      for (int ch = 0; ch < c; ++ch) padded[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = px[ch];
    }
    float* dst = tmp.data() + static_cast<std::size_t>(y) * row_len;
    std::fill_n(dst, row_len, 0.0f);
    for (int j = 0; j < taps; ++j) {
      const float kj = kernel[static_cast<std::size_t>(j)];
      const float* p = padded.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(c);
      for (std::size_t i = 0; i < row_len; ++i) dst[i] += kj * p[i];
    }
  }

  std::vector<float> acc(row_len);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (int j = 0; j < taps; ++j) {
      const float kj = kernel[static_cast<std::size_t>(j)];
      const float* row = tmp.data() + static_cast<std::size_t>(reflect101(y + j - level, h)) * row_len;
      for (std::size_t i = 0; i < row_len; ++i) acc[i] += kj * row[i];
    }
    std::uint8_t* dst = out.pixel(region.x, region.y + y);
    for (std::size_t i = 0; i < row_len; ++i) {
      dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[i]), 0L, 255L));
    }
  }
}

std::size_t paint_disks(Frame& out, const LandmarkSet& landmarks, int point_size, Rgb color) {
  const int radius = point_size / 2;
  const double r2 = static_cast<double>(radius) * radius;
  const std::uint8_t rgb[3] = {color.r, color.g, color.b};
  const std::uint8_t gray = static_cast<std::uint8_t>((299u * color.r + 587u * color.g + 114u * color.b + 500u) / 1000u);
  std::size_t painted = 0;
  for (const auto& p : landmarks) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    const int y0 = std::max(0, static_cast<int>(std::ceil(p.y - radius)));
    const int y1 = std::min(out.height - 1, static_cast<int>(std::floor(p.y + radius)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - p.y;
      const double rem = r2 - dy * dy;
      if (rem < 0.0) continue;
      // Row span from the square root, then nudged so that exactly the
      // pixels with dx^2 + dy^2 <= r^2 are covered.
      const double half = std::sqrt(rem);
      auto inside = [&](int x) { return (x - p.x) * (x - p.x) + dy * dy <= r2; };
      int xa = static_cast<int>(std::ceil(p.x - half));
      int xb = static_cast<int>(std::floor(p.x + half));
      while (xa <= xb && !inside(xa)) ++xa;
      while (inside(xa - 1)) --xa;
      while (xb >= xa && !inside(xb)) --xb;
      while (inside(xb + 1)) ++xb;
      xa = std::max(xa, 0);
      xb = std::min(xb, out.width - 1);
      if (xa > xb) continue;
      std::uint8_t* px = out.pixel(xa, y);
      if (out.channels == 3) {
        for (int x = xa; x <= xb; ++x, px += 3) {
          px[0] = rgb[0];
          px[1] = rgb[1];
          px[2] = rgb[2];
        }
      } else {
        std::fill_n(px, xb - xa + 1, gray);
      }
      painted += static_cast<std::size_t>(xb - xa + 1);
    }
  }
  return painted;
}

void fill_box(Frame& out, const BoundingBox& box, Rgb color) {
  const std::uint8_t gray = static_cast<std::uint8_t>((299u * color.r + 587u * color.g + 114u * color.b + 500u) / 1000u);
  for (int y = box.y; y < box.y + box.h; ++y) {
    for (int x = box.x; x < box.x + box.w; ++x) {
      std::uint8_t* px = out.pixel(x, y);
      if (out.channels == 3) {
        px[0] = color.r;
        px[1] = color.g;
        px[2] = color.b;
      } else {
        px[0] = gray;
      }
    }
  }
}

std::optional<BoundingBox> landmark_bounds(const LandmarkSet& landmarks) {
  if (landmarks.empty()) return std::nullopt;
  double x0 = landmarks.front().x, x1 = x0, y0 = landmarks.front().y, y1 = y0;
  for (const auto& p : landmarks) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int bx = static_cast<int>(std::floor(x0));
  const int by = static_cast<int>(std::floor(y0));
  return BoundingBox{bx, by, static_cast<int>(std::floor(x1)) - bx + 1, static_cast<int>(std::floor(y1)) - by + 1};
}

}  // namespace

std::vector<double> gaussian_kernel(int level) {
  if (level < 1) throw Error(ErrorKind::InvalidInput, "blur level must be at least 1");
  const double sigma = level / 2.0;
  std::vector<double> k(static_cast<std::size_t>(2 * level + 1));
  double sum = 0.0;
  for (int i = -level; i <= level; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + level)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

HideOutcome blur_face(const Frame& frame, const BoundingBox& face, std::span<const BoundingBox> eyes, int level) {
  if (frame.empty()) throw Error(ErrorKind::InvalidInput, "cannot blur an empty frame");
  if (level < 1) throw Error(ErrorKind::InvalidInput, "blur level must be at least 1");
  const auto region = face.clipped(frame.width, frame.height);
  if (!region) return {frame, HideStatus::FaceOutsideFrame};
  HideOutcome result{frame, HideStatus::Applied};
  const EyePatches saved(frame, eyes);
  blur_region(result.frame, result.frame, *region, level);
  saved.restore(result.frame);
  return result;
}

Frame mask_face(const Frame& frame, const LandmarkSet& landmarks, std::span<const BoundingBox> eyes, int point_size,
                Rgb color) {
  if (frame.empty()) throw Error(ErrorKind::InvalidInput, "cannot mask an empty frame");
  if (landmarks.empty()) throw Error(ErrorKind::InvalidInput, "mask needs at least one landmark");
  if (point_size < 1) throw Error(ErrorKind::InvalidInput, "point size must be at least 1");
  Frame out = frame;
  const EyePatches saved(out, eyes);
  paint_disks(out, landmarks, point_size, color);
  saved.restore(out);
  return out;
}

void hide_whole_frame_in_place(Frame& frame, const HideConfig& cfg) {
  const BoundingBox all{0, 0, frame.width, frame.height};
  if (cfg.mode == HideMode::Blur) {
    blur_region(frame, frame, all, cfg.blur_level);
  } else {
    fill_box(frame, all, cfg.mask_color);
  }
}

Frame hide_whole_frame(const Frame& frame, const HideConfig& cfg) {
  Frame out = frame;
  hide_whole_frame_in_place(out, cfg);
  return out;
}

void hide_in_place(Frame& frame, const DetectionRecord& detection, const HideConfig& cfg) {
  validate(cfg);
  if (frame.empty()) throw Error(ErrorKind::InvalidInput, "cannot hide an empty frame");
  if (detection.provenance == Provenance::None) return hide_whole_frame_in_place(frame, cfg);

  const std::span<const BoundingBox> eyes =
      cfg.preserve_eyes ? std::span<const BoundingBox>(detection.eyes) : std::span<const BoundingBox>{};
  const bool have_landmarks = detection.landmarks.has_value() && !detection.landmarks->empty();

  if (cfg.mode == HideMode::Mask) {
    const EyePatches saved(frame, eyes);
    if (have_landmarks) {
      if (paint_disks(frame, *detection.landmarks, cfg.point_size, cfg.mask_color) == 0) {
        return hide_whole_frame_in_place(frame, cfg);
      }
      return saved.restore(frame);
    }
    // Face box without landmarks: cover the whole box.
    const auto box = detection.face ? detection.face->clipped(frame.width, frame.height) : std::nullopt;
    if (!box) return hide_whole_frame_in_place(frame, cfg);
    fill_box(frame, *box, cfg.mask_color);
    return saved.restore(frame);
  }

  std::optional<BoundingBox> face = detection.face;
  if (!face && have_landmarks) face = landmark_bounds(*detection.landmarks);
  const auto region = face ? face->clipped(frame.width, frame.height) : std::nullopt;
  if (!region) return hide_whole_frame_in_place(frame, cfg);
  const EyePatches saved(frame, eyes);
  blur_region(frame, frame, *region, cfg.blur_level);
  saved.restore(frame);
}

Frame hide(const Frame& frame, const DetectionRecord& detection, const HideConfig& cfg) {
  Frame out = frame;
  hide_in_place(out, detection, cfg);
  return out;
}

}  // namespace hashproctor
