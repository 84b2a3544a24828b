#pragma once

#include <span>
#include <string_view>

#include "hashproctor/geometry.hpp"
#include "hashproctor/image.hpp"

namespace hashproctor {

struct DetectionRecord;

enum class HideMode { Blur, Mask };

const char* to_string(HideMode mode) noexcept;
HideMode parse_hide_mode(std::string_view name);

struct HideConfig {
  HideMode mode = HideMode::Mask;
  int blur_level = 30;
  int point_size = 26;
  Rgb mask_color{255, 255, 255};
  bool preserve_eyes = true;

  friend bool operator==(const HideConfig&, const HideConfig&) = default;
};

void validate(const HideConfig& cfg);

enum class HideStatus {
  Applied,
  /// Face box does not intersect the frame; the frame is returned untouched.
  FaceOutsideFrame,
};

struct HideOutcome {
  Frame frame;
  HideStatus status = HideStatus::Applied;
};

/// Normalized Gaussian weights for a blur level L: 2L+1 taps, sigma L/2.
std::vector<double> gaussian_kernel(int level);

/// Gaussian blur restricted to the face box (reflect-101 padding at the box
/// edges), then eye boxes restored from the input.
HideOutcome blur_face(const Frame& frame, const BoundingBox& face, std::span<const BoundingBox> eyes, int level);

/// Paints a filled disk of radius point_size/2 around every landmark, then
/// restores eye boxes. Throws InvalidInput on an empty landmark set.
Frame mask_face(const Frame& frame, const LandmarkSet& landmarks, std::span<const BoundingBox> eyes, int point_size,
                Rgb color);

/// Dispatches on cfg.mode. Fails closed: with no usable detection the whole
/// frame is blurred or filled with the mask color.
Frame hide(const Frame& frame, const DetectionRecord& detection, const HideConfig& cfg);
/// Same as hide() without copying the frame.
void hide_in_place(Frame& frame, const DetectionRecord& detection, const HideConfig& cfg);

/// Hides every pixel of the frame (used when nothing was detected).
Frame hide_whole_frame(const Frame& frame, const HideConfig& cfg);
void hide_whole_frame_in_place(Frame& frame, const HideConfig& cfg);

}  // namespace hashproctor
