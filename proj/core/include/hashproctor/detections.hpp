#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/geometry.hpp"

namespace hashproctor {

/// One line of a detections sidecar, as produced by a single detector.
struct RawDetection {
  std::int64_t frame = 0;
  std::optional<BoundingBox> face;
  std::vector<BoundingBox> eyes;
  std::optional<LandmarkSet> landmarks;

  /// A line with no face, no eyes and no landmarks means the detector ran and
  /// found nothing; it resolves the same as a missing line.
  bool has_detection() const noexcept { return face.has_value() || !eyes.empty() || landmarks.has_value(); }

  friend bool operator==(const RawDetection&, const RawDetection&) = default;
};

enum class Provenance { Primary, Fallback, Carried, None };

const char* to_string(Provenance p) noexcept;

struct DetectionRecord {
  std::int64_t frame_index = 0;
  std::optional<BoundingBox> face;
  std::vector<BoundingBox> eyes;
  std::optional<LandmarkSet> landmarks;
  Provenance provenance = Provenance::None;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct ParsedDetections {
  /// Sorted by frame, one entry per frame.
  std::vector<RawDetection> entries;
  std::vector<std::string> warnings;
};

/// Parses JSON-lines sidecar text. Duplicate frames keep the last entry and
/// add a warning. Throws Parse naming the offending line.
ParsedDetections parse_detections_text(std::string_view text);
ParsedDetections parse_detections(const std::filesystem::path& path);

RawDetection parse_detection_entry(std::string_view json);
std::string to_json_line(const RawDetection& d);
void write_detections(const std::filesystem::path& path, std::span<const RawDetection> entries);

/// Priority PRIMARY > FALLBACK > CARRIED > NONE.
DetectionRecord resolve_hybrid(const RawDetection* primary, const RawDetection* fallback,
                               const DetectionRecord* previous, std::int64_t frame_index);

/// Folds resolve_hybrid over frames [0, frame_count). Entries whose frame is
/// outside that range raise InvalidInput naming the first bad index.
std::vector<DetectionRecord> resolve_stream(std::span<const RawDetection> primary,
                                            std::span<const RawDetection> fallback, std::int64_t frame_count);

struct GroundTruthLabel {
  std::int64_t frame = 0;
  bool face_present = false;
  std::optional<bool> eyes_correct;
  bool anomaly = false;
  std::optional<LandmarkSet> true_landmarks;

  friend bool operator==(const GroundTruthLabel&, const GroundTruthLabel&) = default;
};

std::vector<GroundTruthLabel> parse_ground_truth_text(std::string_view text);
std::vector<GroundTruthLabel> parse_ground_truth(const std::filesystem::path& path);
std::string to_json_line(const GroundTruthLabel& label);
void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruthLabel> labels);

/// Percentage of face-labeled frames whose record came from a detector
/// (PRIMARY or FALLBACK). Throws UndefinedMetric with no face labels.
double face_detected_rate(std::span<const GroundTruthLabel> labels, std::span<const DetectionRecord> records);

/// Percentage of face-labeled frames with a detector-produced eye box that
/// the ground truth marks as correct.
double eye_detected_rate(std::span<const GroundTruthLabel> labels, std::span<const DetectionRecord> records);

struct LandmarkComparison {
  LandmarkSet detected;
  LandmarkSet truth;
  Point left_pupil;
  Point right_pupil;
};

/// Mean over all landmarks of |d_i - g_i| / |left_pupil - right_pupil|.
double avg_normalized_error(std::span<const LandmarkComparison> frames);

}  // namespace hashproctor
