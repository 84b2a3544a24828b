#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "hashproctor/detections.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/image.hpp"
#include "hashproctor/imagehash.hpp"

namespace hashproctor {

/// Pose change of the rendered person. Offsets are in pixels of a 240-line
/// frame and scale with the frame height.
struct PoseTransform {
  double dx = 0.0;
  double dy = 0.0;
  double angle_deg = 0.0;
  double scale = 1.0;

  friend bool operator==(const PoseTransform&, const PoseTransform&) = default;
};

/// Frames [start, end) show the anomalous pose; it is applied on top of the
/// current sitting position.
struct AnomalySegment {
  std::int64_t start = 0;
  std::int64_t end = 0;
  PoseTransform transform;
};

/// A normal change of sitting position that persists from `frame` on.
struct PositionChange {
  std::int64_t frame = 0;
  PoseTransform transform;
};

/// Periodic look at the keyboard: the head dips for `duration` frames every
/// `period` frames. Disabled when period is 0.
struct GlanceConfig {
  int period = 0;
  int duration = 8;
  double dy = 3.0;
};

struct SyntheticScenario {
  std::int64_t duration_frames = 300;
  int width = 320;
  int height = 240;
  std::optional<std::filesystem::path> base_pose_image;
  std::vector<AnomalySegment> anomaly_segments;
  std::vector<PositionChange> position_changes;
  GlanceConfig glance;
  double noise_sigma = 1.0;
  int calibration_photos = 9;
  /// Head offset (pixels at 240 lines) covered by the calibration photos.
  double calibration_jitter = 3.0;
  /// Probability that the primary detector misses a frame (fallback answers).
  double primary_dropout = 0.05;
  /// Probability that both detectors miss a frame.
  double carry_rate = 0.01;
  std::uint64_t seed = 1;
};

/// Throws Config for overlapping or out-of-range segments.
void validate(const SyntheticScenario& s);
SyntheticScenario parse_scenario(std::string_view json_text);
SyntheticScenario load_scenario(const std::filesystem::path& path);

struct RenderedScenario {
  std::vector<Frame> frames;
  std::vector<RawDetection> primary;
  std::vector<RawDetection> fallback;
  std::vector<GroundTruthLabel> truth;
  std::vector<Frame> calibration_photos;
  std::vector<RawDetection> calibration_detections;
};

RenderedScenario render_scenario(const SyntheticScenario& s);

/// Renders one frame of the person at a pose, with its exact detection.
struct RenderedPose {
  Frame frame;
  RawDetection detection;
};
RenderedPose render_pose(int width, int height, const PoseTransform& body, double head_dy, double noise_sigma,
                         std::uint64_t noise_seed);

struct ScenarioFiles {
  std::filesystem::path root;
  std::filesystem::path frames_dir;
  std::filesystem::path ground_truth;
  std::filesystem::path primary_detections;
  std::filesystem::path fallback_detections;
  std::filesystem::path calibration_dir;
  std::filesystem::path calibration_detections;
  std::filesystem::path pipeline_config;
};

/// Writes frames (frame_%06d.png), sidecars, calibration photos and a
/// ready-to-run pipeline config under `out_dir`.
ScenarioFiles generate_scenario(const SyntheticScenario& s, const std::filesystem::path& out_dir,
                                const HideConfig& hide = {}, const HashConfig& hash = {});

}  // namespace hashproctor
