#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hashproctor/anomaly.hpp"
#include "hashproctor/evalharness.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/imagehash.hpp"
#include "hashproctor/report.hpp"

namespace hashproctor {

struct PipelineConfig {
  std::string session_id = "session";
  std::filesystem::path frames_dir;
  std::filesystem::path primary_detections;
  std::optional<std::filesystem::path> fallback_detections;
  std::optional<std::filesystem::path> ground_truth;
  /// Calibration session file (JSON) or a directory of calibration photos.
  std::filesystem::path calibration;
  /// Detections for the calibration photos (in sorted file order). When set,
  /// the photos are hidden the same way as the frames before hashing.
  std::optional<std::filesystem::path> calibration_detections;
  HideConfig hide;
  DetectorConfig detector;
  HashConfig hash;
  std::filesystem::path output_dir;
};

/// Reads the key = value config. Relative paths resolve against the config
/// file's directory; unknown keys are a Config error.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Checks option ranges and that every referenced path exists.
void validate(const PipelineConfig& cfg);

/// Frames named frame_%06d.png, contiguous from 0. A gap raises InvalidInput
/// naming the first missing index.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& frames_dir);

/// Threshold from a finalized session file, or computed from a photo
/// directory. Throws InsufficientCalibration ("calibrate first") when there is
/// none, Config when the session used a different hash.
int resolve_threshold(const PipelineConfig& cfg);

struct PipelineResult {
  AnomalyReport report;
  std::filesystem::path report_path;
  std::filesystem::path hidden_dir;
  std::vector<std::string> warnings;
  /// Present when the config names a ground truth file.
  std::optional<Metrics> metrics;
};

/// Resolve detections, hide, hash the hidden frame, step the detector. Writes
/// output_dir/hidden/frame_%06d.png, output_dir/report.json and, with ground
/// truth, output_dir/metrics.json. Original pixels are never written.
PipelineResult run_pipeline(const PipelineConfig& cfg);

struct ClipRange {
  std::int64_t first = 0;
  std::int64_t last = 0;  ///< inclusive
};

/// Event `event_id` (position in report.events) widened by `pad` frames and
/// clamped to the sequence. Throws NotFound for an unknown event.
ClipRange clip_range(const AnomalyReport& report, std::size_t event_id, int pad = 15);

/// Hidden frames of the clip, in order.
std::vector<Frame> extract_clip(const AnomalyReport& report, std::size_t event_id,
                                const std::filesystem::path& hidden_dir, int pad = 15);

std::string frame_file_name(std::int64_t index);

}  // namespace hashproctor
