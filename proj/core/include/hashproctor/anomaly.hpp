#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hashproctor/imagehash.hpp"

namespace hashproctor {

struct SmoothingConfig {
  int window = 31;
  int polyorder = 3;
  int valley_min_separation = 15;
  /// Minimum valley prominence as a fraction of the observed signal range.
  double valley_prominence = 0.10;
  /// When set, a valley also has to sit at or below the session threshold.
  bool valley_below_threshold = false;

  friend bool operator==(const SmoothingConfig&, const SmoothingConfig&) = default;
};

void validate(const SmoothingConfig& cfg);

struct DetectorConfig {
  SmoothingConfig smoothing;
  bool reselect_anchor = true;
  int merge_gap = 10;
  int min_event_len = 8;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

void validate(const DetectorConfig& cfg);

/// Savitzky-Golay weights for the sample at offset 0 of a window spanning
/// offsets [-left, right], fitting a polynomial of degree
/// min(polyorder, left + right).
std::vector<double> savgol_weights(int left, int right, int polyorder);

/// Smoothed values are rounded to multiples of 1/kSmoothGrid, so that values
/// that are analytically equal (plateaus, exact fits) compare equal against
/// each other and against integer thresholds.
inline constexpr double kSmoothGrid = 1e9;

/// Savitzky-Golay smoothing. Windows are truncated at the series ends and the
/// fit degree is reduced to at most window_len - 1 there. Output length equals
/// input length.
std::vector<double> sg_smooth(std::span<const double> series, int window, int polyorder);

/// Valley test on a (possibly partial) smoothed series. `v` must be an
/// interior index; its neighbourhood of +-valley_min_separation is clipped to
/// the series, and the observed range covers the series up to the end of that
/// neighbourhood. Prominence is taken inside the neighbourhood.
bool is_valley(std::span<const double> smoothed, std::size_t v, double threshold, const SmoothingConfig& cfg);

/// All valleys of the full series in increasing order.
std::vector<std::size_t> find_valleys(std::span<const double> smoothed, double threshold, const SmoothingConfig& cfg);

enum class Verdict { Unreviewed, Confirmed, Dismissed };

const char* to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view name);

struct AnomalyEvent {
  std::int64_t start = 0;
  std::int64_t end = 0;  ///< inclusive
  int peak_distance = 0;
  std::int64_t anchor_index = 0;
  Verdict verdict = Verdict::Unreviewed;

  friend bool operator==(const AnomalyEvent&, const AnomalyEvent&) = default;
};

/// Groups flagged frames into events: runs separated by at most `gap`
/// unflagged frames are joined, events shorter than `min_len` are dropped, as
/// are events whose raw peak never exceeds the threshold.
std::vector<AnomalyEvent> merge_events(const std::vector<bool>& flags, std::span<const int> raw, int threshold, int gap,
                                       int min_len, std::span<const std::int64_t> anchors = {});

struct FrameFlag {
  std::int64_t index = 0;
  double smoothed = 0.0;
  bool flagged = false;

  friend bool operator==(const FrameFlag&, const FrameFlag&) = default;
};

/// Streaming detector. Each step appends the Hamming distance to the current
/// anchor; smoothing is centered, so the decision for frame i is emitted when
/// frame i + window/2 arrives (finalize() drains the tail). After a flagged
/// frame, the next confirmed valley becomes the new anchor.
class AnomalyDetector {
 public:
  AnomalyDetector(int threshold, DetectorConfig cfg);

  /// `frame_index` must equal the number of frames seen so far. The first
  /// frame becomes the initial anchor.
  std::optional<FrameFlag> step(const PerceptualHash& frame_hash, std::int64_t frame_index);
  std::vector<FrameFlag> finalize();

  int threshold() const noexcept { return threshold_; }
  const DetectorConfig& config() const noexcept { return cfg_; }
  bool finished() const noexcept { return finished_; }
  std::int64_t frames_seen() const noexcept { return static_cast<std::int64_t>(raw_.size()); }
  std::int64_t anchor_index() const noexcept { return anchors_.empty() ? 0 : anchors_.back(); }
  const std::vector<int>& raw() const noexcept { return raw_; }
  const std::vector<double>& smoothed() const noexcept { return smoothed_; }
  const std::vector<bool>& flags() const noexcept { return flags_; }
  const std::vector<std::int64_t>& anchors() const noexcept { return anchors_; }

  /// Events over the frames decided so far.
  std::vector<AnomalyEvent> events() const;

 private:
  FrameFlag decide(std::size_t j, std::size_t available);
  void consider_valley(std::size_t v, std::size_t available);

  int threshold_;
  DetectorConfig cfg_;
  int half_;
  std::optional<PerceptualHash> anchor_;
  std::vector<int> raw_;
  std::vector<double> raw_d_;
  std::vector<double> smoothed_;
  std::vector<bool> flags_;
  std::vector<std::int64_t> anchors_;
  /// Hashes of frames that may still become anchors, indexed by frame.
  std::vector<std::pair<std::int64_t, PerceptualHash>> recent_;
  std::optional<std::int64_t> first_flag_since_anchor_;
  std::size_t next_valley_candidate_ = 1;
  bool finished_ = false;
};

}  // namespace hashproctor
