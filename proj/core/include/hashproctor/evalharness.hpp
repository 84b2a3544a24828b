#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/anomaly.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/image.hpp"
#include "hashproctor/imagehash.hpp"

namespace hashproctor {

/// Positive class is "anomaly".
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& flags);

/// Percentages; each throws UndefinedMetric when its denominator is zero.
double accuracy(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
/// Harmonic mean of precision and recall as a fraction in [0, 1].
double f1_score(const ConfusionCounts& c);

struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

Metrics metrics(const ConfusionCounts& c);

/// Per-frame flags covered by the events, for frames [0, frame_count).
std::vector<bool> flags_from_events(std::span<const AnomalyEvent> events, std::size_t frame_count);
std::vector<bool> truth_flags(std::span<const GroundTruthLabel> labels, std::size_t frame_count);

struct MetricsRow {
  std::string participant;
  std::string mode;
  Metrics values;
};

/// One decimal place, as reported in the results tables.
std::string format_percent(double value);
/// participant,mode,accuracy,recall,precision
std::string metrics_csv(std::span<const MetricsRow> rows);
std::string metrics_json(std::span<const MetricsRow> rows);
/// Wide layout: one row per participant with blur and mask columns side by
/// side. Missing combinations are written as N/A.
std::string participant_table_csv(std::span<const MetricsRow> rows);

enum class BenchStage { Blur, Mask, Hash, Pipeline };

const char* to_string(BenchStage s) noexcept;
BenchStage parse_bench_stage(std::string_view name);

struct BenchResult {
  BenchStage stage = BenchStage::Hash;
  std::size_t frames = 0;
  double elapsed = 0.0;  ///< seconds, median over repetitions
  double fps = 0.0;

  static BenchResult from(BenchStage stage, std::size_t frames, double elapsed_seconds);
};

struct BenchOptions {
  HideConfig hide;
  HashConfig hash;
  DetectorConfig detector;
  int threshold = 10;
};

/// Median wall-clock of `repetitions` passes of `pass` after one warm-up pass.
/// `setup`, when given, runs untimed before every pass.
BenchResult measure_fps(BenchStage stage, std::size_t frames, int repetitions, const std::function<void()>& pass,
                        const std::function<void()>& setup = {});

/// Times one processing stage over the frames. BLUR and MASK hide every
/// frame in place with the matching detection (mode taken from the stage);
/// HASH grayscales and hashes; PIPELINE hides, hashes and steps a detector.
/// Decoding is not timed.
BenchResult bench_fps(BenchStage stage, std::span<const Frame> frames, std::span<const DetectionRecord> detections,
                      int repetitions, const BenchOptions& options = {});

struct HashMethodRow {
  HashAlgorithm method = HashAlgorithm::DHash;
  int size = 12;
  int threshold = 0;
  std::optional<double> f1;  ///< nullopt when precision or recall is undefined
  double fps = 0.0;
};

struct HashComparison {
  std::vector<HashMethodRow> rows;
  std::optional<std::size_t> best;  ///< index of the best-F1 row
};

/// Runs threshold calibration and the anomaly detector for every
/// (method, size) pair on already-hidden frames and scores the resulting
/// events against the truth.
HashComparison compare_hash_methods(std::span<const Frame> hidden_frames, const std::vector<bool>& truth,
                                    std::span<const Frame> calibration_photos, std::span<const int> sizes,
                                    std::span<const HashAlgorithm> methods, const DetectorConfig& detector);

std::string hash_comparison_csv(const HashComparison& cmp);

}  // namespace hashproctor
