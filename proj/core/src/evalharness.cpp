#include "hashproctor/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hashproctor/calibration.hpp"
#include "hashproctor/error.hpp"
#include "json_util.hpp"

namespace hashproctor {

ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& flags) {
  if (truth.size() != flags.size()) {
    throw Error(ErrorKind::InvalidInput, "truth has " + std::to_string(truth.size()) + " frames but flags have " +
                                             std::to_string(flags.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      (flags[i] ? c.tp : c.fn)++;
    } else {
      (flags[i] ? c.fp : c.tn)++;
    }
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorKind::UndefinedMetric, "accuracy undefined: no frames");
  return 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) throw Error(ErrorKind::UndefinedMetric, "recall undefined: no anomalous frames");
  return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0) throw Error(ErrorKind::UndefinedMetric, "precision undefined: nothing flagged");
  return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double f1_score(const ConfusionCounts& c) {
  const double p = precision(c) / 100.0;
  const double r = recall(c) / 100.0;
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

Metrics metrics(const ConfusionCounts& c) { return {accuracy(c), recall(c), precision(c)}; }

std::vector<bool> flags_from_events(std::span<const AnomalyEvent> events, std::size_t frame_count) {
  std::vector<bool> flags(frame_count, false);
  for (const auto& e : events) {
    const auto lo = static_cast<std::size_t>(std::max<std::int64_t>(e.start, 0));
    const auto hi = static_cast<std::size_t>(std::max<std::int64_t>(e.end + 1, 0));
    for (std::size_t i = lo; i < std::min(hi, frame_count); ++i) flags[i] = true;
  }
  return flags;
}

std::vector<bool> truth_flags(std::span<const GroundTruthLabel> labels, std::size_t frame_count) {
  std::vector<bool> truth(frame_count, false);
  std::vector<bool> seen(frame_count, false);
  for (const auto& g : labels) {
    if (g.frame < 0 || static_cast<std::size_t>(g.frame) >= frame_count) {
      throw Error(ErrorKind::InvalidInput, "ground truth frame " + std::to_string(g.frame) + " outside the " +
                                               std::to_string(frame_count) + "-frame report");
    }
    truth[static_cast<std::size_t>(g.frame)] = g.anomaly;
    seen[static_cast<std::size_t>(g.frame)] = true;
  }
  const auto missing = std::find(seen.begin(), seen.end(), false);
  if (missing != seen.end()) {
    throw Error(ErrorKind::InvalidInput,
                "ground truth has no label for frame " + std::to_string(missing - seen.begin()));
  }
  return truth;
}

std::string format_percent(double value) {
  char buf[32];
  // Exact halves (91.25) round away from zero rather than to even.
  std::snprintf(buf, sizeof(buf), "%.1f", std::round(value * 10.0) / 10.0);
  return buf;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "participant,mode,accuracy,recall,precision\n";
  for (const auto& r : rows) {
    out += r.participant + "," + r.mode + "," + format_percent(r.values.accuracy) + "," +
           format_percent(r.values.recall) + "," + format_percent(r.values.precision) + "\n";
  }
  return out;
}

std::string metrics_json(std::span<const MetricsRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  auto round1 = [](double v) { return std::stod(format_percent(v)); };
  for (const auto& r : rows) {
    arr.push_back({{"participant", r.participant},
                   {"mode", r.mode},
                   {"accuracy", round1(r.values.accuracy)},
                   {"recall", round1(r.values.recall)},
                   {"precision", round1(r.values.precision)}});
  }
  return arr.dump(2) + "\n";
}

std::string participant_table_csv(std::span<const MetricsRow> rows) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, Metrics>> table;
  for (const auto& r : rows) {
    if (!table.contains(r.participant)) order.push_back(r.participant);
    table[r.participant][r.mode] = r.values;
  }
  std::string out =
      "participant,blur_accuracy,blur_recall,blur_precision,mask_accuracy,mask_recall,mask_precision\n";
  for (const auto& p : order) {
    out += p;
    for (const char* mode : {"blur", "mask"}) {
      const auto& modes = table[p];
      auto it = modes.find(mode);
      if (it == modes.end()) {
        out += ",N/A,N/A,N/A";
      } else {
        out += "," + format_percent(it->second.accuracy) + "," + format_percent(it->second.recall) + "," +
               format_percent(it->second.precision);
      }
    }
    out += "\n";
  }
  return out;
}

const char* to_string(BenchStage s) noexcept {
  switch (s) {
    case BenchStage::Blur: return "blur";
    case BenchStage::Mask: return "mask";
    case BenchStage::Hash: return "hash";
    case BenchStage::Pipeline: return "pipeline";
  }
  return "unknown";
}

BenchStage parse_bench_stage(std::string_view name) {
  if (name == "blur") return BenchStage::Blur;
  if (name == "mask") return BenchStage::Mask;
  if (name == "hash") return BenchStage::Hash;
  if (name == "pipeline") return BenchStage::Pipeline;
  throw Error(ErrorKind::InvalidInput, "unknown bench stage '" + std::string(name) + "'");
}

BenchResult BenchResult::from(BenchStage stage, std::size_t frames, double elapsed_seconds) {
  if (!(elapsed_seconds > 0.0)) throw Error(ErrorKind::InvalidInput, "elapsed time must be positive");
  return {stage, frames, elapsed_seconds, static_cast<double>(frames) / elapsed_seconds};
}

BenchResult measure_fps(BenchStage stage, std::size_t frames, int repetitions, const std::function<void()>& pass,
                        const std::function<void()>& setup) {
  if (frames == 0 || repetitions < 1) throw Error(ErrorKind::InvalidInput, "benchmark needs frames and repetitions");
  using clock = std::chrono::steady_clock;
  if (setup) setup();
  pass();  // warm-up
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    if (setup) setup();
    const auto t0 = clock::now();
    pass();
    times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  return BenchResult::from(stage, frames, std::max(median, 1e-9));
}

BenchResult bench_fps(BenchStage stage, std::span<const Frame> frames, std::span<const DetectionRecord> detections,
                      int repetitions, const BenchOptions& options) {
  if (frames.empty()) throw Error(ErrorKind::InvalidInput, "benchmark needs at least one frame");
  if (stage != BenchStage::Hash && detections.size() != frames.size()) {
    throw Error(ErrorKind::InvalidInput, "benchmark needs one detection per frame");
  }
  HideConfig hide_cfg = options.hide;
  if (stage == BenchStage::Blur) hide_cfg.mode = HideMode::Blur;
  if (stage == BenchStage::Mask) hide_cfg.mode = HideMode::Mask;

  // Hiding works in place on scratch copies that are refreshed outside the
  // timed region. Results feed a checksum so the optimizer cannot drop the
  // work.
  std::vector<Frame> work(frames.begin(), frames.end());
  std::function<void()> setup;
  if (stage != BenchStage::Hash) {
    setup = [&] {
      for (std::size_t i = 0; i < frames.size(); ++i) {
        std::copy(frames[i].data.begin(), frames[i].data.end(), work[i].data.begin());
      }
    };
  }
  volatile std::size_t sink = 0;
  std::function<void()> pass;
  switch (stage) {
    case BenchStage::Blur:
    case BenchStage::Mask:
      pass = [&] {
        for (std::size_t i = 0; i < work.size(); ++i) {
          hide_in_place(work[i], detections[i], hide_cfg);
          sink = sink + work[i].data[0];
        }
      };
      break;
    case BenchStage::Hash:
      pass = [&] {
        for (const auto& f : frames) sink = sink + compute_hash(f, options.hash).words()[0];
      };
      break;
    case BenchStage::Pipeline:
      pass = [&] {
        AnomalyDetector detector(options.threshold, options.detector);
        for (std::size_t i = 0; i < work.size(); ++i) {
          hide_in_place(work[i], detections[i], hide_cfg);
          detector.step(compute_hash(work[i], options.hash), static_cast<std::int64_t>(i));
        }
        detector.finalize();
        sink = sink + detector.events().size();
      };
      break;
  }
  return measure_fps(stage, frames.size(), repetitions, pass, setup);
}

HashComparison compare_hash_methods(std::span<const Frame> hidden_frames, const std::vector<bool>& truth,
                                    std::span<const Frame> calibration_photos, std::span<const int> sizes,
                                    std::span<const HashAlgorithm> methods, const DetectorConfig& detector_cfg) {
  if (hidden_frames.size() != truth.size()) throw Error(ErrorKind::InvalidInput, "frames and truth lengths differ");
  if (hidden_frames.empty()) throw Error(ErrorKind::InvalidInput, "no frames to compare on");
  // Grayscale once; every method hashes the same luminance images.
  std::vector<GrayImage> gray;
  gray.reserve(hidden_frames.size());
  for (const auto& f : hidden_frames) gray.push_back(to_grayscale(f));

  HashComparison out;
  for (const auto method : methods) {
    for (const int size : sizes) {
      const HashConfig hash{method, size};
      validate(hash);
      HashMethodRow row;
      row.method = method;
      row.size = size;
      row.threshold = compute_threshold(calibration_photos, hash);

      using clock = std::chrono::steady_clock;
      const auto t0 = clock::now();
      AnomalyDetector detector(row.threshold, detector_cfg);
      for (std::size_t i = 0; i < gray.size(); ++i) detector.step(compute_hash(gray[i], hash), static_cast<std::int64_t>(i));
      detector.finalize();
      const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      row.fps = static_cast<double>(gray.size()) / std::max(elapsed, 1e-9);

      const auto flags = flags_from_events(detector.events(), gray.size());
      try {
        row.f1 = f1_score(confusion(truth, flags));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedMetric) throw;
      }
      out.rows.push_back(row);
    }
  }
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    if (!out.rows[i].f1) continue;
    if (!out.best || *out.rows[i].f1 > *out.rows[*out.best].f1) out.best = i;
  }
  return out;
}

std::string hash_comparison_csv(const HashComparison& cmp) {
  std::string out = "method,size,threshold,f1,fps,best\n";
  for (std::size_t i = 0; i < cmp.rows.size(); ++i) {
    const auto& r = cmp.rows[i];
    char f1[32] = "N/A";
    if (r.f1) std::snprintf(f1, sizeof(f1), "%.4f", *r.f1);
    char fps[32];
    std::snprintf(fps, sizeof(fps), "%.1f", r.fps);
    out += std::string(to_string(r.method)) + "," + std::to_string(r.size) + "," + std::to_string(r.threshold) + "," +
           f1 + "," + fps + "," + (cmp.best == i ? "yes" : "no") + "\n";
  }
  return out;
}

}  // namespace hashproctor
