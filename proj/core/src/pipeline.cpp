#include "hashproctor/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include "hashproctor/calibration.hpp"
#include "hashproctor/config.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"

namespace hashproctor {

namespace fs = std::filesystem;

std::string frame_file_name(std::int64_t index) {
  char name[40];
  std::snprintf(name, sizeof(name), "frame_%06lld.png", static_cast<long long>(index));
  return name;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  const KeyValueFile f = KeyValueFile::load(path);
  static const std::set<std::string> known = {
      "session_id", "frames_dir", "primary_detections", "fallback_detections", "ground_truth", "calibration",
      "calibration_detections", "output_dir", "hide.mode", "hide.blur_level", "hide.point_size", "hide.mask_color",
      "hide.preserve_eyes", "hash.algo", "hash.size", "smoothing.window", "smoothing.polyorder",
      "smoothing.valley_min_separation", "smoothing.valley_prominence", "smoothing.valley_below_threshold",
      "anomaly.reselect_anchor", "anomaly.merge_gap", "anomaly.min_event_len"};
  for (const auto& k : f.keys()) {
    if (!known.contains(k)) throw Error(ErrorKind::Config, path.string() + ": unknown key '" + k + "'");
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  auto required = [&](const std::string& key) {
    auto v = f.string(key);
    if (!v) throw Error(ErrorKind::Config, path.string() + ": missing required key '" + key + "'");
    return resolve(*v);
  };

  PipelineConfig cfg;
  if (auto v = f.string("session_id")) cfg.session_id = *v;
  cfg.frames_dir = required("frames_dir");
  cfg.primary_detections = required("primary_detections");
  cfg.calibration = required("calibration");
  cfg.output_dir = required("output_dir");
  if (auto v = f.string("fallback_detections")) cfg.fallback_detections = resolve(*v);
  if (auto v = f.string("ground_truth")) cfg.ground_truth = resolve(*v);
  if (auto v = f.string("calibration_detections")) cfg.calibration_detections = resolve(*v);

  if (auto v = f.string("hide.mode")) cfg.hide.mode = parse_hide_mode(*v);
  if (auto v = f.integer("hide.blur_level")) cfg.hide.blur_level = static_cast<int>(*v);
  if (auto v = f.integer("hide.point_size")) cfg.hide.point_size = static_cast<int>(*v);
  if (auto v = f.boolean("hide.preserve_eyes")) cfg.hide.preserve_eyes = *v;
  if (auto v = f.int_array("hide.mask_color")) {
    if (v->size() != 3) throw Error(ErrorKind::Config, "hide.mask_color needs three components");
    for (long long c : *v) {
      if (c < 0 || c > 255) throw Error(ErrorKind::Config, "hide.mask_color components must be 0..255");
    }
    cfg.hide.mask_color = {static_cast<std::uint8_t>((*v)[0]), static_cast<std::uint8_t>((*v)[1]),
                           static_cast<std::uint8_t>((*v)[2])};
  }
  if (auto v = f.string("hash.algo")) cfg.hash.algorithm = parse_hash_algorithm(*v);
  if (auto v = f.integer("hash.size")) cfg.hash.size = static_cast<int>(*v);
  auto& sm = cfg.detector.smoothing;
  if (auto v = f.integer("smoothing.window")) sm.window = static_cast<int>(*v);
  if (auto v = f.integer("smoothing.polyorder")) sm.polyorder = static_cast<int>(*v);
  if (auto v = f.integer("smoothing.valley_min_separation")) sm.valley_min_separation = static_cast<int>(*v);
  if (auto v = f.number("smoothing.valley_prominence")) sm.valley_prominence = *v;
  if (auto v = f.boolean("smoothing.valley_below_threshold")) sm.valley_below_threshold = *v;
  if (auto v = f.boolean("anomaly.reselect_anchor")) cfg.detector.reselect_anchor = *v;
  if (auto v = f.integer("anomaly.merge_gap")) cfg.detector.merge_gap = static_cast<int>(*v);
  if (auto v = f.integer("anomaly.min_event_len")) cfg.detector.min_event_len = static_cast<int>(*v);
  return cfg;
}

namespace {

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
}

bool is_within(const fs::path& inner, const fs::path& outer) {
  const auto a = fs::weakly_canonical(inner);
  const auto b = fs::weakly_canonical(outer);
  auto ai = a.begin();
  for (auto bi = b.begin(); bi != b.end(); ++bi, ++ai) {
    if (bi->empty()) continue;
    if (ai == a.end() || *ai != *bi) return false;
  }
  return true;
}

std::vector<Frame> load_calibration_photos(const PipelineConfig& cfg, const std::vector<fs::path>& files) {
  std::vector<Frame> photos;
  for (const auto& p : files) photos.push_back(read_png(p));
  if (!cfg.calibration_detections) return photos;
  const auto parsed = parse_detections(*cfg.calibration_detections);
  const auto records =
      resolve_stream(parsed.entries, {}, static_cast<std::int64_t>(photos.size()));
  for (std::size_t i = 0; i < photos.size(); ++i) photos[i] = hide(photos[i], records[i], cfg.hide);
  return photos;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  validate(cfg.hide);
  validate(cfg.hash);
  validate(cfg.detector);
  if (cfg.session_id.empty()) throw Error(ErrorKind::Config, "session_id must not be empty");
  if (!fs::is_directory(cfg.frames_dir)) throw Error(ErrorKind::Io, "frames directory not found: " + cfg.frames_dir.string());
  require_exists(cfg.primary_detections, "primary detections");
  if (cfg.fallback_detections) require_exists(*cfg.fallback_detections, "fallback detections");
  if (cfg.ground_truth) require_exists(*cfg.ground_truth, "ground truth");
  if (cfg.calibration_detections) require_exists(*cfg.calibration_detections, "calibration detections");
  if (!fs::exists(cfg.calibration)) {
    throw Error(ErrorKind::InsufficientCalibration,
                "no calibration at " + cfg.calibration.string() + "; calibrate first");
  }
  if (cfg.output_dir.empty()) throw Error(ErrorKind::Config, "output_dir must be set");
  if (is_within(cfg.frames_dir, cfg.output_dir) || is_within(cfg.output_dir, cfg.frames_dir)) {
    throw Error(ErrorKind::Config, "output_dir and frames_dir must be separate directories");
  }
}

std::vector<fs::path> list_frames(const fs::path& frames_dir) {
  std::vector<std::pair<long long, fs::path>> found;
  for (const auto& p : list_png_files(frames_dir)) {
    const std::string name = p.filename().string();
    if (name.size() < 11 || name.rfind("frame_", 0) != 0) continue;
    const std::string digits = name.substr(6, name.size() - 10);
    long long idx = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) continue;
    found.emplace_back(idx, p);
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (found[i].first != static_cast<long long>(i)) {
      throw Error(ErrorKind::InvalidInput, "frame sequence broken at index " + std::to_string(i) + " in " +
                                               frames_dir.string());
    }
    out.push_back(found[i].second);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no frame_%06d.png files in " + frames_dir.string());
  return out;
}

int resolve_threshold(const PipelineConfig& cfg) {
  if (fs::is_directory(cfg.calibration)) {
    const auto files = list_png_files(cfg.calibration);
    if (files.size() < 2) {
      throw Error(ErrorKind::InsufficientCalibration,
                  "calibration directory holds fewer than two photos; calibrate first");
    }
    const auto photos = load_calibration_photos(cfg, files);
    return compute_threshold(photos, cfg.hash);
  }
  const CalibrationRecord rec = load_calibration(cfg.calibration);
  if (rec.hash != cfg.hash) {
    throw Error(ErrorKind::Config, "calibration used " + std::string(to_string(rec.hash.algorithm)) + "/" +
                                       std::to_string(rec.hash.size) + " but the pipeline is configured for " +
                                       to_string(cfg.hash.algorithm) + "/" + std::to_string(cfg.hash.size));
  }
  if (!rec.threshold) {
    throw Error(ErrorKind::InsufficientCalibration, "calibration session has no threshold; calibrate first");
  }
  return *rec.threshold;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  const auto frames = list_frames(cfg.frames_dir);
  const int threshold = resolve_threshold(cfg);
  const auto n = static_cast<std::int64_t>(frames.size());

  PipelineResult result;
  auto primary = parse_detections(cfg.primary_detections);
  for (auto& w : primary.warnings) result.warnings.push_back(cfg.primary_detections.filename().string() + ": " + w);
  ParsedDetections fallback;
  if (cfg.fallback_detections) {
    fallback = parse_detections(*cfg.fallback_detections);
    for (auto& w : fallback.warnings) {
      result.warnings.push_back(cfg.fallback_detections->filename().string() + ": " + w);
    }
  }
  const auto records = resolve_stream(primary.entries, fallback.entries, n);

  result.hidden_dir = cfg.output_dir / "hidden";
  fs::create_directories(result.hidden_dir);
  AnomalyDetector detector(threshold, cfg.detector);
  for (std::int64_t i = 0; i < n; ++i) {
    Frame frame = read_png(frames[static_cast<std::size_t>(i)]);
    hide_in_place(frame, records[static_cast<std::size_t>(i)], cfg.hide);
    write_png(result.hidden_dir / frame_file_name(i), frame);
    detector.step(compute_hash(frame, cfg.hash), i);
  }
  detector.finalize();

  result.report = make_report(cfg.session_id, detector, cfg.hash, cfg.hide.mode);
  result.report_path = cfg.output_dir / "report.json";
  save_report(result.report_path, result.report);

  if (cfg.ground_truth) {
    const auto labels = parse_ground_truth(*cfg.ground_truth);
    const auto truth = truth_flags(labels, static_cast<std::size_t>(n));
    const auto flags = flags_from_events(result.report.events, static_cast<std::size_t>(n));
    const auto counts = confusion(truth, flags);
    MetricsRow row{cfg.session_id, to_string(cfg.hide.mode), {}};
    try {
      row.values = metrics(counts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedMetric) throw;
      result.warnings.push_back(std::string("metrics not written: ") + e.what());
      return result;
    }
    result.metrics = row.values;
    std::ofstream out(cfg.output_dir / "metrics.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write metrics to " + cfg.output_dir.string());
    out << metrics_json(std::span<const MetricsRow>(&row, 1));
  }
  return result;
}

ClipRange clip_range(const AnomalyReport& report, std::size_t event_id, int pad) {
  if (event_id >= report.events.size()) {
    throw Error(ErrorKind::NotFound, "no event " + std::to_string(event_id) + " in report");
  }
  if (pad < 0) throw Error(ErrorKind::InvalidInput, "clip padding must be non-negative");
  const auto& e = report.events[event_id];
  const auto last_frame = static_cast<std::int64_t>(report.frame_count()) - 1;
  return {std::max<std::int64_t>(0, e.start - pad), std::min(last_frame, e.end + pad)};
}

std::vector<Frame> extract_clip(const AnomalyReport& report, std::size_t event_id, const fs::path& hidden_dir,
                                int pad) {
  const ClipRange r = clip_range(report, event_id, pad);
  std::vector<Frame> out;
  for (std::int64_t i = r.first; i <= r.last; ++i) {
    Frame f = read_png(hidden_dir / frame_file_name(i));
    f.index = i;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace hashproctor
