#include "hashproctor/detections.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"
#include "json_util.hpp"

namespace hashproctor {

using detail::json;

const char* to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Primary: return "primary";
    case Provenance::Fallback: return "fallback";
    case Provenance::Carried: return "carried";
    case Provenance::None: return "none";
  }
  return "unknown";
}

namespace {

RawDetection detection_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "detection entry must be a JSON object");
  if (!j.contains("frame") || !j["frame"].is_number_integer()) {
    throw Error(ErrorKind::Parse, "detection entry needs an integer \"frame\"");
  }
  RawDetection d;
  d.frame = j["frame"].get<std::int64_t>();
  if (d.frame < 0) throw Error(ErrorKind::Parse, "frame index must be non-negative");
  if (auto it = j.find("face"); it != j.end() && !it->is_null()) d.face = detail::json_box(*it);
  if (auto it = j.find("eyes"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorKind::Parse, "eyes must be an array of boxes");
    if (it->size() > 2) throw Error(ErrorKind::Parse, "at most two eye boxes per frame");
    for (const auto& e : *it) d.eyes.push_back(detail::json_box(e));
  }
  if (auto it = j.find("landmarks"); it != j.end() && !it->is_null()) d.landmarks = detail::json_landmarks(*it);
  return d;
}

template <typename Fn>
void for_each_json_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const Error& e) {
      std::string where = "line " + std::to_string(line_no);
      if (j.is_object() && j.contains("frame") && j["frame"].is_number_integer()) {
        where += " (frame " + std::to_string(j["frame"].get<std::int64_t>()) + ")";
      }
      throw Error(e.kind(), where + ": " + e.what());
    }
  }
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_lines(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << body;
}

}  // namespace

ParsedDetections parse_detections_text(std::string_view text) {
  std::map<std::int64_t, RawDetection> by_frame;
  ParsedDetections out;
  for_each_json_line(text, [&](const json& j) {
    RawDetection d = detection_from_json(j);
    auto [it, inserted] = by_frame.insert_or_assign(d.frame, d);
    if (!inserted) out.warnings.push_back("duplicate entry for frame " + std::to_string(d.frame) + ", keeping the last");
  });
  out.entries.reserve(by_frame.size());
  for (auto& [frame, d] : by_frame) out.entries.push_back(std::move(d));
  return out;
}

ParsedDetections parse_detections(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "detections file not found: " + path.string());
  try {
    return parse_detections_text(read_text(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

RawDetection parse_detection_entry(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("detection entry: ") + e.what());
  }
  return detection_from_json(j);
}

std::string to_json_line(const RawDetection& d) {
  json j;
  j["frame"] = d.frame;
  j["face"] = d.face ? detail::box_json(*d.face) : json(nullptr);
  j["eyes"] = json::array();
  for (const auto& e : d.eyes) j["eyes"].push_back(detail::box_json(e));
  j["landmarks"] = d.landmarks ? detail::landmarks_json(*d.landmarks) : json(nullptr);
  return j.dump();
}

void write_detections(const std::filesystem::path& path, std::span<const RawDetection> entries) {
  std::string body;
  for (const auto& d : entries) {
    body += to_json_line(d);
    body += '\n';
  }
  write_lines(path, body);
}

DetectionRecord resolve_hybrid(const RawDetection* primary, const RawDetection* fallback,
                               const DetectionRecord* previous, std::int64_t frame_index) {
  auto from_raw = [frame_index](const RawDetection& d, Provenance p) {
    return DetectionRecord{frame_index, d.face, d.eyes, d.landmarks, p};
  };
  if (primary != nullptr && primary->has_detection()) return from_raw(*primary, Provenance::Primary);
  if (fallback != nullptr && fallback->has_detection()) return from_raw(*fallback, Provenance::Fallback);
  if (previous != nullptr && previous->provenance != Provenance::None) {
    DetectionRecord carried = *previous;
    carried.frame_index = frame_index;
    carried.provenance = Provenance::Carried;
    return carried;
  }
  return DetectionRecord{frame_index, std::nullopt, {}, std::nullopt, Provenance::None};
}

std::vector<DetectionRecord> resolve_stream(std::span<const RawDetection> primary,
                                            std::span<const RawDetection> fallback, std::int64_t frame_count) {
  auto index = [frame_count](std::span<const RawDetection> entries, const char* which) {
    std::vector<const RawDetection*> table(static_cast<std::size_t>(frame_count), nullptr);
    for (const auto& d : entries) {
      if (d.frame < 0 || d.frame >= frame_count) {
        throw Error(ErrorKind::InvalidInput, std::string(which) + " detections reference frame " +
                                                 std::to_string(d.frame) + " but only " + std::to_string(frame_count) +
                                                 " frames exist");
      }
      table[static_cast<std::size_t>(d.frame)] = &d;
    }
    return table;
  };
  const auto p = index(primary, "primary");
  const auto f = index(fallback, "fallback");
  std::vector<DetectionRecord> out;
  out.reserve(static_cast<std::size_t>(frame_count));
  for (std::int64_t i = 0; i < frame_count; ++i) {
    const DetectionRecord* prev = out.empty() ? nullptr : &out.back();
    out.push_back(resolve_hybrid(p[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)], prev, i));
  }
  return out;
}

namespace {

GroundTruthLabel label_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "ground-truth entry must be a JSON object");
  if (!j.contains("frame") || !j["frame"].is_number_integer()) {
    throw Error(ErrorKind::Parse, "ground-truth entry needs an integer \"frame\"");
  }
  GroundTruthLabel g;
  g.frame = j["frame"].get<std::int64_t>();
  auto get_bool = [&](const char* key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) throw Error(ErrorKind::Parse, std::string(key) + " must be a boolean");
    return it->get<bool>();
  };
  g.face_present = get_bool("face_present", false);
  g.anomaly = get_bool("anomaly", false);
  if (auto it = j.find("eyes_correct"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error(ErrorKind::Parse, "eyes_correct must be a boolean or null");
    g.eyes_correct = it->get<bool>();
  }
  if (auto it = j.find("true_landmarks"); it != j.end() && !it->is_null()) g.true_landmarks = detail::json_landmarks(*it);
  return g;
}

}  // namespace

std::vector<GroundTruthLabel> parse_ground_truth_text(std::string_view text) {
  std::map<std::int64_t, GroundTruthLabel> by_frame;
  for_each_json_line(text, [&](const json& j) {
    auto g = label_from_json(j);
    by_frame.insert_or_assign(g.frame, g);
  });
  std::vector<GroundTruthLabel> out;
  out.reserve(by_frame.size());
  for (auto& [frame, g] : by_frame) out.push_back(std::move(g));
  return out;
}

std::vector<GroundTruthLabel> parse_ground_truth(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "ground truth file not found: " + path.string());
  try {
    return parse_ground_truth_text(read_text(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string to_json_line(const GroundTruthLabel& g) {
  json j;
  j["frame"] = g.frame;
  j["face_present"] = g.face_present;
  j["eyes_correct"] = g.eyes_correct ? json(*g.eyes_correct) : json(nullptr);
  j["anomaly"] = g.anomaly;
  j["true_landmarks"] = g.true_landmarks ? detail::landmarks_json(*g.true_landmarks) : json(nullptr);
  return j.dump();
}

void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruthLabel> labels) {
  std::string body;
  for (const auto& g : labels) {
    body += to_json_line(g);
    body += '\n';
  }
  write_lines(path, body);
}

namespace {

std::map<std::int64_t, const DetectionRecord*> index_records(std::span<const DetectionRecord> records) {
  std::map<std::int64_t, const DetectionRecord*> out;
  for (const auto& r : records) out[r.frame_index] = &r;
  return out;
}

const DetectionRecord& record_for(const std::map<std::int64_t, const DetectionRecord*>& index, std::int64_t frame) {
  auto it = index.find(frame);
  if (it == index.end()) {
    throw Error(ErrorKind::InvalidInput, "no detection record for labeled frame " + std::to_string(frame));
  }
  return *it->second;
}

bool detector_output(const DetectionRecord& r) {
  return r.provenance == Provenance::Primary || r.provenance == Provenance::Fallback;
}

}  // namespace

double face_detected_rate(std::span<const GroundTruthLabel> labels, std::span<const DetectionRecord> records) {
  const auto index = index_records(records);
  std::size_t faces = 0;
  std::size_t detected = 0;
  for (const auto& g : labels) {
    if (!g.face_present) continue;
    ++faces;
    if (detector_output(record_for(index, g.frame))) ++detected;
  }
  if (faces == 0) throw Error(ErrorKind::UndefinedMetric, "face detected rate undefined: no face-labeled frames");
  return 100.0 * static_cast<double>(detected) / static_cast<double>(faces);
}

double eye_detected_rate(std::span<const GroundTruthLabel> labels, std::span<const DetectionRecord> records) {
  const auto index = index_records(records);
  std::size_t faces = 0;
  std::size_t correct = 0;
  for (const auto& g : labels) {
    if (!g.face_present) continue;
    ++faces;
    const auto& r = record_for(index, g.frame);
    if (detector_output(r) && !r.eyes.empty() && g.eyes_correct.value_or(false)) ++correct;
  }
  if (faces == 0) throw Error(ErrorKind::UndefinedMetric, "eye detected rate undefined: no face-labeled frames");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(faces);
}

double avg_normalized_error(std::span<const LandmarkComparison> frames) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    if (fr.detected.size() != fr.truth.size()) {
      throw Error(ErrorKind::InvalidInput, "frame " + std::to_string(f) + ": detected and truth landmark counts differ");
    }
    const double iod = std::hypot(fr.left_pupil.x - fr.right_pupil.x, fr.left_pupil.y - fr.right_pupil.y);
    if (!(iod > 0.0)) {
      throw Error(ErrorKind::DegenerateGeometry, "frame " + std::to_string(f) + ": zero inter-pupil distance");
    }
    for (std::size_t i = 0; i < fr.truth.size(); ++i) {
      total += std::hypot(fr.detected[i].x - fr.truth[i].x, fr.detected[i].y - fr.truth[i].y) / iod;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::InvalidInput, "no landmarks to compare");
  return total / static_cast<double>(count);
}

}  // namespace hashproctor
