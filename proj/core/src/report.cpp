#include "hashproctor/report.hpp"

#include <fstream>

#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"
#include "json_util.hpp"

namespace hashproctor {

AnomalyReport make_report(std::string session_id, const AnomalyDetector& detector, const HashConfig& hash,
                          std::optional<HideMode> mode) {
  AnomalyReport r;
  r.session_id = std::move(session_id);
  r.threshold = detector.threshold();
  r.hash = hash;
  r.mode = mode;
  r.anchors = detector.anchors();
  r.raw = detector.raw();
  r.smoothed = detector.smoothed();
  r.events = detector.events();
  return r;
}

std::string to_json(const AnomalyReport& r) {
  nlohmann::ordered_json j;
  j["session_id"] = r.session_id;
  j["threshold"] = r.threshold;
  j["hash"] = {{"algo", to_string(r.hash.algorithm)}, {"size", r.hash.size}};
  if (r.mode) j["mode"] = to_string(*r.mode);
  j["anchors"] = r.anchors;
  j["series"]["raw"] = r.raw;
  j["series"]["smoothed"] = r.smoothed;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    j["events"].push_back({{"start", e.start},
                           {"end", e.end},
                           {"peak", e.peak_distance},
                           {"anchor", e.anchor_index},
                           {"verdict", to_string(e.verdict)}});
  }
  return j.dump(2) + "\n";
}

AnomalyReport parse_report(std::string_view text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  try {
    AnomalyReport r;
    r.session_id = j.at("session_id").get<std::string>();
    r.threshold = j.at("threshold").get<int>();
    r.hash.algorithm = parse_hash_algorithm(j.at("hash").at("algo").get<std::string>());
    r.hash.size = j.at("hash").at("size").get<int>();
    if (auto it = j.find("mode"); it != j.end() && !it->is_null()) r.mode = parse_hide_mode(it->get<std::string>());
    r.anchors = j.at("anchors").get<std::vector<std::int64_t>>();
    r.raw = j.at("series").at("raw").get<std::vector<int>>();
    r.smoothed = j.at("series").at("smoothed").get<std::vector<double>>();
    for (const auto& e : j.at("events")) {
      AnomalyEvent ev;
      ev.start = e.at("start").get<std::int64_t>();
      ev.end = e.at("end").get<std::int64_t>();
      ev.peak_distance = e.at("peak").get<int>();
      ev.anchor_index = e.value("anchor", std::int64_t{0});
      ev.verdict = parse_verdict(e.value("verdict", std::string("unreviewed")));
      if (ev.start > ev.end) throw Error(ErrorKind::Parse, "event start after end");
      r.events.push_back(ev);
    }
    if (r.smoothed.size() != r.raw.size()) throw Error(ErrorKind::Parse, "raw and smoothed series lengths differ");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
}

AnomalyReport load_report(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_report(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_report(const std::filesystem::path& path, const AnomalyReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(report);
}

}  // namespace hashproctor
