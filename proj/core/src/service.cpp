#include "hashproctor/service.hpp"

#include <httplib.h>

#include <fstream>

#include "hashproctor/error.hpp"
#include "hashproctor/imagehash.hpp"
#include "hashproctor/pipeline.hpp"
#include "hashproctor/png_io.hpp"
#include "hashproctor/zip.hpp"
#include "json_util.hpp"

namespace hashproctor {

namespace fs = std::filesystem;
using detail::json;

const char* to_string(SessionPhase p) noexcept {
  switch (p) {
    case SessionPhase::Calibrating: return "calibrating";
    case SessionPhase::Monitoring: return "monitoring";
    case SessionPhase::Finished: return "finished";
  }
  return "unknown";
}

namespace {

constexpr std::int64_t kSnapshotEvery = 100;

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

json stimulus_json(const Stimulus& s) {
  return {{"sequence", s.sequence},
          {"position", detail::point_json(s.position)},
          {"arrow", to_string(s.arrow)},
          {"shrink_duration", s.shrink_duration},
          {"response_window", s.response_window},
          {"capture_offset", s.capture_offset}};
}

json event_json(std::size_t id, const AnomalyEvent& e) {
  return {{"id", id},
          {"start", e.start},
          {"end", e.end},
          {"peak", e.peak_distance},
          {"anchor", e.anchor_index},
          {"verdict", to_string(e.verdict)}};
}

RawDetection parse_upload_detection(std::string_view text, std::int64_t index) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("detection entry: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Parse, "detection entry must be a JSON object");
  if (!j.contains("frame")) j["frame"] = index;
  if (j["frame"] != index) {
    throw Error(ErrorKind::InvalidInput, "detection entry is for frame " + j["frame"].dump() + ", upload is frame " +
                                             std::to_string(index));
  }
  return parse_detection_entry(j.dump());
}

}  // namespace

SessionSettings parse_session_settings(std::string_view body) {
  SessionSettings s;
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return s;
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("session settings: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Parse, "session settings must be a JSON object");
  try {
    if (auto it = j.find("hash"); it != j.end()) {
      if (auto a = it->find("algo"); a != it->end()) s.hash.algorithm = parse_hash_algorithm(a->get<std::string>());
      read_field(*it, "size", s.hash.size);
    }
    if (auto it = j.find("hide"); it != j.end()) {
      if (auto m = it->find("mode"); m != it->end()) s.hide.mode = parse_hide_mode(m->get<std::string>());
      read_field(*it, "blur_level", s.hide.blur_level);
      read_field(*it, "point_size", s.hide.point_size);
      read_field(*it, "preserve_eyes", s.hide.preserve_eyes);
      if (auto c = it->find("mask_color"); c != it->end()) {
        const auto rgb = c->get<std::vector<int>>();
        if (rgb.size() != 3) throw Error(ErrorKind::InvalidInput, "mask_color needs three components");
        for (int v : rgb) {
          if (v < 0 || v > 255) throw Error(ErrorKind::InvalidInput, "mask_color components must be 0..255");
        }
        s.hide.mask_color = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                             static_cast<std::uint8_t>(rgb[2])};
      }
    }
    if (auto it = j.find("smoothing"); it != j.end()) {
      auto& sm = s.detector.smoothing;
      read_field(*it, "window", sm.window);
      read_field(*it, "polyorder", sm.polyorder);
      read_field(*it, "valley_min_separation", sm.valley_min_separation);
      read_field(*it, "valley_prominence", sm.valley_prominence);
      read_field(*it, "valley_below_threshold", sm.valley_below_threshold);
    }
    if (auto it = j.find("anomaly"); it != j.end()) {
      read_field(*it, "reselect_anchor", s.detector.reselect_anchor);
      read_field(*it, "merge_gap", s.detector.merge_gap);
      read_field(*it, "min_event_len", s.detector.min_event_len);
    }
    if (auto it = j.find("calibration"); it != j.end()) {
      auto& c = s.calibration;
      read_field(*it, "screen_width", c.screen_width);
      read_field(*it, "screen_height", c.screen_height);
      read_field(*it, "margin", c.margin);
      read_field(*it, "required_captures", c.required_captures);
      read_field(*it, "shrink_duration", c.shrink_duration);
      read_field(*it, "response_window", c.response_window);
      read_field(*it, "capture_offset", c.capture_offset);
      read_field(*it, "seed", c.seed);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("session settings: ") + e.what());
  }
  s.calibration.hash = s.hash;
  validate(s.hash);
  validate(s.hide);
  validate(s.detector);
  validate(s.calibration);
  return s;
}

struct SessionManager::Session {
  std::mutex mutex;
  std::string id;
  fs::path dir;
  SessionSettings settings;
  SessionPhase phase = SessionPhase::Calibrating;
  CalibrationSession calibration;
  std::optional<AnomalyDetector> detector;
  std::optional<DetectionRecord> previous;
  std::map<std::int64_t, Verdict> verdicts;  // keyed by event start

  Session(std::string sid, fs::path d, SessionSettings s)
      : id(sid), dir(std::move(d)), settings(s), calibration(std::move(sid), s.calibration) {}

  std::vector<AnomalyEvent> events() const {
    if (!detector) return {};
    auto out = detector->events();
    for (auto& e : out) {
      if (auto it = verdicts.find(e.start); it != verdicts.end()) e.verdict = it->second;
    }
    return out;
  }

  AnomalyReport report() const {
    if (!detector) throw Error(ErrorKind::State, "session " + id + " has not started monitoring");
    AnomalyReport r = make_report(id, *detector, settings.hash, settings.hide.mode);
    r.events = events();
    return r;
  }

  json status() const {
    json j = {{"session_id", id},
              {"phase", to_string(phase)},
              {"hash", {{"algo", to_string(settings.hash.algorithm)}, {"size", settings.hash.size}}},
              {"hide", {{"mode", to_string(settings.hide.mode)}}},
              {"calibration",
               {{"accepted", calibration.accepted_count()}, {"required", settings.calibration.required_captures}}},
              {"threshold", calibration.threshold() ? json(*calibration.threshold()) : json(nullptr)},
              {"frames", detector ? detector->frames_seen() : 0}};
    return j;
  }

  DetectionRecord resolve(const Upload& up, std::int64_t index, int width, int height) {
    std::optional<RawDetection> primary, fallback;
    if (up.detection) primary = parse_upload_detection(*up.detection, index);
    if (up.fallback) fallback = parse_upload_detection(*up.fallback, index);
    if (!primary && !fallback) {
      // Stand-in for a live detector: a fixed box over the frame center.
      primary = RawDetection{index, BoundingBox{width / 4, height / 4, width / 2, height / 2}, {}, std::nullopt};
    }
    return resolve_hybrid(primary ? &*primary : nullptr, fallback ? &*fallback : nullptr,
                          previous ? &*previous : nullptr, index);
  }

  void snapshot() const {
    json j = status();
    if (detector) {
      j["report"] = json::parse(to_json(report()));
    }
    std::ofstream out(dir / "session.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write snapshot for session " + id);
    out << j.dump(2) << '\n';
  }
};

SessionManager::SessionManager(fs::path output_dir) : output_dir_(std::move(output_dir)) {
  fs::create_directories(output_dir_ / "sessions");
}

SessionManager::~SessionManager() = default;

fs::path SessionManager::session_dir(const std::string& id) const { return output_dir_ / "sessions" / id; }

SessionManager::Session& SessionManager::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::NotFound, "no session '" + id + "'");
  return *it->second;
}

std::string SessionManager::create_session(std::string_view settings_json) {
  SessionSettings settings = parse_session_settings(settings_json);
  std::lock_guard lock(mutex_);
  char id[32];
  std::snprintf(id, sizeof(id), "s%06llu", static_cast<unsigned long long>(++counter_));
  while (sessions_.contains(id) || fs::exists(session_dir(id))) {
    std::snprintf(id, sizeof(id), "s%06llu", static_cast<unsigned long long>(++counter_));
  }
  if (settings.calibration.seed == 0) settings.calibration.seed = counter_;
  const fs::path dir = session_dir(id);
  fs::create_directories(dir / "hidden");
  auto session = std::make_unique<Session>(id, dir, settings);
  session->snapshot();
  const json out = session->status();
  sessions_.emplace(id, std::move(session));
  return out.dump();
}

std::string SessionManager::status(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.status().dump();
}

std::string SessionManager::calibration_next(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (s.phase != SessionPhase::Calibrating || s.calibration.finalized()) {
    throw Error(ErrorKind::State, "session " + id + " is not calibrating");
  }
  return stimulus_json(s.calibration.next_stimulus()).dump();
}

std::string SessionManager::calibration_response(const std::string& id, std::uint64_t sequence, std::string_view key,
                                                 std::optional<Upload> photo) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (s.phase != SessionPhase::Calibrating || s.calibration.finalized()) {
    throw Error(ErrorKind::State, "session " + id + " is not calibrating");
  }
  const auto& pending = s.calibration.pending();
  if (!pending || pending->sequence != sequence) {
    throw Error(ErrorKind::Conflict, "stimulus " + std::to_string(sequence) + " is not the pending one");
  }
  const Arrow pressed = parse_arrow(key);
  std::optional<Frame> hidden;
  if (photo) {
    const Frame original = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(photo->image_png.data()),
                                                photo->image_png.size()));
    // Photos are hidden on arrival so only anonymized pixels are kept.
    const DetectionRecord rec = s.resolve(*photo, static_cast<std::int64_t>(sequence), original.width, original.height);
    hidden = hide(original, rec, s.settings.hide);
  }
  const Stimulus stim = *pending;
  const ResponseOutcome r = s.calibration.record_response(stim, pressed, std::move(hidden));
  if (s.calibration.finalized()) {
    save_session(s.calibration, s.dir / "calibration" / "session.json");
    s.snapshot();
  }
  return json{{"accepted", r.accepted},
              {"accepted_count", r.accepted_count},
              {"required", r.required},
              {"threshold", r.threshold ? json(*r.threshold) : json(nullptr)}}
      .dump();
}

std::string SessionManager::start(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (s.phase != SessionPhase::Calibrating) {
    throw Error(ErrorKind::State, "session " + id + " is already " + to_string(s.phase));
  }
  if (!s.calibration.threshold()) {
    throw Error(ErrorKind::State, "session " + id + " has no calibration threshold; calibrate first");
  }
  s.detector.emplace(*s.calibration.threshold(), s.settings.detector);
  s.phase = SessionPhase::Monitoring;
  s.snapshot();
  return s.status().dump();
}

std::string SessionManager::ingest_frame(const std::string& id, std::int64_t index, const Upload& frame) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (s.phase != SessionPhase::Monitoring) {
    throw Error(ErrorKind::State, "session " + id + " is " + to_string(s.phase) + ", not monitoring");
  }
  const std::int64_t expected = s.detector->frames_seen();
  if (index != expected) {
    throw Error(ErrorKind::Conflict,
                "frame " + std::to_string(index) + " out of order; expected " + std::to_string(expected));
  }
  Frame hidden =
      decode_png(std::span(reinterpret_cast<const std::uint8_t*>(frame.image_png.data()), frame.image_png.size()));
  DetectionRecord rec = s.resolve(frame, index, hidden.width, hidden.height);
  hide_in_place(hidden, rec, s.settings.hide);
  write_png(s.dir / "hidden" / frame_file_name(index), hidden);
  const auto flag = s.detector->step(compute_hash(hidden, s.settings.hash), index);
  s.previous = std::move(rec);
  if ((index + 1) % kSnapshotEvery == 0) s.snapshot();

  json out = {{"index", index}, {"anchor_index", s.detector->anchor_index()}};
  out["flag"] = flag ? json{{"index", flag->index}, {"smoothed", flag->smoothed}, {"flagged", flag->flagged}}
                     : json(nullptr);
  return out.dump();
}

std::string SessionManager::finish(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  if (s.phase != SessionPhase::Monitoring) {
    throw Error(ErrorKind::State, "session " + id + " is " + to_string(s.phase) + ", not monitoring");
  }
  s.detector->finalize();
  s.phase = SessionPhase::Finished;
  save_report(s.dir / "report.json", s.report());
  s.snapshot();
  return s.status().dump();
}

std::string SessionManager::series(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  json j = {{"threshold", s.calibration.threshold() ? json(*s.calibration.threshold()) : json(nullptr)},
            {"raw", json::array()},
            {"smoothed", json::array()},
            {"flags", json::array()},
            {"anchors", json::array()}};
  if (s.detector) {
    j["raw"] = s.detector->raw();
    j["smoothed"] = s.detector->smoothed();
    j["flags"] = s.detector->flags();
    j["anchors"] = s.detector->anchors();
  }
  return j.dump();
}

std::string SessionManager::events(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  json arr = json::array();
  const auto ev = s.events();
  for (std::size_t i = 0; i < ev.size(); ++i) arr.push_back(event_json(i, ev[i]));
  return json{{"session_id", id}, {"events", arr}}.dump();
}

std::string SessionManager::confirmed(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  json arr = json::array();
  const auto ev = s.events();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].verdict == Verdict::Confirmed) arr.push_back(event_json(i, ev[i]));
  }
  return json{{"session_id", id}, {"events", arr}}.dump();
}

std::string SessionManager::set_verdict(const std::string& id, std::size_t event_id, std::string_view verdict) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  const Verdict v = parse_verdict(verdict);
  const auto ev = s.events();
  if (event_id >= ev.size()) {
    throw Error(ErrorKind::NotFound, "session " + id + " has no event " + std::to_string(event_id));
  }
  s.verdicts[ev[event_id].start] = v;
  if (s.phase == SessionPhase::Finished) save_report(s.dir / "report.json", s.report());
  s.snapshot();
  auto updated = ev[event_id];
  updated.verdict = v;
  return event_json(event_id, updated).dump();
}

AnomalyReport SessionManager::report_of(const std::string& id) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  return s.report();
}

std::string SessionManager::report(const std::string& id) { return to_json(report_of(id)); }

std::vector<std::uint8_t> SessionManager::clip(const std::string& id, std::size_t event_id, int pad) {
  Session& s = find(id);
  std::lock_guard lock(s.mutex);
  const AnomalyReport r = s.report();
  if (event_id >= r.events.size()) {
    throw Error(ErrorKind::NotFound, "session " + id + " has no event " + std::to_string(event_id));
  }
  const ClipRange range = clip_range(r, event_id, pad);
  std::vector<ZipEntry> entries;
  for (std::int64_t i = range.first; i <= range.last; ++i) {
    const std::string name = frame_file_name(i);
    entries.push_back({name, read_file_bytes(s.dir / "hidden" / name)});
  }
  return make_zip(entries);
}

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Config:
    case ErrorKind::Parse:
    case ErrorKind::Capture:
    case ErrorKind::InsufficientCalibration:
    case ErrorKind::IncompatibleHash:
    case ErrorKind::DegenerateGeometry:
      return 400;
    case ErrorKind::NotFound:
      return 404;
    case ErrorKind::Conflict:
    case ErrorKind::State:
      return 409;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, const std::string& body, int status = 200) {
  res.status = status;
  res.set_content(body, "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump(), http_status(e.kind()));
    } catch (const json::exception& e) {
      send_json(res, json{{"error", "parse"}, {"message", e.what()}}.dump(), 400);
    } catch (const std::exception& e) {
      send_json(res, json{{"error", "internal"}, {"message", e.what()}}.dump(), 500);
    }
  };
}

std::string field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  throw Error(ErrorKind::InvalidInput, "missing form field '" + key + "'");
}

std::optional<std::string> optional_field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key) || req.has_param(key)) return field(req, key);
  return std::nullopt;
}

long long parse_int(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " must be an integer");
  }
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& m) {
  const std::string sid = R"(/sessions/([A-Za-z0-9_-]+))";
  server.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                send_json(res, m.create_session(req.body), 201);
              }));
  server.Get(sid, guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, m.status(req.matches[1]));
             }));
  server.Post(sid + "/calibration/next", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                send_json(res, m.calibration_next(req.matches[1]));
              }));
  server.Post(sid + "/calibration/response", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                const auto seq = parse_int(field(req, "sequence"), "sequence");
                if (seq < 0) throw Error(ErrorKind::InvalidInput, "sequence must be non-negative");
                std::optional<Upload> photo;
                if (auto png = optional_field(req, "photo")) {
                  photo = Upload{*png, optional_field(req, "detection"), optional_field(req, "fallback")};
                }
                send_json(res, m.calibration_response(req.matches[1], static_cast<std::uint64_t>(seq),
                                                      field(req, "key"), std::move(photo)));
              }));
  server.Post(sid + "/start", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                send_json(res, m.start(req.matches[1]));
              }));
  server.Post(sid + "/frames", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                const auto index = parse_int(field(req, "index"), "index");
                Upload up{field(req, "frame"), optional_field(req, "detection"), optional_field(req, "fallback")};
                send_json(res, m.ingest_frame(req.matches[1], index, up));
              }));
  server.Post(sid + "/finish", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                send_json(res, m.finish(req.matches[1]));
              }));
  server.Get(sid + "/series", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, m.series(req.matches[1]));
             }));
  server.Get(sid + "/events", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, m.events(req.matches[1]));
             }));
  server.Get(sid + "/confirmed", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, m.confirmed(req.matches[1]));
             }));
  server.Get(sid + "/report", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               send_json(res, m.report(req.matches[1]));
             }));
  server.Get(sid + R"(/events/(\d+)/clip)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               const auto eid = static_cast<std::size_t>(parse_int(req.matches[2], "event id"));
               int pad = 15;
               if (req.has_param("pad")) pad = static_cast<int>(parse_int(req.get_param_value("pad"), "pad"));
               const auto zip = m.clip(req.matches[1], eid, pad);
               res.set_content(std::string(zip.begin(), zip.end()), "application/zip");
             }));
  server.Post(sid + R"(/events/(\d+)/verdict)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                const auto eid = static_cast<std::size_t>(parse_int(req.matches[2], "event id"));
                std::string verdict;
                if (req.has_param("verdict")) {
                  verdict = req.get_param_value("verdict");
                } else {
                  const json body = json::parse(req.body);
                  verdict = body.at("verdict").get<std::string>();
                }
                send_json(res, m.set_verdict(req.matches[1], eid, verdict));
              }));
}

void serve(const std::string& host, int port, const fs::path& output_dir) {
  SessionManager manager(output_dir);
  httplib::Server server;
  install_routes(server, manager);
  if (!server.listen(host, port)) {
    throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace hashproctor
