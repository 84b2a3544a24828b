#include "hashproctor/calibration.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"
#include "json_util.hpp"

namespace hashproctor {

using detail::json;

const char* to_string(Arrow a) noexcept {
  switch (a) {
    case Arrow::Up: return "up";
    case Arrow::Down: return "down";
    case Arrow::Left: return "left";
    case Arrow::Right: return "right";
  }
  return "unknown";
}

Arrow parse_arrow(std::string_view name) {
  if (name == "up" || name == "ArrowUp") return Arrow::Up;
  if (name == "down" || name == "ArrowDown") return Arrow::Down;
  if (name == "left" || name == "ArrowLeft") return Arrow::Left;
  if (name == "right" || name == "ArrowRight") return Arrow::Right;
  throw Error(ErrorKind::InvalidInput, "unknown arrow key '" + std::string(name) + "'");
}

void validate(const CalibrationConfig& cfg) {
  validate(cfg.hash);
  if (cfg.screen_width < 1 || cfg.screen_height < 1) throw Error(ErrorKind::Config, "screen size must be positive");
  if (cfg.margin < 0 || 2 * cfg.margin >= cfg.screen_width || 2 * cfg.margin >= cfg.screen_height) {
    throw Error(ErrorKind::Config, "crosshair margin leaves no room on screen");
  }
  if (cfg.required_captures < 2) throw Error(ErrorKind::Config, "calibration needs at least two captures");
  if (cfg.response_window <= 0 || cfg.shrink_duration < 0) throw Error(ErrorKind::Config, "bad stimulus timing");
}

CalibrationSession::CalibrationSession(std::string session_id, CalibrationConfig cfg)
    : id_(std::move(session_id)), cfg_(cfg), rng_(cfg.seed) {
  validate(cfg_);
}

int CalibrationSession::accepted_count() const noexcept {
  return static_cast<int>(std::count_if(captures_.begin(), captures_.end(), [](const Capture& c) { return c.accepted; }));
}

Point CalibrationSession::draw_position() {
  if (next_cell_ >= cell_order_.size()) {
    cell_order_.resize(9);
    std::iota(cell_order_.begin(), cell_order_.end(), 0);
    std::shuffle(cell_order_.begin(), cell_order_.end(), rng_);
    next_cell_ = 0;
  }
  const int cell = cell_order_[next_cell_++];
  const double x0 = cfg_.margin;
  const double y0 = cfg_.margin;
  const double cw = (cfg_.screen_width - 2 * cfg_.margin) / 3.0;
  const double ch = (cfg_.screen_height - 2 * cfg_.margin) / 3.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = u(rng_);
  const double fy = u(rng_);
  return {x0 + (cell % 3 + fx) * cw, y0 + (cell / 3 + fy) * ch};
}

Arrow CalibrationSession::draw_arrow() {
  std::uniform_int_distribution<int> d(0, 3);
  return static_cast<Arrow>(d(rng_));
}

const Stimulus& CalibrationSession::next_stimulus() {
  if (finalized()) throw Error(ErrorKind::State, "calibration session " + id_ + " is already finalized");
  if (pending_) return *pending_;
  Stimulus s;
  s.sequence = ++sequence_;
  s.position = last_wrong_ ? last_position_ : draw_position();
  s.arrow = draw_arrow();
  s.shrink_duration = cfg_.shrink_duration;
  s.response_window = cfg_.response_window;
  s.capture_offset = cfg_.capture_offset;
  last_position_ = s.position;
  pending_ = s;
  return *pending_;
}

ResponseOutcome CalibrationSession::record_response(const Stimulus& stimulus, Arrow pressed,
                                                    std::optional<Frame> photo) {
  if (finalized()) throw Error(ErrorKind::State, "calibration session " + id_ + " is already finalized");
  if (!pending_ || pending_->sequence != stimulus.sequence) {
    throw Error(ErrorKind::State, "response does not match the current stimulus");
  }
  const bool correct = pressed == stimulus.arrow;
  if (correct && (!photo || photo->empty())) {
    throw Error(ErrorKind::Capture, "correct response without a photo");
  }
  Capture c;
  c.sequence = stimulus.sequence;
  c.position = stimulus.position;
  c.shown = stimulus.arrow;
  c.pressed = pressed;
  c.accepted = correct;
  if (correct) c.photo = std::move(photo);
  captures_.push_back(std::move(c));
  pending_.reset();
  last_wrong_ = !correct;

  ResponseOutcome out;
  out.accepted = correct;
  out.accepted_count = accepted_count();
  out.required = cfg_.required_captures;
  if (out.accepted_count >= cfg_.required_captures) out.threshold = finalize();
  return out;
}

std::vector<Frame> CalibrationSession::accepted_photos() const {
  std::vector<Frame> out;
  for (const auto& c : captures_) {
    if (c.accepted && c.photo) out.push_back(*c.photo);
  }
  return out;
}

int CalibrationSession::finalize() {
  if (threshold_) return *threshold_;
  const auto photos = accepted_photos();
  threshold_ = compute_threshold(photos, cfg_.hash);
  pending_.reset();
  return *threshold_;
}

int max_pairwise_distance(std::span<const PerceptualHash> hashes) {
  if (hashes.size() < 2) {
    throw Error(ErrorKind::InsufficientCalibration, "threshold needs at least two accepted captures, got " +
                                                        std::to_string(hashes.size()));
  }
  int best = 0;
  for (std::size_t i = 0; i < hashes.size(); ++i) {
    for (std::size_t j = i + 1; j < hashes.size(); ++j) best = std::max(best, hamming(hashes[i], hashes[j]));
  }
  return best;
}

int compute_threshold(std::span<const Frame> photos, const HashConfig& hash) {
  validate(hash);
  std::vector<PerceptualHash> hashes;
  hashes.reserve(photos.size());
  for (const auto& p : photos) hashes.push_back(compute_hash(p, hash));
  return max_pairwise_distance(hashes);
}

CalibrationRecord load_calibration(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  try {
    CalibrationRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.hash.algorithm = parse_hash_algorithm(j.at("hash").at("algo").get<std::string>());
    r.hash.size = j.at("hash").at("size").get<int>();
    for (const auto& c : j.value("captures", json::array())) {
      const auto& pos = c.at("position");
      r.captures.push_back({{pos.at(0).get<double>(), pos.at(1).get<double>()}, c.at("photo").get<std::string>()});
    }
    if (auto it = j.find("threshold"); it != j.end() && !it->is_null()) {
      r.threshold = it->get<int>();
      if (*r.threshold < 0) throw Error(ErrorKind::Parse, "threshold must be non-negative");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void save_calibration(const std::filesystem::path& path, const CalibrationRecord& record) {
  json j;
  j["session_id"] = record.session_id;
  j["hash"] = {{"algo", to_string(record.hash.algorithm)}, {"size", record.hash.size}};
  j["captures"] = json::array();
  for (const auto& c : record.captures) {
    j["captures"].push_back({{"position", detail::point_json(c.position)}, {"photo", c.photo}});
  }
  j["threshold"] = record.threshold ? json(*record.threshold) : json(nullptr);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CalibrationRecord save_session(const CalibrationSession& session, const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  const auto photo_dir = dir / "photos";
  std::filesystem::create_directories(photo_dir);
  CalibrationRecord r;
  r.session_id = session.id();
  r.hash = session.config().hash;
  r.threshold = session.threshold();
  int n = 0;
  for (const auto& c : session.captures()) {
    if (!c.accepted || !c.photo) continue;
    char name[32];
    std::snprintf(name, sizeof(name), "capture_%03d.png", n++);
    write_png(photo_dir / name, *c.photo);
    r.captures.push_back({c.position, (std::filesystem::path("photos") / name).generic_string()});
  }
  save_calibration(path, r);
  return r;
}

std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hashproctor
