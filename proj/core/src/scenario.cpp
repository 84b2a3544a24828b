#include "hashproctor/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "hashproctor/config.hpp"
#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"
#include "json_util.hpp"

namespace hashproctor {

using detail::json;

void validate(const SyntheticScenario& s) {
  if (s.duration_frames < 1) throw Error(ErrorKind::Config, "scenario needs at least one frame");
  if (s.width < 16 || s.height < 16) throw Error(ErrorKind::Config, "scenario frames must be at least 16x16");
  if (s.calibration_photos < 2) throw Error(ErrorKind::Config, "scenario needs at least two calibration photos");
  if (s.noise_sigma < 0 || s.primary_dropout < 0 || s.primary_dropout > 1 || s.carry_rate < 0 || s.carry_rate > 1) {
    throw Error(ErrorKind::Config, "noise and detector rates must be non-negative probabilities");
  }
  if (s.glance.period < 0 || (s.glance.period > 0 && (s.glance.duration < 1 || s.glance.duration >= s.glance.period))) {
    throw Error(ErrorKind::Config, "glance duration must be in [1, period)");
  }
  auto segs = s.anomaly_segments;
  std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& g = segs[i];
    if (g.start < 0 || g.end <= g.start || g.end > s.duration_frames) {
      throw Error(ErrorKind::Config, "segment [" + std::to_string(g.start) + "," + std::to_string(g.end) +
                                         ") is empty or outside the scenario");
    }
    if (g.transform.scale <= 0) throw Error(ErrorKind::Config, "segment scale must be positive");
    if (i > 0 && segs[i - 1].end > g.start) {
      throw Error(ErrorKind::Config, "segments [" + std::to_string(segs[i - 1].start) + "," +
                                         std::to_string(segs[i - 1].end) + ") and [" + std::to_string(g.start) + "," +
                                         std::to_string(g.end) + ") overlap");
    }
  }
  for (const auto& c : s.position_changes) {
    if (c.frame < 0 || c.frame >= s.duration_frames) throw Error(ErrorKind::Config, "position change outside scenario");
    if (c.transform.scale <= 0) throw Error(ErrorKind::Config, "position change scale must be positive");
  }
}

namespace {

PoseTransform transform_from_json(const json& j) {
  PoseTransform t;
  t.dx = j.value("dx", 0.0);
  t.dy = j.value("dy", 0.0);
  t.angle_deg = j.value("angle", 0.0);
  t.scale = j.value("scale", 1.0);
  return t;
}

PoseTransform compose(const PoseTransform& base, const PoseTransform& extra) {
  return {base.dx + extra.dx, base.dy + extra.dy, base.angle_deg + extra.angle_deg, base.scale * extra.scale};
}

struct Ellipse {
  double cx, cy, a, b;
  Rgb color;
};

/// Person layout relative to the neck point, in 240-line pixels, y down.
struct HeadGeometry {
  double cx = 0.0;
  double cy = -50.0;
  double a = 34.0;
  double b = 44.0;
};

constexpr Rgb kShirt{60, 90, 150};
constexpr Rgb kSkin{224, 180, 150};
constexpr Rgb kNeck{210, 165, 135};
constexpr Rgb kHair{50, 35, 25};
constexpr Rgb kSclera{240, 240, 240};
constexpr Rgb kPupil{30, 30, 40};
constexpr Rgb kBrow{60, 40, 30};
constexpr Rgb kNose{200, 150, 125};
constexpr Rgb kMouth{170, 70, 70};

struct Placement {
  double neck_x, neck_y, unit;  // world neck position, pixels per layout unit
  PoseTransform body;
  double head_dy;

  // Layout point -> world pixel.
  Point to_world(double cx, double cy, bool head) const {
    if (head) cy += head_dy;
    const double th = body.angle_deg * std::numbers::pi / 180.0;
    const double rx = body.scale * (std::cos(th) * cx - std::sin(th) * cy);
    const double ry = body.scale * (std::sin(th) * cx + std::cos(th) * cy);
    return {neck_x + unit * (body.dx + rx), neck_y + unit * (body.dy + ry)};
  }
  // World pixel -> layout point (body frame, head offset not removed).
  Point to_layout(double wx, double wy) const {
    const double th = body.angle_deg * std::numbers::pi / 180.0;
    const double px = (wx - neck_x) / unit - body.dx;
    const double py = (wy - neck_y) / unit - body.dy;
    return {(std::cos(th) * px + std::sin(th) * py) / body.scale, (-std::sin(th) * px + std::cos(th) * py) / body.scale};
  }
};

Placement make_placement(int width, int height, const PoseTransform& body, double head_dy) {
  return {width / 2.0, 0.62 * height, height / 240.0, body, head_dy};
}

Rgb background(int x, int y, int width, int height) {
  const double fx = static_cast<double>(x) / width;
  const double fy = static_cast<double>(y) / height;
  double r = 70 + 90 * fx, g = 80 + 70 * fx + 20 * fy, b = 100 + 40 * fx;
  if (fx > 0.05 && fx < 0.25 && fy > 0.15 && fy < 0.55) {
    const bool shelf = std::fmod(fy * 20.0, 2.0) < 0.25;
    r = shelf ? 90 : 120 + 40 * fx;
    g = shelf ? 60 : 90 + 30 * fy;
    b = shelf ? 40 : 60;
  } else if (fx > 0.75 && fx < 0.95 && fy > 0.1 && fy < 0.4) {
    r = 190 + 30 * fx;
    g = 200 + 20 * fy;
    b = 230;
  }
  auto c = [](double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); };
  return {c(r), c(g), c(b)};
}

std::vector<Ellipse> body_layers() { return {{0, 60, 70, 55, kShirt}, {0, -5, 14, 18, kNeck}}; }

std::vector<Ellipse> head_layers(const HeadGeometry& h) {
  const double ex = 0.41 * h.a;
  const double ey = h.cy - 0.11 * h.b;
  return {
      {h.cx, h.cy - 0.64 * h.b, 1.09 * h.a, 0.61 * h.b, kHair},
      {h.cx, h.cy, h.a, h.b, kSkin},
      {h.cx - ex, ey, 0.21 * h.a, 0.09 * h.b, kSclera},
      {h.cx + ex, ey, 0.21 * h.a, 0.09 * h.b, kSclera},
      {h.cx - ex, ey, 0.09 * h.a, 0.07 * h.b, kPupil},
      {h.cx + ex, ey, 0.09 * h.a, 0.07 * h.b, kPupil},
      {h.cx - ex, ey - 0.2 * h.b, 0.24 * h.a, 0.045 * h.b, kBrow},
      {h.cx + ex, ey - 0.2 * h.b, 0.24 * h.a, 0.045 * h.b, kBrow},
      {h.cx, h.cy + 0.18 * h.b, 0.12 * h.a, 0.18 * h.b, kNose},
      {h.cx, h.cy + 0.57 * h.b, 0.32 * h.a, 0.07 * h.b, kMouth},
  };
}

void blend(double* px, const Ellipse& e, double lx, double ly, double px_per_unit) {
  const double qx = (lx - e.cx) / e.a;
  const double qy = (ly - e.cy) / e.b;
  const double q = std::sqrt(qx * qx + qy * qy);
  const double sd = (q - 1.0) * std::min(e.a, e.b) * px_per_unit;
  const double cov = std::clamp(0.5 - sd, 0.0, 1.0);
  if (cov <= 0.0) return;
  px[0] += (e.color.r - px[0]) * cov;
  px[1] += (e.color.g - px[1]) * cov;
  px[2] += (e.color.b - px[2]) * cov;
}

void add_noise(Frame& f, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    const double d = n(rng);
    std::uint8_t* px = f.data.data() + i * 3;
    for (int c = 0; c < 3; ++c) px[c] = static_cast<std::uint8_t>(std::clamp(std::lround(px[c] + d), 0L, 255L));
  }
}

BoundingBox bounds_of(const std::vector<Point>& pts) {
  double x0 = pts.front().x, x1 = x0, y0 = pts.front().y, y1 = y0;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int bx = static_cast<int>(std::floor(x0));
  const int by = static_cast<int>(std::floor(y0));
  return {bx, by, std::max(1, static_cast<int>(std::ceil(x1)) - bx), std::max(1, static_cast<int>(std::ceil(y1)) - by)};
}

std::vector<Point> ellipse_outline(const Placement& pl, double cx, double cy, double a, double b, int n, bool head) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pts.push_back(pl.to_world(cx + a * std::cos(t), cy + b * std::sin(t), head));
  }
  return pts;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

RawDetection detection_for(const Placement& pl, const HeadGeometry& h) {
  RawDetection d;
  d.face = bounds_of(ellipse_outline(pl, h.cx, h.cy, h.a, h.b, 48, true));
  const double ex = 0.41 * h.a;
  const double ey = h.cy - 0.11 * h.b;
  for (double sx : {-1.0, 1.0}) {
    d.eyes.push_back(bounds_of(ellipse_outline(pl, h.cx + sx * ex, ey, 0.3 * h.a, 0.15 * h.b, 16, true)));
  }
  LandmarkSet lm;
  for (const auto& p : ellipse_outline(pl, h.cx, h.cy, 0.97 * h.a, 0.97 * h.b, 24, true)) lm.push_back(p);
  const double step = 6.0;
  for (double y = h.cy - h.b; y <= h.cy + h.b; y += step) {
    for (double x = h.cx - h.a; x <= h.cx + h.a; x += step) {
      const double qx = (x - h.cx) / h.a;
      const double qy = (y - h.cy) / h.b;
      if (qx * qx + qy * qy <= 0.9) lm.push_back(pl.to_world(x, y, true));
    }
  }
  for (auto& p : lm) p = {round2(p.x), round2(p.y)};
  d.landmarks = std::move(lm);
  return d;
}

struct BaseImage {
  Frame image;
  HeadGeometry head;
};

Frame render_person(int width, int height, const Placement& pl) {
  Frame f(width, height, 3);
  const auto body = body_layers();
  const auto head = head_layers(HeadGeometry{});
  const double px_per_unit = pl.unit * pl.body.scale;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Rgb bg = background(x, y, width, height);
      double px[3] = {static_cast<double>(bg.r), static_cast<double>(bg.g), static_cast<double>(bg.b)};
      const Point l = pl.to_layout(x, y);
      if (l.x > -80 && l.x < 80 && l.y > -115 + pl.head_dy && l.y < 130) {
        for (const auto& e : body) blend(px, e, l.x, l.y, px_per_unit);
        for (const auto& e : head) blend(px, e, l.x, l.y - pl.head_dy, px_per_unit);
      }
      std::uint8_t* out = f.pixel(x, y);
      for (int c = 0; c < 3; ++c) out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(px[c]), 0L, 255L));
    }
  }
  return f;
}

Frame warp_base(const BaseImage& base, int width, int height, const Placement& pl) {
  Frame f(width, height, 3);
  const Frame& src = base.image;
  const double bnx = src.width / 2.0;
  const double bny = 0.62 * src.height;
  const double bunit = src.height / 240.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Point l = pl.to_layout(x, y);
      const double sx = std::clamp(bnx + bunit * l.x, 0.0, src.width - 1.0);
      const double sy = std::clamp(bny + bunit * l.y, 0.0, src.height - 1.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      std::uint8_t* out = f.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        auto at = [&](int xx, int yy) { return src.pixel(xx, yy)[src.channels == 3 ? c : 0]; };
        const double top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
        const double bot = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
        out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(top + (bot - top) * fy), 0L, 255L));
      }
    }
  }
  return f;
}

std::optional<BaseImage> load_base(const SyntheticScenario& s) {
  if (!s.base_pose_image) return std::nullopt;
  BaseImage b{read_png(*s.base_pose_image), HeadGeometry{}};
  // The head is assumed to sit where the procedural layout puts it.
  return b;
}

RenderedPose render_with(const std::optional<BaseImage>& base, int width, int height, const PoseTransform& body,
                         double head_dy, double sigma, std::uint64_t noise_seed) {
  const Placement pl = make_placement(width, height, body, base ? 0.0 : head_dy);
  RenderedPose out;
  out.frame = base ? warp_base(*base, width, height, pl) : render_person(width, height, pl);
  add_noise(out.frame, sigma, noise_seed);
  out.detection = detection_for(pl, base ? base->head : HeadGeometry{});
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull ^ (stream << 32) ^ index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

SyntheticScenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scenario: ") + e.what());
  }
  try {
    SyntheticScenario s;
    s.duration_frames = j.value("duration_frames", s.duration_frames);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.seed = j.value("seed", s.seed);
    s.noise_sigma = j.value("noise", s.noise_sigma);
    s.primary_dropout = j.value("primary_dropout", s.primary_dropout);
    s.carry_rate = j.value("carry_rate", s.carry_rate);
    if (auto it = j.find("base_pose_image"); it != j.end() && !it->is_null()) {
      s.base_pose_image = it->get<std::string>();
    }
    for (const auto& g : j.value("segments", json::array())) {
      s.anomaly_segments.push_back({g.at("start").get<std::int64_t>(), g.at("end").get<std::int64_t>(),
                                    transform_from_json(g)});
    }
    for (const auto& c : j.value("position_changes", json::array())) {
      s.position_changes.push_back({c.at("frame").get<std::int64_t>(), transform_from_json(c)});
    }
    if (auto it = j.find("glance"); it != j.end()) {
      s.glance.period = it->value("period", 0);
      s.glance.duration = it->value("duration", s.glance.duration);
      s.glance.dy = it->value("dy", s.glance.dy);
    }
    if (auto it = j.find("calibration"); it != j.end()) {
      s.calibration_photos = it->value("photos", s.calibration_photos);
      s.calibration_jitter = it->value("jitter", s.calibration_jitter);
    }
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scenario: ") + e.what());
  }
}

SyntheticScenario load_scenario(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  auto s = parse_scenario(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  if (s.base_pose_image && s.base_pose_image->is_relative()) s.base_pose_image = path.parent_path() / *s.base_pose_image;
  return s;
}

RenderedPose render_pose(int width, int height, const PoseTransform& body, double head_dy, double noise_sigma,
                         std::uint64_t noise_seed) {
  return render_with(std::nullopt, width, height, body, head_dy, noise_sigma, noise_seed);
}

RenderedScenario render_scenario(const SyntheticScenario& s) {
  validate(s);
  const auto base = load_base(s);
  RenderedScenario out;
  auto changes = s.position_changes;
  std::sort(changes.begin(), changes.end(), [](const auto& a, const auto& b) { return a.frame < b.frame; });

  std::mt19937_64 det_rng(mix_seed(s.seed, 2, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PoseTransform sitting;
  std::size_t next_change = 0;
  for (std::int64_t i = 0; i < s.duration_frames; ++i) {
    while (next_change < changes.size() && changes[next_change].frame <= i) sitting = changes[next_change++].transform;
    const AnomalySegment* seg = nullptr;
    for (const auto& g : s.anomaly_segments) {
      if (i >= g.start && i < g.end) seg = &g;
    }
    const PoseTransform body = seg ? compose(sitting, seg->transform) : sitting;
    const bool glancing = !seg && s.glance.period > 0 && (i % s.glance.period) >= s.glance.period - s.glance.duration;
    auto pose = render_with(base, s.width, s.height, body, glancing ? s.glance.dy : 0.0, s.noise_sigma,
                            mix_seed(s.seed, 1, static_cast<std::uint64_t>(i)));
    pose.frame.index = i;
    pose.detection.frame = i;

    const double roll = u(det_rng);
    if (roll < s.carry_rate) {
      out.primary.push_back(RawDetection{i, std::nullopt, {}, std::nullopt});
    } else if (roll < s.carry_rate + s.primary_dropout) {
      out.primary.push_back(RawDetection{i, std::nullopt, {}, std::nullopt});
      out.fallback.push_back(pose.detection);
    } else {
      out.primary.push_back(pose.detection);
    }
    out.truth.push_back(GroundTruthLabel{i, true, true, seg != nullptr, std::nullopt});
    out.frames.push_back(std::move(pose.frame));
  }

  // Calibration: the opening sitting position, head nudged over a 3x3 grid.
  PoseTransform start;
  if (!changes.empty() && changes.front().frame == 0) start = changes.front().transform;
  for (int k = 0; k < s.calibration_photos; ++k) {
    const int cell = k % 9;
    PoseTransform t = start;
    t.dx += (cell % 3 - 1) * s.calibration_jitter;
    const double head_dy = (cell / 3 - 1) * s.calibration_jitter;
    auto pose = render_with(base, s.width, s.height, t, head_dy, s.noise_sigma,
                            mix_seed(s.seed, 3, static_cast<std::uint64_t>(k)));
    pose.frame.index = k;
    pose.detection.frame = k;
    out.calibration_photos.push_back(std::move(pose.frame));
    out.calibration_detections.push_back(std::move(pose.detection));
  }
  return out;
}

ScenarioFiles generate_scenario(const SyntheticScenario& s, const std::filesystem::path& out_dir,
                                const HideConfig& hide, const HashConfig& hash) {
  const RenderedScenario r = render_scenario(s);
  ScenarioFiles files;
  files.root = out_dir;
  files.frames_dir = out_dir / "frames";
  files.ground_truth = out_dir / "ground_truth.jsonl";
  files.primary_detections = out_dir / "detections_primary.jsonl";
  files.fallback_detections = out_dir / "detections_fallback.jsonl";
  files.calibration_dir = out_dir / "calibration";
  files.calibration_detections = out_dir / "calibration_detections.jsonl";
  files.pipeline_config = out_dir / "pipeline.toml";
  std::filesystem::create_directories(files.frames_dir);
  std::filesystem::create_directories(files.calibration_dir);

  char name[64];
  for (const auto& f : r.frames) {
    std::snprintf(name, sizeof(name), "frame_%06lld.png", static_cast<long long>(f.index));
    write_png(files.frames_dir / name, f);
  }
  for (const auto& f : r.calibration_photos) {
    std::snprintf(name, sizeof(name), "photo_%03lld.png", static_cast<long long>(f.index));
    write_png(files.calibration_dir / name, f);
  }
  write_detections(files.primary_detections, r.primary);
  write_detections(files.fallback_detections, r.fallback);
  write_detections(files.calibration_detections, r.calibration_detections);
  write_ground_truth(files.ground_truth, r.truth);

  KeyValueFile cfg;
  cfg.set("session_id", std::string("synthetic-") + std::to_string(s.seed));
  cfg.set("frames_dir", std::string("frames"));
  cfg.set("primary_detections", std::string("detections_primary.jsonl"));
  cfg.set("fallback_detections", std::string("detections_fallback.jsonl"));
  cfg.set("ground_truth", std::string("ground_truth.jsonl"));
  cfg.set("calibration", std::string("calibration"));
  cfg.set("calibration_detections", std::string("calibration_detections.jsonl"));
  cfg.set("output_dir", std::string("output"));
  cfg.set("hide.mode", std::string(to_string(hide.mode)));
  cfg.set("hide.blur_level", static_cast<long long>(hide.blur_level));
  cfg.set("hide.point_size", static_cast<long long>(hide.point_size));
  cfg.set("hide.mask_color", std::vector<long long>{hide.mask_color.r, hide.mask_color.g, hide.mask_color.b});
  cfg.set("hide.preserve_eyes", hide.preserve_eyes);
  cfg.set("hash.algo", std::string(to_string(hash.algorithm)));
  cfg.set("hash.size", static_cast<long long>(hash.size));
  std::ofstream out(files.pipeline_config, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + files.pipeline_config.string());
  out << cfg.dump();
  return files;
}

}  // namespace hashproctor
