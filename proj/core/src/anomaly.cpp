#include "hashproctor/anomaly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "hashproctor/error.hpp"

namespace hashproctor {

void validate(const SmoothingConfig& cfg) {
  if (cfg.window < 3 || cfg.window % 2 == 0) throw Error(ErrorKind::Config, "smoothing window must be odd and >= 3");
  if (cfg.polyorder < 0 || cfg.polyorder >= cfg.window) {
    throw Error(ErrorKind::Config, "polyorder must satisfy 0 <= polyorder < window");
  }
  if (cfg.valley_min_separation < 1) throw Error(ErrorKind::Config, "valley separation must be at least 1");
  if (!(cfg.valley_prominence >= 0.0)) throw Error(ErrorKind::Config, "valley prominence must be non-negative");
}

void validate(const DetectorConfig& cfg) {
  validate(cfg.smoothing);
  if (cfg.merge_gap < 0) throw Error(ErrorKind::Config, "merge gap must be non-negative");
  if (cfg.min_event_len < 1) throw Error(ErrorKind::Config, "minimum event length must be at least 1");
}

std::vector<double> savgol_weights(int left, int right, int polyorder) {
  if (left < 0 || right < 0 || polyorder < 0) throw Error(ErrorKind::Config, "bad Savitzky-Golay window");
  const int m = left + right + 1;
  const int degree = std::min(polyorder, m - 1);
  // Offsets are scaled into [-1, 1] to keep the Vandermonde matrix well conditioned.
  const double scale = std::max({left, right, 1});
  Eigen::MatrixXd a(m, degree + 1);
  for (int r = 0; r < m; ++r) {
    const double t = (r - left) / scale;
    double power = 1.0;
    for (int c = 0; c <= degree; ++c) {
      a(r, c) = power;
      power *= t;
    }
  }
  // The fitted value at offset 0 is the constant coefficient:
  // w = A (A^T A)^{-1} e0 with A^T A = R^T R from the QR factorization.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(degree + 1).triangularView<Eigen::Upper>();
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(degree + 1);
  e0(0) = 1.0;
  const Eigen::VectorXd y = r.transpose().triangularView<Eigen::Lower>().solve(e0);
  const Eigen::VectorXd z = r.triangularView<Eigen::Upper>().solve(y);
  const Eigen::VectorXd w = a * z;
  return {w.data(), w.data() + w.size()};
}

namespace {

/// Weight tables keyed by (left, right, polyorder); interior windows hit the
/// same entry every time.
class WeightCache {
 public:
  const std::vector<double>& get(int left, int right, int polyorder) {
    std::lock_guard lock(mu_);
    auto key = std::tuple{left, right, polyorder};
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, savgol_weights(left, right, polyorder)).first;
    return it->second;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, std::vector<double>> cache_;
};

WeightCache& weight_cache() {
  static WeightCache cache;
  return cache;
}

double smooth_at(std::span<const double> series, std::size_t i, std::size_t available, int half, int polyorder) {
  const int left = static_cast<int>(std::min<std::size_t>(i, static_cast<std::size_t>(half)));
  const int right = static_cast<int>(std::min<std::size_t>(available - 1 - i, static_cast<std::size_t>(half)));
  const auto& w = weight_cache().get(left, right, polyorder);
  double acc = 0.0;
  const std::size_t base = i - static_cast<std::size_t>(left);
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * series[base + k];
  return std::round(acc * kSmoothGrid) / kSmoothGrid;
}

}  // namespace

std::vector<double> sg_smooth(std::span<const double> series, int window, int polyorder) {
  if (window < 1 || window % 2 == 0) throw Error(ErrorKind::Config, "smoothing window must be odd");
  if (polyorder < 0 || polyorder >= window) throw Error(ErrorKind::Config, "polyorder must be < window");
  if (series.empty()) throw Error(ErrorKind::InvalidInput, "cannot smooth an empty series");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = smooth_at(series, i, series.size(), window / 2, polyorder);
  return out;
}

bool is_valley(std::span<const double> s, std::size_t v, double threshold, const SmoothingConfig& cfg) {
  const std::size_t n = s.size();
  if (n < 3 || v < 1 || v + 1 >= n) return false;
  const std::size_t sep = static_cast<std::size_t>(cfg.valley_min_separation);
  const std::size_t lo = v >= sep ? v - sep : 0;
  const std::size_t hi = std::min(n - 1, v + sep);
  double left_max = s[lo];
  double right_max = s[hi];
  for (std::size_t u = lo; u <= hi; ++u) {
    if (u == v) continue;
    if (!(s[v] < s[u])) return false;
    if (u < v) left_max = std::max(left_max, s[u]);
    if (u > v) right_max = std::max(right_max, s[u]);
  }
  if (cfg.valley_below_threshold && s[v] > threshold) return false;
  const auto [mn, mx] = std::minmax_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  const double prominence = std::min(left_max, right_max) - s[v];
  return prominence >= cfg.valley_prominence * (*mx - *mn);
}

std::vector<std::size_t> find_valleys(std::span<const double> smoothed, double threshold, const SmoothingConfig& cfg) {
  validate(cfg);
  std::vector<std::size_t> out;
  for (std::size_t v = 1; v + 1 < smoothed.size(); ++v) {
    if (is_valley(smoothed, v, threshold, cfg)) out.push_back(v);
  }
  return out;
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Unreviewed: return "unreviewed";
    case Verdict::Confirmed: return "confirmed";
    case Verdict::Dismissed: return "dismissed";
  }
  return "unknown";
}

Verdict parse_verdict(std::string_view name) {
  if (name == "unreviewed") return Verdict::Unreviewed;
  if (name == "confirmed") return Verdict::Confirmed;
  if (name == "dismissed") return Verdict::Dismissed;
  throw Error(ErrorKind::InvalidInput, "unknown verdict '" + std::string(name) + "'");
}

std::vector<AnomalyEvent> merge_events(const std::vector<bool>& flags, std::span<const int> raw, int threshold, int gap,
                                       int min_len, std::span<const std::int64_t> anchors) {
  if (gap < 0 || min_len < 1) throw Error(ErrorKind::Config, "bad event merge parameters");
  if (raw.size() < flags.size()) throw Error(ErrorKind::InvalidInput, "raw series shorter than flag series");
  std::vector<std::pair<std::int64_t, std::int64_t>> runs;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) continue;
    const auto idx = static_cast<std::int64_t>(i);
    if (!runs.empty() && idx - runs.back().second - 1 <= gap) {
      runs.back().second = idx;
    } else {
      runs.emplace_back(idx, idx);
    }
  }
  std::vector<AnomalyEvent> events;
  for (const auto& [start, end] : runs) {
    if (end - start + 1 < min_len) continue;
    const auto first = raw.begin() + start;
    const int peak = *std::max_element(first, raw.begin() + end + 1);
    if (peak <= threshold) continue;
    AnomalyEvent e;
    e.start = start;
    e.end = end;
    e.peak_distance = peak;
    const auto it = std::upper_bound(anchors.begin(), anchors.end(), start);
    e.anchor_index = it == anchors.begin() ? 0 : *(it - 1);
    events.push_back(e);
  }
  return events;
}

AnomalyDetector::AnomalyDetector(int threshold, DetectorConfig cfg)
    : threshold_(threshold), cfg_(cfg), half_(cfg.smoothing.window / 2) {
  if (threshold < 0) throw Error(ErrorKind::InvalidInput, "threshold must be non-negative");
  validate(cfg_);
}

std::optional<FrameFlag> AnomalyDetector::step(const PerceptualHash& frame_hash, std::int64_t frame_index) {
  if (finished_) throw Error(ErrorKind::State, "detector already finalized");
  if (frame_index != frames_seen()) {
    throw Error(ErrorKind::Conflict, "expected frame " + std::to_string(frames_seen()) + ", got " +
                                         std::to_string(frame_index));
  }
  if (!anchor_) {
    anchor_ = frame_hash;
    anchors_.push_back(frame_index);
  }
  const int d = hamming(*anchor_, frame_hash);
  raw_.push_back(d);
  raw_d_.push_back(static_cast<double>(d));
  if (cfg_.reselect_anchor) recent_.emplace_back(frame_index, frame_hash);

  if (raw_.size() <= static_cast<std::size_t>(half_)) return std::nullopt;
  return decide(raw_.size() - 1 - static_cast<std::size_t>(half_), raw_.size());
}

std::vector<FrameFlag> AnomalyDetector::finalize() {
  if (finished_) throw Error(ErrorKind::State, "detector already finalized");
  std::vector<FrameFlag> out;
  while (smoothed_.size() < raw_.size()) out.push_back(decide(smoothed_.size(), raw_.size()));
  if (cfg_.reselect_anchor) {
    while (next_valley_candidate_ + 1 < smoothed_.size()) consider_valley(next_valley_candidate_++, smoothed_.size());
  }
  finished_ = true;
  recent_.clear();
  return out;
}

FrameFlag AnomalyDetector::decide(std::size_t j, std::size_t available) {
  const double s = smooth_at(raw_d_, j, available, half_, cfg_.smoothing.polyorder);
  smoothed_.push_back(s);
  const bool flagged = s > static_cast<double>(threshold_);
  flags_.push_back(flagged);
  const auto idx = static_cast<std::int64_t>(j);
  if (flagged && idx > anchor_index() && !first_flag_since_anchor_) first_flag_since_anchor_ = idx;

  if (cfg_.reselect_anchor) {
    const std::size_t sep = static_cast<std::size_t>(cfg_.smoothing.valley_min_separation);
    while (next_valley_candidate_ + sep <= j) consider_valley(next_valley_candidate_++, smoothed_.size());
  }
  return {idx, s, flagged};
}

void AnomalyDetector::consider_valley(std::size_t v, std::size_t available) {
  const auto vi = static_cast<std::int64_t>(v);
  const std::span<const double> decided(smoothed_.data(), available);
  const bool gate = first_flag_since_anchor_ && *first_flag_since_anchor_ < vi;
  if (gate && is_valley(decided, v, static_cast<double>(threshold_), cfg_.smoothing)) {
    auto it = std::find_if(recent_.begin(), recent_.end(), [vi](const auto& e) { return e.first == vi; });
    if (it == recent_.end()) throw Error(ErrorKind::State, "anchor candidate hash no longer buffered");
    anchor_ = it->second;
    anchors_.push_back(vi);
    first_flag_since_anchor_.reset();
    for (std::size_t u = v + 1; u < flags_.size(); ++u) {
      if (flags_[u]) {
        first_flag_since_anchor_ = static_cast<std::int64_t>(u);
        break;
      }
    }
  }
  // Frames before the next candidate can no longer become anchors.
  const auto keep_from = vi + 1;
  auto first_kept = std::find_if(recent_.begin(), recent_.end(), [keep_from](const auto& e) { return e.first >= keep_from; });
  recent_.erase(recent_.begin(), first_kept);
}

std::vector<AnomalyEvent> AnomalyDetector::events() const {
  return merge_events(flags_, std::span<const int>(raw_.data(), flags_.size()), threshold_, cfg_.merge_gap,
                      cfg_.min_event_len, anchors_);
}

}  // namespace hashproctor
