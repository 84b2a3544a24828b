#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/geometry.hpp"
#include "hashproctor/image.hpp"
#include "hashproctor/imagehash.hpp"

namespace hashproctor {

enum class Arrow { Up, Down, Left, Right };

const char* to_string(Arrow a) noexcept;
Arrow parse_arrow(std::string_view name);

struct CalibrationConfig {
  int screen_width = 1920;
  int screen_height = 1080;
  /// Crosshair radius; stimulus centers keep this distance from the edges.
  double margin = 40.0;
  int required_captures = 9;
  double shrink_duration = 2.0;
  double response_window = 0.5;
  /// Offset from arrow onset at which the photo is taken.
  double capture_offset = 0.25;
  HashConfig hash;
  std::uint64_t seed = 0;
};

void validate(const CalibrationConfig& cfg);

struct Stimulus {
  std::uint64_t sequence = 0;
  Point position;
  Arrow arrow = Arrow::Up;
  double shrink_duration = 2.0;
  double response_window = 0.5;
  double capture_offset = 0.25;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct Capture {
  std::uint64_t sequence = 0;
  Point position;
  Arrow shown = Arrow::Up;
  Arrow pressed = Arrow::Up;
  bool accepted = false;
  std::optional<Frame> photo;
};

struct ResponseOutcome {
  bool accepted = false;
  int accepted_count = 0;
  int required = 0;
  std::optional<int> threshold;
};

/// Gaze-calibration protocol state machine. A correct keypress saves the
/// photo and moves the target; a wrong one keeps the target in place. Target
/// positions are drawn from a 3x3 partition of the screen, each cell used
/// once per round, uniformly inside the cell.
class CalibrationSession {
 public:
  CalibrationSession(std::string session_id, CalibrationConfig cfg);

  const std::string& id() const noexcept { return id_; }
  const CalibrationConfig& config() const noexcept { return cfg_; }

  /// Returns the pending stimulus if one is outstanding, otherwise draws the
  /// next one. Throws State once the session is finalized.
  const Stimulus& next_stimulus();

  /// Throws State if `stimulus` is not the pending one, Capture if the
  /// response is correct but carries no photo.
  ResponseOutcome record_response(const Stimulus& stimulus, Arrow pressed, std::optional<Frame> photo);

  /// Computes the threshold from the accepted photos and closes the session.
  int finalize();

  bool finalized() const noexcept { return threshold_.has_value(); }
  std::optional<int> threshold() const noexcept { return threshold_; }
  int accepted_count() const noexcept;
  const std::vector<Capture>& captures() const noexcept { return captures_; }
  const std::optional<Stimulus>& pending() const noexcept { return pending_; }
  std::vector<Frame> accepted_photos() const;

 private:
  Point draw_position();
  Arrow draw_arrow();

  std::string id_;
  CalibrationConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<int> cell_order_;
  std::size_t next_cell_ = 0;
  std::uint64_t sequence_ = 0;
  std::optional<Stimulus> pending_;
  bool last_wrong_ = false;
  Point last_position_;
  std::vector<Capture> captures_;
  std::optional<int> threshold_;
};

/// Maximum pairwise Hamming distance; needs at least two hashes.
int max_pairwise_distance(std::span<const PerceptualHash> hashes);
int compute_threshold(std::span<const Frame> photos, const HashConfig& hash);

/// On-disk calibration session file.
struct CalibrationRecord {
  struct Entry {
    Point position;
    std::string photo;  ///< relative to the session file's directory
  };
  std::string session_id;
  HashConfig hash;
  std::vector<Entry> captures;
  std::optional<int> threshold;
};

CalibrationRecord load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, const CalibrationRecord& record);

/// Writes accepted photos as PNG next to the session file and the record
/// itself. Returns the record that was written.
CalibrationRecord save_session(const CalibrationSession& session, const std::filesystem::path& path);

/// Sorted *.png files of a directory.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

}  // namespace hashproctor
