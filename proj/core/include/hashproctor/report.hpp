#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/anomaly.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/imagehash.hpp"

namespace hashproctor {

struct AnomalyReport {
  std::string session_id;
  int threshold = 0;
  HashConfig hash;
  std::optional<HideMode> mode;
  std::vector<std::int64_t> anchors;
  std::vector<int> raw;
  std::vector<double> smoothed;
  std::vector<AnomalyEvent> events;

  std::size_t frame_count() const noexcept { return raw.size(); }
};

AnomalyReport make_report(std::string session_id, const AnomalyDetector& detector, const HashConfig& hash,
                          std::optional<HideMode> mode);

/// Stable serialization: same report, same bytes.
std::string to_json(const AnomalyReport& report);
AnomalyReport parse_report(std::string_view text);
AnomalyReport load_report(const std::filesystem::path& path);
void save_report(const std::filesystem::path& path, const AnomalyReport& report);

}  // namespace hashproctor
