#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hashproctor/anomaly.hpp"
#include "hashproctor/calibration.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/error.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/report.hpp"

namespace httplib {
class Server;
}

namespace hashproctor {

enum class SessionPhase { Calibrating, Monitoring, Finished };

const char* to_string(SessionPhase p) noexcept;

struct SessionSettings {
  HashConfig hash;
  HideConfig hide;
  DetectorConfig detector;
  CalibrationConfig calibration;
};

/// Parses the POST /sessions body; missing fields keep their defaults.
SessionSettings parse_session_settings(std::string_view json_body);

/// One uploaded image plus the detector output for it. `detection` and
/// `fallback` are single sidecar lines; without either the service uses a
/// centered stub face box.
struct Upload {
  std::string image_png;
  std::optional<std::string> detection;
  std::optional<std::string> fallback;
};

/// Transport-free session logic behind the HTTP routes. All results are JSON
/// text; failures are hashproctor::Error. Sessions are independent and may be
/// driven from different threads; calls on one session are serialized.
class SessionManager {
 public:
  /// Snapshots and hidden frames go under output_dir/sessions/<id>/.
  explicit SessionManager(std::filesystem::path output_dir);
  ~SessionManager();

  std::string create_session(std::string_view settings_json);
  std::string status(const std::string& id);
  std::string calibration_next(const std::string& id);
  std::string calibration_response(const std::string& id, std::uint64_t sequence, std::string_view key,
                                   std::optional<Upload> photo);
  std::string start(const std::string& id);
  std::string ingest_frame(const std::string& id, std::int64_t index, const Upload& frame);
  std::string finish(const std::string& id);
  std::string series(const std::string& id);
  std::string events(const std::string& id);
  std::string confirmed(const std::string& id);
  std::string set_verdict(const std::string& id, std::size_t event_id, std::string_view verdict);
  std::string report(const std::string& id);
  /// Zip of the hidden frames around an event.
  std::vector<std::uint8_t> clip(const std::string& id, std::size_t event_id, int pad = 15);

  AnomalyReport report_of(const std::string& id);
  std::filesystem::path session_dir(const std::string& id) const;

 private:
  struct Session;
  Session& find(const std::string& id);

  std::filesystem::path output_dir_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

/// HTTP status for an error kind: 400 for bad input, 404 unknown ids, 409
/// ordering and phase violations, 500 otherwise.
int http_status(ErrorKind kind) noexcept;

/// Registers every route on `server`.
void install_routes(httplib::Server& server, SessionManager& manager);

/// Blocks serving on host:port until the server is stopped.
void serve(const std::string& host, int port, const std::filesystem::path& output_dir);

}  // namespace hashproctor
