// Command-line front end: hashing, hiding, calibration, the offline anomaly
// pipeline, synthetic scenarios, evaluation, benchmarks and the HTTP service.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "hashproctor/calibration.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/error.hpp"
#include "hashproctor/evalharness.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/imagehash.hpp"
#include "hashproctor/pipeline.hpp"
#include "hashproctor/png_io.hpp"
#include "hashproctor/report.hpp"
#include "hashproctor/scenario.hpp"
#include "hashproctor/service.hpp"
#include "hashproctor/zip.hpp"

namespace fs = std::filesystem;
using namespace hashproctor;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct HashOpts {
  std::string algo = "dhash";
  int size = 12;

  void add(CLI::App* app) {
    app->add_option("--algo", algo, "ahash, dhash or phash")->capture_default_str();
    app->add_option("--size", size, "hash size (bits per side)")->capture_default_str();
  }
  HashConfig config() const {
    HashConfig c{parse_hash_algorithm(algo), size};
    validate(c);
    return c;
  }
};

struct HideOpts {
  std::string mode = "mask";
  int blur_level = 30;
  int point_size = 26;
  bool keep_eyes_hidden = false;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "blur or mask")->capture_default_str();
    app->add_option("--blur-level", blur_level)->capture_default_str();
    app->add_option("--point-size", point_size)->capture_default_str();
    app->add_flag("--hide-eyes", keep_eyes_hidden, "do not restore the eye boxes");
  }
  HideConfig config() const {
    HideConfig c;
    c.mode = parse_hide_mode(mode);
    c.blur_level = blur_level;
    c.point_size = point_size;
    c.preserve_eyes = !keep_eyes_hidden;
    validate(c);
    return c;
  }
};

std::vector<Frame> load_frames(const fs::path& dir, std::size_t limit) {
  std::vector<Frame> frames;
  for (const auto& p : list_frames(dir)) {
    if (limit && frames.size() >= limit) break;
    frames.push_back(read_png(p));
    frames.back().index = static_cast<std::int64_t>(frames.size() - 1);
  }
  return frames;
}

std::vector<DetectionRecord> load_records(const fs::path& primary, const std::string& fallback, std::int64_t n) {
  const auto p = parse_detections(primary);
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  ParsedDetections f;
  if (!fallback.empty()) {
    f = parse_detections(fallback);
    for (const auto& w : f.warnings) std::cerr << "warning: " << w << '\n';
  }
  // Entries past the requested frame count are ignored here.
  std::vector<RawDetection> pe, fe;
  for (const auto& e : p.entries) {
    if (e.frame < n) pe.push_back(e);
  }
  for (const auto& e : f.entries) {
    if (e.frame < n) fe.push_back(e);
  }
  return resolve_stream(pe, fe, n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving exam proctoring toolkit"};
  app.require_subcommand(1);

  // hash
  auto* hash_cmd = app.add_subcommand("hash", "print the perceptual hash of an image");
  std::string hash_image;
  HashOpts hash_opts;
  hash_cmd->add_option("image", hash_image)->required()->check(CLI::ExistingFile);
  hash_opts.add(hash_cmd);

  // hide
  auto* hide_cmd = app.add_subcommand("hide", "hide faces in a frame directory");
  std::string hide_frames, hide_dets, hide_fallback, hide_out;
  HideOpts hide_opts;
  hide_cmd->add_option("frames", hide_frames)->required()->check(CLI::ExistingDirectory);
  hide_cmd->add_option("detections", hide_dets)->required()->check(CLI::ExistingFile);
  hide_cmd->add_option("--fallback", hide_fallback, "fallback detector sidecar")->check(CLI::ExistingFile);
  hide_cmd->add_option("--out", hide_out, "directory for the hidden frames")->required();
  hide_opts.add(hide_cmd);

  // calibrate-threshold
  auto* cal_cmd = app.add_subcommand("calibrate-threshold", "threshold from a directory of calibration photos");
  std::string cal_dir, cal_dets, cal_session;
  HashOpts cal_hash;
  HideOpts cal_hide;
  cal_cmd->add_option("photos", cal_dir)->required()->check(CLI::ExistingDirectory);
  cal_cmd->add_option("--detections", cal_dets, "hide the photos with these detections first")
      ->check(CLI::ExistingFile);
  cal_cmd->add_option("--session-out", cal_session, "also write a calibration session file");
  cal_hash.add(cal_cmd);
  cal_hide.add(cal_cmd);

  // detect
  auto* det_cmd = app.add_subcommand("detect", "run the offline anomaly pipeline");
  std::string det_config;
  det_cmd->add_option("config", det_config)->required()->check(CLI::ExistingFile);

  // gen-scenario
  auto* gen_cmd = app.add_subcommand("gen-scenario", "render a synthetic labeled scenario");
  std::string gen_spec, gen_out;
  HashOpts gen_hash;
  HideOpts gen_hide;
  gen_cmd->add_option("spec", gen_spec, "scenario JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen_out)->required();
  gen_hash.add(gen_cmd);
  gen_hide.add(gen_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a report against ground truth");
  std::string eval_report, eval_truth, eval_participant = "synthetic", eval_format = "csv";
  eval_cmd->add_option("report", eval_report)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("ground_truth", eval_truth)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--participant", eval_participant)->capture_default_str();
  eval_cmd->add_option("--format", eval_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "frames per second of one stage");
  std::string bench_stage, bench_frames, bench_dets;
  int bench_reps = 5;
  std::size_t bench_limit = 0;
  HashOpts bench_hash;
  HideOpts bench_hide;
  bench_cmd->add_option("stage", bench_stage, "blur, mask, hash or pipeline")->required();
  bench_cmd->add_option("frames", bench_frames)->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--detections", bench_dets)->check(CLI::ExistingFile);
  bench_cmd->add_option("--reps", bench_reps)->capture_default_str();
  bench_cmd->add_option("--limit", bench_limit, "use at most this many frames");
  bench_hash.add(bench_cmd);
  bench_hide.add(bench_cmd);

  // compare-hashes
  auto* cmp_cmd = app.add_subcommand("compare-hashes", "F1 and FPS of every hash method and size");
  std::string cmp_config;
  std::vector<int> cmp_sizes{11, 12};
  cmp_cmd->add_option("config", cmp_config, "pipeline config with ground truth")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--sizes", cmp_sizes)->capture_default_str();

  // clip
  auto* clip_cmd = app.add_subcommand("clip", "zip the hidden frames around an event");
  std::string clip_report, clip_hidden, clip_out;
  std::size_t clip_event = 0;
  int clip_pad = 15;
  clip_cmd->add_option("report", clip_report)->required()->check(CLI::ExistingFile);
  clip_cmd->add_option("hidden", clip_hidden)->required()->check(CLI::ExistingDirectory);
  clip_cmd->add_option("event", clip_event)->required();
  clip_cmd->add_option("--pad", clip_pad)->capture_default_str();
  clip_cmd->add_option("--out", clip_out)->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  std::string serve_host = "127.0.0.1", serve_dir = "hashproctor-data";
  int serve_port = 8080;
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->add_option("--port", serve_port)->capture_default_str();
  serve_cmd->add_option("--output-dir", serve_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*hash_cmd) {
      std::cout << compute_hash(read_png(hash_image), hash_opts.config()).to_string() << '\n';
    } else if (*hide_cmd) {
      const HideConfig cfg = hide_opts.config();
      const auto files = list_frames(hide_frames);
      if (fs::weakly_canonical(hide_out) == fs::weakly_canonical(hide_frames)) {
        throw Error(ErrorKind::Config, "--out must differ from the frames directory");
      }
      const auto records = load_records(hide_dets, hide_fallback, static_cast<std::int64_t>(files.size()));
      fs::create_directories(hide_out);
      for (std::size_t i = 0; i < files.size(); ++i) {
        write_png(fs::path(hide_out) / frame_file_name(static_cast<std::int64_t>(i)),
                  hide(read_png(files[i]), records[i], cfg));
      }
      std::cout << files.size() << " frames hidden into " << hide_out << '\n';
    } else if (*cal_cmd) {
      const HashConfig hash = cal_hash.config();
      const HideConfig hide_cfg = cal_hide.config();
      const auto files = list_png_files(cal_dir);
      std::vector<Frame> photos;
      for (const auto& p : files) photos.push_back(read_png(p));
      if (!cal_dets.empty()) {
        const auto records = load_records(cal_dets, "", static_cast<std::int64_t>(photos.size()));
        for (std::size_t i = 0; i < photos.size(); ++i) photos[i] = hide(photos[i], records[i], hide_cfg);
      }
      const int threshold = compute_threshold(photos, hash);
      if (!cal_session.empty()) {
        CalibrationRecord rec;
        rec.session_id = fs::path(cal_dir).filename().string();
        rec.hash = hash;
        rec.threshold = threshold;
        const fs::path session_dir = fs::path(cal_session).parent_path();
        for (const auto& p : files) {
          rec.captures.push_back({{0.0, 0.0}, fs::relative(p, session_dir.empty() ? "." : session_dir).generic_string()});
        }
        save_calibration(cal_session, rec);
      }
      std::cout << threshold << '\n';
    } else if (*det_cmd) {
      const auto result = run_pipeline(load_pipeline_config(det_config));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      const auto& r = result.report;
      std::cout << "frames: " << r.frame_count() << "\nthreshold: " << r.threshold << "\nanchors: " << r.anchors.size()
                << "\nevents: " << r.events.size() << '\n';
      for (const auto& e : r.events) {
        std::cout << "  " << e.start << "-" << e.end << " peak " << e.peak_distance << " anchor " << e.anchor_index
                  << '\n';
      }
      if (result.metrics) {
        std::cout << "accuracy: " << format_percent(result.metrics->accuracy)
                  << "\nrecall: " << format_percent(result.metrics->recall)
                  << "\nprecision: " << format_percent(result.metrics->precision) << '\n';
      }
      std::cout << "report: " << result.report_path.string() << '\n';
    } else if (*gen_cmd) {
      const auto files = generate_scenario(load_scenario(gen_spec), gen_out, gen_hide.config(), gen_hash.config());
      std::cout << "frames: " << files.frames_dir.string() << "\nconfig: " << files.pipeline_config.string() << '\n';
    } else if (*eval_cmd) {
      const auto report = load_report(eval_report);
      const auto labels = parse_ground_truth(eval_truth);
      const auto n = report.frame_count();
      const auto counts = confusion(truth_flags(labels, n), flags_from_events(report.events, n));
      const MetricsRow row{eval_participant, report.mode ? to_string(*report.mode) : "unknown", metrics(counts)};
      std::span<const MetricsRow> rows(&row, 1);
      std::cout << (eval_format == "json" ? metrics_json(rows) : metrics_csv(rows));
    } else if (*bench_cmd) {
      const BenchStage stage = parse_bench_stage(bench_stage);
      const auto frames = load_frames(bench_frames, bench_limit);
      std::vector<DetectionRecord> records;
      if (stage != BenchStage::Hash) {
        if (bench_dets.empty()) throw Error(ErrorKind::InvalidInput, "this stage needs --detections");
        records = load_records(bench_dets, "", static_cast<std::int64_t>(frames.size()));
      }
      BenchOptions opts;
      opts.hide = bench_hide.config();
      opts.hash = bench_hash.config();
      const auto r = bench_fps(stage, frames, records, bench_reps, opts);
      std::printf("stage,frames,seconds,fps\n%s,%zu,%.6f,%.2f\n", to_string(r.stage), r.frames, r.elapsed, r.fps);
    } else if (*cmp_cmd) {
      const PipelineConfig cfg = load_pipeline_config(cmp_config);
      if (!cfg.ground_truth) throw Error(ErrorKind::Config, "compare-hashes needs ground_truth in the config");
      const auto frames = load_frames(cfg.frames_dir, 0);
      const auto n = static_cast<std::int64_t>(frames.size());
      const auto records = load_records(cfg.primary_detections,
                                        cfg.fallback_detections ? cfg.fallback_detections->string() : "", n);
      std::vector<Frame> hidden;
      for (std::size_t i = 0; i < frames.size(); ++i) hidden.push_back(hide(frames[i], records[i], cfg.hide));
      std::vector<Frame> photos;
      for (const auto& p : list_png_files(cfg.calibration)) photos.push_back(read_png(p));
      if (cfg.calibration_detections) {
        const auto cal = load_records(*cfg.calibration_detections, "", static_cast<std::int64_t>(photos.size()));
        for (std::size_t i = 0; i < photos.size(); ++i) photos[i] = hide(photos[i], cal[i], cfg.hide);
      }
      const auto truth = truth_flags(parse_ground_truth(*cfg.ground_truth), frames.size());
      const std::vector<HashAlgorithm> methods{HashAlgorithm::AHash, HashAlgorithm::DHash, HashAlgorithm::PHash};
      std::cout << hash_comparison_csv(compare_hash_methods(hidden, truth, photos, cmp_sizes, methods, cfg.detector));
    } else if (*clip_cmd) {
      const auto report = load_report(clip_report);
      const ClipRange range = clip_range(report, clip_event, clip_pad);
      std::vector<ZipEntry> entries;
      for (std::int64_t i = range.first; i <= range.last; ++i) {
        entries.push_back({frame_file_name(i), read_file_bytes(fs::path(clip_hidden) / frame_file_name(i))});
      }
      write_file_bytes(clip_out, make_zip(entries));
      std::cout << "frames " << range.first << "-" << range.last << " -> " << clip_out << '\n';
    } else if (*serve_cmd) {
      std::cout << "listening on http://" << serve_host << ":" << serve_port << std::endl;
      serve(serve_host, serve_port, serve_dir);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
