#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "fixtures.hpp"
#include "hashproctor/imagehash.hpp"
#include "hashproctor/png_io.hpp"
#include "hashproctor/report.hpp"
#include "hashproctor/scenario.hpp"
#include "oracles.hpp"

#ifdef HASHPROCTOR_CLI_PATH

using namespace hashproctor;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

RunResult run_cli(const std::string& args) {
  const std::string cmd = quote(HASHPROCTOR_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("frobnicate").code, 1);
  EXPECT_EQ(run_cli("hash").code, 1);
  EXPECT_EQ(run_cli("hash /definitely/not/here.png").code, 1);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(Cli, HashMatchesLibrary) {
  fixture::TempDir dir("cli");
  gen::Rng rng(101);
  const Frame f = gen::rgb_frame(rng, 40, 30);
  write_png(dir / "a.png", f);
  const auto r = run_cli("hash --algo phash --size 8 " + quote((dir / "a.png").string()));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, compute_hash(f, {HashAlgorithm::PHash, 8}).to_string() + "\n");
  EXPECT_EQ(run_cli("hash --size 1 " + quote((dir / "a.png").string())).code, 2);
  fixture::write_text(dir / "bad.png", "not an image");
  EXPECT_EQ(run_cli("hash " + quote((dir / "bad.png").string())).code, 2);
}

TEST(Cli, ScenarioDetectEvalClip) {
  fixture::TempDir dir("cli");
  fixture::write_text(dir / "s.json", R"({"duration_frames": 90, "width": 128, "height": 96, "seed": 4,
    "segments": [{"start": 40, "end": 70, "dx": 40, "dy": 5, "angle": 12}]})");
  auto r = run_cli("gen-scenario " + quote((dir / "s.json").string()) + " --out " + quote((dir / "sc").string()));
  ASSERT_EQ(r.code, 0);
  const fs::path config = dir / "sc" / "pipeline.toml";
  ASSERT_TRUE(fs::exists(config)) << r.out;

  r = run_cli("detect " + quote(config.string()));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("events: 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("recall: "), std::string::npos);

  const auto report_line = r.out.substr(r.out.find("report: ") + 8);
  const fs::path report = report_line.substr(0, report_line.find('\n'));
  r = run_cli("eval " + quote(report.string()) + " " + quote((dir / "sc" / "ground_truth.jsonl").string()) +
              " --participant p1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("participant,", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("\np1,mask,"), std::string::npos) << r.out;

  const fs::path hidden = report.parent_path() / "hidden";
  r = run_cli("clip " + quote(report.string()) + " " + quote(hidden.string()) + " 0 --pad 5 --out " +
              quote((dir / "c.zip").string()));
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir / "c.zip"));
  EXPECT_EQ(run_cli("clip " + quote(report.string()) + " " + quote(hidden.string()) + " 7 --out " +
                    quote((dir / "d.zip").string()))
                .code,
            2);

  r = run_cli("calibrate-threshold " + quote((dir / "sc" / "calibration").string()) + " --detections " +
              quote((dir / "sc" / "calibration_detections.jsonl").string()));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::stoi(r.out), load_report(report).threshold);
}

TEST(Cli, DataErrorsExitTwo) {
  fixture::TempDir dir("cli");
  fixture::write_text(dir / "bad.cfg", "frames_dir = nowhere\n");
  EXPECT_EQ(run_cli("detect " + quote((dir / "bad.cfg").string())).code, 2);
  fs::create_directories(dir / "frames");
  fixture::write_text(dir / "det.jsonl", "");
  EXPECT_EQ(run_cli("hide " + quote((dir / "frames").string()) + " " + quote((dir / "det.jsonl").string()) +
                    " --out " + quote((dir / "frames").string()))
                .code,
            2);
}

#endif
