#include <gtest/gtest.h>

#include "error_kind.hpp"
#include "fixtures.hpp"
#include "hashproctor/calibration.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/pipeline.hpp"
#include "hashproctor/scenario.hpp"

using namespace hashproctor;

namespace {

SyntheticScenario small(std::int64_t frames) {
  SyntheticScenario s;
  s.duration_frames = frames;
  s.width = 96;
  s.height = 72;
  s.calibration_photos = 3;
  return s;
}

}  // namespace

TEST(Scenario, NoSegmentsMeansNoAnomalyLabels) {
  const auto r = render_scenario(small(20));
  ASSERT_EQ(r.truth.size(), 20u);
  for (const auto& g : r.truth) {
    EXPECT_FALSE(g.anomaly);
    EXPECT_TRUE(g.face_present);
  }
}

TEST(Scenario, SegmentLabelsCoverHalfOpenRange) {
  auto s = small(100);
  s.anomaly_segments = {{30, 90, {30, 0, 10, 1}}};
  const auto r = render_scenario(s);
  int count = 0;
  for (const auto& g : r.truth) {
    count += g.anomaly;
    EXPECT_EQ(g.anomaly, g.frame >= 30 && g.frame < 90) << g.frame;
  }
  EXPECT_EQ(count, 60);
}

TEST(Scenario, StillPersonWithoutNoiseGivesIdenticalFrames) {
  auto s = small(12);
  s.noise_sigma = 0.0;
  s.primary_dropout = 0.0;
  s.carry_rate = 0.0;
  s.anomaly_segments = {{5, 8, {0, 0, 0, 1}}};
  const auto r = render_scenario(s);
  for (const auto& f : r.frames) EXPECT_TRUE(f.same_pixels(r.frames[0]));
  const auto records = resolve_stream(r.primary, r.fallback, s.duration_frames);
  const HideConfig hide;
  const auto anchor = compute_hash(hashproctor::hide(r.frames[0], records[0], hide), {});
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    EXPECT_EQ(hamming(anchor, compute_hash(hashproctor::hide(r.frames[i], records[i], hide), {})), 0);
  }
}

TEST(Scenario, DeterministicPerSeed) {
  auto s = small(8);
  s.anomaly_segments = {{2, 5, {20, 5, 8, 1.1}}};
  const auto a = render_scenario(s), b = render_scenario(s);
  for (std::size_t i = 0; i < a.frames.size(); ++i) EXPECT_TRUE(a.frames[i].same_pixels(b.frames[i]));
  EXPECT_EQ(a.primary, b.primary);
  s.seed = 2;
  const auto c = render_scenario(s);
  EXPECT_FALSE(a.frames[0].same_pixels(c.frames[0]));
}

TEST(Scenario, DetectorStreamsFollowRates) {
  auto s = small(400);
  s.width = 32;
  s.height = 24;
  s.primary_dropout = 0.2;
  s.carry_rate = 0.1;
  const auto r = render_scenario(s);
  std::size_t primary_hits = 0;
  for (const auto& d : r.primary) primary_hits += d.has_detection();
  const double primary_rate = static_cast<double>(primary_hits) / 400.0;
  EXPECT_NEAR(primary_rate, 0.7, 0.08);
  EXPECT_NEAR(static_cast<double>(r.fallback.size()) / 400.0, 0.2, 0.06);
  const auto recs = resolve_stream(r.primary, r.fallback, 400);
  for (const auto& rec : recs) {
    if (rec.frame_index > 0) {
      EXPECT_NE(rec.provenance, Provenance::None);
    }
  }
}

TEST(Scenario, DetectionsLieInsideFrame) {
  auto s = small(3);
  s.primary_dropout = 0.0;
  s.carry_rate = 0.0;
  const auto r = render_scenario(s);
  for (const auto& d : r.primary) {
    ASSERT_TRUE(d.face && d.landmarks);
    EXPECT_EQ(d.eyes.size(), 2u);
    EXPECT_TRUE(d.face->clipped(s.width, s.height).has_value());
    for (const auto& e : d.eyes) EXPECT_TRUE(d.face->contains(e.x, e.y));
  }
}

TEST(Scenario, ValidationErrors) {
  auto s = small(50);
  s.anomaly_segments = {{10, 30, {}}, {20, 40, {}}};
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::Config);
  s.anomaly_segments = {{40, 60, {}}};
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::Config);
  s.anomaly_segments = {{10, 10, {}}};
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::Config);
  s.anomaly_segments.clear();
  s.glance = {10, 10, 3};
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { parse_scenario("{\"segments\": 3}"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_scenario("{"); }), ErrorKind::Parse);
}

TEST(Scenario, ShippedScenarioFilesLoad) {
  const auto two = load_scenario(std::filesystem::path(HASHPROCTOR_SCENARIO_DIR) / "two_positions.json");
  EXPECT_EQ(two.duration_frames, 1800);
  EXPECT_EQ(two.position_changes.size(), 1u);
  EXPECT_EQ(two.anomaly_segments.size(), 5u);
  EXPECT_EQ(two.glance.period, 40);
  const auto reg = load_scenario(std::filesystem::path(HASHPROCTOR_SCENARIO_DIR) / "synthetic_300.json");
  EXPECT_EQ(reg.duration_frames, 300);
  EXPECT_EQ(reg.anomaly_segments.size(), 2u);
  EXPECT_DOUBLE_EQ(reg.anomaly_segments[0].transform.angle_deg, 15.0);
}

TEST(Scenario, GeneratedTreeIsAValidPipelineInput) {
  fixture::TempDir dir("gen");
  auto s = small(10);
  const auto files = generate_scenario(s, dir.path());
  const auto cfg = load_pipeline_config(files.pipeline_config);
  EXPECT_NO_THROW(validate(cfg));
  EXPECT_EQ(list_frames(cfg.frames_dir).size(), 10u);
  EXPECT_EQ(list_png_files(files.calibration_dir).size(), 3u);
  EXPECT_EQ(parse_ground_truth(files.ground_truth).size(), 10u);
  EXPECT_EQ(cfg.output_dir, dir.path() / "output");
}
