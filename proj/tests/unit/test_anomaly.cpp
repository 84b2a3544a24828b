#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "error_kind.hpp"
#include "hashproctor/anomaly.hpp"
#include "oracles.hpp"

using namespace hashproctor;

namespace {

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

// Hashes whose distance to an all-zero hash is `levels[i]`, so the distance
// between any two of them is the difference of their levels.
std::vector<PerceptualHash> level_hashes(const std::vector<int>& levels) {
  const auto order = identity_order(144);
  const std::vector<bool> zero(144, false);
  std::vector<PerceptualHash> out;
  for (int l : levels) out.push_back(gen::hash_with_bits(gen::flip_first(zero, order, static_cast<std::size_t>(l)), 12));
  return out;
}

std::vector<int> blocks(std::initializer_list<std::pair<int, int>> spec) {
  std::vector<int> out;
  for (auto [count, level] : spec) out.insert(out.end(), static_cast<std::size_t>(count), level);
  return out;
}

AnomalyDetector run(const std::vector<PerceptualHash>& hashes, int threshold, DetectorConfig cfg) {
  AnomalyDetector det(threshold, cfg);
  for (std::size_t i = 0; i < hashes.size(); ++i) det.step(hashes[i], static_cast<std::int64_t>(i));
  det.finalize();
  return det;
}

oracle::ValleyRule rule_of(const SmoothingConfig& s) {
  return {s.valley_min_separation, s.valley_prominence, s.valley_below_threshold};
}

std::vector<oracle::Bits> bits_of(const std::vector<PerceptualHash>& hashes) {
  std::vector<oracle::Bits> out;
  for (const auto& h : hashes) out.push_back(h.bits());
  return out;
}

}  // namespace

TEST(SavGol, ConstantSeriesUnchanged) {
  const std::vector<double> s(40, 7.5);
  for (double v : sg_smooth(s, 31, 3)) EXPECT_NEAR(v, 7.5, 1e-12);
}

TEST(SavGol, LinearSeriesReproduced) {
  const std::vector<double> s{0, 1, 2, 3, 4, 5, 6};
  const auto out = sg_smooth(s, 5, 2);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(out[i], s[i], 1e-12);
}

TEST(SavGol, PolynomialsUpToDegreeReproduced) {
  gen::Rng rng(61);
  for (auto [w, p] : {std::pair{5, 2}, std::pair{31, 3}, std::pair{7, 0}, std::pair{11, 4}}) {
    for (int t = 0; t < 5; ++t) {
      std::vector<double> coef(static_cast<std::size_t>(p + 1));
      for (auto& c : coef) c = gen::uniform_real(rng, -2, 2);
      std::vector<double> s;
      for (int i = 0; i < 80; ++i) {
        const double x = (i - 40) / 10.0;
        double v = 0;
        for (int k = p; k >= 0; --k) v = v * x + coef[static_cast<std::size_t>(k)];
        s.push_back(v);
      }
      const auto out = sg_smooth(s, w, p);
      for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(out[i], s[i], 1e-9) << w << "/" << p << " at " << i;
    }
  }
}

TEST(SavGol, MatchesNormalEquationsOracle) {
  gen::Rng rng(62);
  for (int t = 0; t < 30; ++t) {
    const int w = 2 * gen::uniform(rng, 1, 16) + 1;
    const int p = gen::uniform(rng, 0, std::min(5, w - 1));
    std::vector<double> s(static_cast<std::size_t>(gen::uniform(rng, 1, 80)));
    for (auto& v : s) v = gen::uniform_real(rng, 0, 144);
    const auto got = sg_smooth(s, w, p);
    const auto want = oracle::savgol(s, w, p);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9) << "w" << w << " p" << p << " i" << i;
  }
}

TEST(SavGol, WeightsSumToOne) {
  for (auto [l, r, p] : {std::tuple{15, 15, 3}, std::tuple{0, 15, 3}, std::tuple{3, 0, 2}, std::tuple{1, 1, 3}}) {
    const auto w = savgol_weights(l, r, p);
    ASSERT_EQ(w.size(), static_cast<std::size_t>(l + r + 1));
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(SavGol, RejectsBadConfig) {
  const std::vector<double> s{1, 2, 3};
  EXPECT_EQ(kind_of([&] { sg_smooth(s, 4, 2); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { sg_smooth(s, 5, 5); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { sg_smooth(std::vector<double>{}, 5, 2); }), ErrorKind::InvalidInput);
  SmoothingConfig cfg;
  cfg.window = 30;
  EXPECT_THROW(validate(cfg), Error);
}

TEST(Valleys, MonotoneSeriesHasNone) {
  std::vector<double> s(50);
  std::iota(s.begin(), s.end(), 0.0);
  EXPECT_TRUE(find_valleys(s, 10, {}).empty());
  std::reverse(s.begin(), s.end());
  EXPECT_TRUE(find_valleys(s, 10, {}).empty());
}

TEST(Valleys, SmallExample) {
  SmoothingConfig cfg;
  cfg.valley_min_separation = 1;
  cfg.valley_prominence = 0.0;
  cfg.valley_below_threshold = true;
  const std::vector<double> s{2, 12, 3, 12, 2};
  EXPECT_EQ(find_valleys(s, 10, cfg), (std::vector<std::size_t>{2}));
  cfg.valley_below_threshold = false;
  EXPECT_EQ(find_valleys(s, 10, cfg), (std::vector<std::size_t>{2}));
  EXPECT_TRUE(find_valleys(s, 2, [&] {
                auto c = cfg;
                c.valley_below_threshold = true;
                return c;
              }()).empty());
}

TEST(Valleys, PlateauIsNotAValley) {
  SmoothingConfig cfg;
  cfg.valley_min_separation = 1;
  cfg.valley_prominence = 0.0;
  EXPECT_TRUE(find_valleys(std::vector<double>{5, 1, 1, 5}, 10, cfg).empty());
}

TEST(Valleys, MatchOracleOnRandomSeries) {
  gen::Rng rng(63);
  for (int t = 0; t < 300; ++t) {
    SmoothingConfig cfg;
    cfg.valley_min_separation = gen::uniform(rng, 1, 8);
    cfg.valley_prominence = gen::uniform_real(rng, 0, 0.5);
    cfg.valley_below_threshold = gen::uniform(rng, 0, 1);
    std::vector<double> s(static_cast<std::size_t>(gen::uniform(rng, 0, 60)));
    double level = gen::uniform_real(rng, 0, 40);
    for (auto& v : s) {
      level += gen::uniform_real(rng, -5, 5);
      v = gen::uniform(rng, 0, 9) == 0 ? std::round(level) : level;  // occasional ties
    }
    const double thr = gen::uniform(rng, 0, 40);
    ASSERT_EQ(find_valleys(s, thr, cfg), oracle::valleys(s, thr, rule_of(cfg)));
  }
}

TEST(MergeEvents, GapAndMinimumLength) {
  const std::vector<bool> flags{false, true, true, false, false, false, true, true, true};
  const std::vector<int> raw(9, 20);
  const auto ev = merge_events(flags, raw, 10, 1, 2);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].start, 1);
  EXPECT_EQ(ev[0].end, 2);
  EXPECT_EQ(ev[1].start, 6);
  EXPECT_EQ(ev[1].end, 8);
}

TEST(MergeEvents, AllAndNone) {
  const std::vector<int> raw(10, 30);
  const auto all = merge_events(std::vector<bool>(10, true), raw, 10, 0, 1);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].start, 0);
  EXPECT_EQ(all[0].end, 9);
  EXPECT_EQ(all[0].peak_distance, 30);
  EXPECT_TRUE(merge_events(std::vector<bool>(10, false), raw, 10, 3, 1).empty());
}

TEST(MergeEvents, GapBridgesShortHoles) {
  const std::vector<bool> flags{true, false, false, true};
  const std::vector<int> raw(4, 20);
  EXPECT_EQ(merge_events(flags, raw, 10, 2, 1).size(), 1u);
  EXPECT_EQ(merge_events(flags, raw, 10, 1, 1).size(), 2u);
}

TEST(MergeEvents, MatchesOracleAndRecordsAnchor) {
  gen::Rng rng(64);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = static_cast<std::size_t>(gen::uniform(rng, 0, 80));
    std::vector<bool> flags(n);
    std::vector<int> raw(n);
    bool state = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (gen::uniform(rng, 0, 4) == 0) state = !state;
      flags[i] = state;
      raw[i] = gen::uniform(rng, 0, 30);
    }
    const int thr = gen::uniform(rng, 0, 30), gap = gen::uniform(rng, 0, 6), min_len = gen::uniform(rng, 1, 6);
    const std::vector<std::int64_t> anchors{0, static_cast<std::int64_t>(n / 2)};
    const auto got = merge_events(flags, raw, thr, gap, min_len, anchors);
    const auto want = oracle::merge(flags, raw, thr, gap, min_len);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].start, want[k].start);
      EXPECT_EQ(got[k].end, want[k].end);
      EXPECT_EQ(got[k].peak_distance, want[k].peak);
      EXPECT_EQ(got[k].anchor_index, got[k].start >= anchors[1] ? anchors[1] : 0);
      EXPECT_EQ(got[k].verdict, Verdict::Unreviewed);
    }
  }
}

TEST(Detector, IdenticalFramesNeverFlag) {
  const auto hashes = level_hashes(std::vector<int>(120, 0));
  const auto det = run(hashes, 0, {});
  for (int d : det.raw()) EXPECT_EQ(d, 0);
  for (bool f : det.flags()) EXPECT_FALSE(f);
  EXPECT_TRUE(det.events().empty());
}

TEST(Detector, DecisionsLagByHalfWindow) {
  AnomalyDetector det(10, {});
  const auto hashes = level_hashes(std::vector<int>(20, 0));
  for (int i = 0; i < 15; ++i) EXPECT_FALSE(det.step(hashes[i], i).has_value()) << i;
  for (int i = 15; i < 20; ++i) {
    const auto decided = det.step(hashes[i], i);
    ASSERT_TRUE(decided.has_value());
    EXPECT_EQ(decided->index, i - 15);
  }
  const auto rest = det.finalize();
  EXPECT_EQ(rest.size(), 15u);
  EXPECT_EQ(det.flags().size(), 20u);
}

TEST(Detector, MiddleBlockFlaggedAndAnchorMovesToFinalBlock) {
  // The undershoot after the step down is a shallow valley (about 6% of the
  // observed range), so the prominence fraction is lowered for this sequence.
  DetectorConfig cfg;
  cfg.smoothing.valley_prominence = 0.05;
  const auto hashes = level_hashes(blocks({{30, 2}, {30, 20}, {30, 4}}));
  const auto det = run(hashes, 10, cfg);
  for (int i = 35; i < 55; ++i) EXPECT_TRUE(det.flags()[i]) << i;
  for (int i = 0; i < 25; ++i) EXPECT_FALSE(det.flags()[i]) << i;
  ASSERT_EQ(det.anchors().size(), 2u);
  EXPECT_GE(det.anchors().back(), 60);
  const auto ev = det.events();
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_LE(ev[0].start, 32);
  EXPECT_GE(ev[0].end, 57);
}

TEST(Detector, TwoPositionsNeedReselection) {
  // Position A, a large excursion, then a persistent position B that is 14
  // bits away from A.
  DetectorConfig cfg;
  cfg.smoothing.valley_prominence = 0.02;
  const auto hashes = level_hashes(blocks({{60, 0}, {30, 20}, {150, 14}}));
  cfg.reselect_anchor = false;
  const auto fixed = run(hashes, 10, cfg);
  EXPECT_EQ(fixed.anchors(), (std::vector<std::int64_t>{0}));
  for (int i = 100; i < 240; ++i) EXPECT_TRUE(fixed.flags()[i]) << i;
  cfg.reselect_anchor = true;
  const auto resel = run(hashes, 10, cfg);
  ASSERT_GE(resel.anchors().size(), 2u);
  EXPECT_GE(resel.anchors()[1], 90);
  for (int i = 150; i < 240; ++i) EXPECT_FALSE(resel.flags()[i]) << i;
}

TEST(Detector, OutOfOrderFrameRejected) {
  AnomalyDetector det(10, {});
  const auto hashes = level_hashes({0, 0});
  det.step(hashes[0], 0);
  EXPECT_EQ(kind_of([&] { det.step(hashes[1], 5); }), ErrorKind::Conflict);
  det.finalize();
  EXPECT_EQ(kind_of([&] { det.step(hashes[1], 1); }), ErrorKind::State);
}

TEST(Detector, MatchesStreamingReplayOracle) {
  gen::Rng rng(65);
  for (int t = 0; t < 60; ++t) {
    DetectorConfig cfg;
    cfg.reselect_anchor = gen::uniform(rng, 0, 3) != 0;
    cfg.smoothing.window = 2 * gen::uniform(rng, 1, 10) + 1;
    cfg.smoothing.polyorder = gen::uniform(rng, 0, std::min(4, cfg.smoothing.window - 1));
    cfg.smoothing.valley_min_separation = gen::uniform(rng, 1, 12);
    cfg.smoothing.valley_prominence = gen::uniform_real(rng, 0, 0.3);
    cfg.smoothing.valley_below_threshold = gen::uniform(rng, 0, 1);
    // Random walk in hash space so anchors change what later distances are.
    std::vector<PerceptualHash> hashes;
    std::vector<bool> bits = gen::random_bits(rng, 144);
    const int n = gen::uniform(rng, 1, 220);
    for (int i = 0; i < n; ++i) {
      const int flips = gen::uniform(rng, 0, 10) == 0 ? 20 : gen::uniform(rng, 0, 3);
      for (int k = 0; k < flips; ++k) {
        const auto b = static_cast<std::size_t>(gen::uniform(rng, 0, 143));
        bits[b] = !bits[b];
      }
      hashes.push_back(gen::hash_with_bits(bits, 12));
    }
    const int thr = gen::uniform(rng, 2, 30);
    const auto det = run(hashes, thr, cfg);
    const auto want = oracle::detector(bits_of(hashes), thr, cfg.smoothing.window, cfg.smoothing.polyorder,
                                       rule_of(cfg.smoothing), cfg.reselect_anchor);
    ASSERT_EQ(det.raw(), want.raw) << "trial " << t;
    ASSERT_EQ(det.anchors(), want.anchors) << "trial " << t;
    ASSERT_EQ(det.flags(), want.flags) << "trial " << t;
    for (std::size_t i = 0; i < want.smoothed.size(); ++i) ASSERT_NEAR(det.smoothed()[i], want.smoothed[i], 1e-9);
  }
}

TEST(Detector, Deterministic) {
  gen::Rng rng(66);
  std::vector<int> levels;
  for (int i = 0; i < 300; ++i) levels.push_back(gen::uniform(rng, 0, 40));
  const auto hashes = level_hashes(levels);
  const auto a = run(hashes, 12, {}), b = run(hashes, 12, {});
  EXPECT_EQ(a.smoothed(), b.smoothed());
  EXPECT_EQ(a.anchors(), b.anchors());
  EXPECT_EQ(a.events(), b.events());
}

TEST(Verdict, NamesRoundTrip) {
  for (auto v : {Verdict::Unreviewed, Verdict::Confirmed, Verdict::Dismissed}) EXPECT_EQ(parse_verdict(to_string(v)), v);
  EXPECT_EQ(kind_of([] { parse_verdict("maybe"); }), ErrorKind::InvalidInput);
}
