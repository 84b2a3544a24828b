#include <benchmark/benchmark.h>

#include <random>

#include "hashproctor/anomaly.hpp"
#include "hashproctor/detections.hpp"
#include "hashproctor/facehide.hpp"
#include "hashproctor/imagehash.hpp"
#include "hashproctor/png_io.hpp"
#include "hashproctor/scenario.hpp"

using namespace hashproctor;

namespace {

struct Pose720 {
  Frame frame;
  DetectionRecord record;
};

const Pose720& pose720() {
  static const Pose720 p = [] {
    const RenderedPose r = render_pose(1280, 720, {}, 0.0, 1.0, 3);
    return Pose720{r.frame, {0, r.detection.face, r.detection.eyes, r.detection.landmarks, Provenance::Primary}};
  }();
  return p;
}

void BM_Hash(benchmark::State& state) {
  const HashConfig cfg{static_cast<HashAlgorithm>(state.range(0)), static_cast<int>(state.range(1))};
  const Frame& f = pose720().frame;
  for (auto _ : state) benchmark::DoNotOptimize(compute_hash(f, cfg));
  state.SetLabel(std::string(to_string(cfg.algorithm)) + "/" + std::to_string(cfg.size));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Hash)
    ->ArgsProduct({{static_cast<int>(HashAlgorithm::AHash), static_cast<int>(HashAlgorithm::DHash),
                    static_cast<int>(HashAlgorithm::PHash)},
                   {8, 12, 16}})
    ->Unit(benchmark::kMicrosecond);

void BM_Hide(benchmark::State& state) {
  HideConfig cfg;
  cfg.mode = state.range(0) ? HideMode::Mask : HideMode::Blur;
  const Pose720& p = pose720();
  Frame work = p.frame;
  for (auto _ : state) {
    state.PauseTiming();
    work.data = p.frame.data;
    state.ResumeTiming();
    hide_in_place(work, p.record, cfg);
    benchmark::ClobberMemory();
  }
  state.SetLabel(to_string(cfg.mode));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Hide)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SgSmooth(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dist(0, 144);
  std::vector<double> series(static_cast<std::size_t>(state.range(0)));
  for (auto& v : series) v = dist(rng);
  for (auto _ : state) benchmark::DoNotOptimize(sg_smooth(series, 31, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SgSmooth)->Arg(1800)->Arg(18000);

void BM_DetectorStep(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::vector<PerceptualHash> hashes;
  for (int i = 0; i < 64; ++i) {
    Frame f(32, 32, 1);
    for (auto& v : f.data) v = static_cast<std::uint8_t>(rng());
    hashes.push_back(compute_hash(f, {}));
  }
  DetectorConfig cfg;
  cfg.reselect_anchor = state.range(0) != 0;
  for (auto _ : state) {
    AnomalyDetector det(40, cfg);
    for (std::int64_t i = 0; i < 1800; ++i) det.step(hashes[static_cast<std::size_t>(i) % hashes.size()], i);
    det.finalize();
    benchmark::DoNotOptimize(det.events());
  }
  state.SetItemsProcessed(state.iterations() * 1800);
}
BENCHMARK(BM_DetectorStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PngEncode(benchmark::State& state) {
  const Frame& f = pose720().frame;
  for (auto _ : state) benchmark::DoNotOptimize(encode_png(f, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PngEncode)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_PngDecode(benchmark::State& state) {
  const auto bytes = encode_png(pose720().frame, 1);
  for (auto _ : state) benchmark::DoNotOptimize(decode_png(bytes));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PngDecode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
