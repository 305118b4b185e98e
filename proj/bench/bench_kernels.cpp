// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "bruv/ingest.hpp"
#include "bruv/inpaint.hpp"
#include "bruv/metrics.hpp"
#include "bruv/pipeline.hpp"

namespace {

using namespace bruv;

RasterImage glare_frame(int w, int h) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> px(0, 200);
  RasterImage img(w, h);
  for (auto& p : img.pixels()) p = {static_cast<std::uint8_t>(px(rng)), static_cast<std::uint8_t>(px(rng)),
                                    static_cast<std::uint8_t>(px(rng))};
  std::uniform_int_distribution<int> col(0, w - 40), row(0, h - 40), side(3, 38);
  for (int k = 0; k < 60; ++k) {
    const int r0 = row(rng), c0 = col(rng), sh = side(rng), sw = side(rng);
    for (int r = r0; r < r0 + sh; ++r)
      for (int c = c0; c < c0 + sw; ++c) img.at(r, c) = {250, 250, 250};
  }
  return img;
}

const RasterImage& frame() {
  static const RasterImage img = glare_frame(1920, 1080);
  return img;
}

void BM_BrightMaskSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::bright_mask(frame(), kDefaultBrightThreshold));
}
void BM_BrightMaskParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(bright_mask(frame(), kDefaultBrightThreshold));
}
void BM_InpaintSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::inpaint(frame()));
}
void BM_InpaintParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(inpaint(frame()));
}

struct Tuning {
  GridSpec grid;
  GridRunner runner;
};

const Tuning& tuning() {
  static const Tuning t = [] {
    Tuning out;
    out.grid.axes = {{"match_iou_stage1", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}},
                     {"lost_buffer_frames", {1, 3, 6, 9}}};
    const auto spec = load_scenario(BRUV_SAMPLE_SCENARIO);
    const PipelineConfig base;
    const auto synth = synthesize(spec, build_schedule(spec.video, base.fps), 7);
    std::vector<TuningSequence> seqs{
        {spec.video.video_id, synth.detections, truth_rows(synth, spec.video.video_id)}};
    out.runner = make_tracking_runner(std::move(seqs), out.grid, base);
    return out;
  }();
  return t;
}

void BM_GridSearchSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial::grid_search(tuning().grid, tuning().runner));
}
void BM_GridSearchParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(grid_search(tuning().grid, tuning().runner));
}

}  // namespace

BENCHMARK(BM_BrightMaskSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BrightMaskParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InpaintSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InpaintParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSearchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSearchParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
