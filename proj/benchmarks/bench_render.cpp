#include <benchmark/benchmark.h>

#include "mv3d/evalsuite.hpp"
#include "mv3d/mesh.hpp"
#include "mv3d/render.hpp"

using namespace mv3d;

namespace {

void bm_rasterize(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  RenderConfig cfg;
  const TriMesh car = gen_object(ObjectFamily::Vehicle, 1);
  const auto lights = basic_lights();
  for (auto _ : state) {
    const RenderedSample out = render_view(car, {45, 20, 2.0f}, lights, cfg, s, s);
    benchmark::DoNotOptimize(out.depth.px.data());
  }
}

void bm_gaussian_blur(benchmark::State& state) {
  ImageF img(32, 32, 3, 0.5f);
  for (auto _ : state) {
    const ImageF out = gaussian_blur(img, 1.15f);
    benchmark::DoNotOptimize(out.px.data());
  }
}

void bm_hog(benchmark::State& state) {
  RenderConfig cfg;
  const TriMesh car = gen_object(ObjectFamily::Vehicle, 2);
  const auto lights = basic_lights();
  const ImageF gray = grayscale(flatten_on_gray(render_view(car, {0, 10, 2.0f}, lights, cfg,
                                                            32, 32)));
  for (auto _ : state) {
    const HogDescriptor d = hog(gray);
    benchmark::DoNotOptimize(d.data());
  }
}

void bm_model_distance(benchmark::State& state) {
  const TriMesh a = gen_object(ObjectFamily::Vehicle, 3);
  const TriMesh b = gen_object(ObjectFamily::Vehicle, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_distance(a, b, 35.0f, 32));
  }
}

}  // namespace

BENCHMARK(bm_rasterize)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_gaussian_blur)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_hog)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_model_distance)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
