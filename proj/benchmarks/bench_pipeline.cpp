#include <benchmark/benchmark.h>

#include "mv3d/train.hpp"
#include "mv3d/viewnet.hpp"

using namespace mv3d;

namespace {

void bm_make_train_sample(benchmark::State& state) {
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 16, 1);
  RenderConfig cfg;
  std::uint64_t i = 0;
  for (auto _ : state) {
    const TrainSample s = make_train_sample(objects, derive_seed(9, i++), cfg, 32, nullptr);
    benchmark::DoNotOptimize(s.input_rgb.data.data());
  }
}

// one full optimizer step (batch render + forward + backward + Adam) at the
// desk-scale configuration
void bm_train_step(benchmark::State& state) {
  ViewNet net(NetConfig::desk());
  net.init_he(1);
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 16, 2);
  RenderConfig rcfg;
  TrainOptions opts;
  opts.steps = 1;
  opts.batch = 16;
  for (auto _ : state) {
    Trainer t(net, nullptr, objects, rcfg, opts);
    t.run();
    benchmark::DoNotOptimize(t.current_step());
  }
}

void bm_predict_view(benchmark::State& state) {
  ViewNet net(NetConfig::desk());
  net.init_he(3);
  RenderConfig cfg;
  const auto lights = basic_lights();
  const TriMesh car = gen_object(ObjectFamily::Vehicle, 5);
  const ImageU8 input = flatten_on_gray(render_view(car, {30, 15, 2.0f}, lights, cfg, 32, 32));
  for (auto _ : state) {
    const Prediction p = predict_view(net, input, {120, 20, 2.0f});
    benchmark::DoNotOptimize(p.rgb.px.data());
  }
}

}  // namespace

BENCHMARK(bm_make_train_sample)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_train_step)->Unit(benchmark::kMillisecond)->Iterations(5);
BENCHMARK(bm_predict_view)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
