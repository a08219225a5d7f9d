#include <benchmark/benchmark.h>

#include "mv3d/ops.hpp"
#include "mv3d/rng.hpp"

using namespace mv3d;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  SplitMix64 rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// desk-scale encoder layer shapes: (C_in, H, C_out, k, stride)
struct LayerShape {
  int c_in, h, c_out, k, stride;
};
constexpr LayerShape kLayers[] = {
    {3, 32, 16, 5, 2}, {16, 16, 32, 5, 2}, {32, 8, 64, 3, 2}, {64, 4, 128, 3, 2},
    {128, 2, 128, 3, 2},
};

void bm_conv2d_forward(benchmark::State& state) {
  const LayerShape& l = kLayers[state.range(0)];
  const Tensor x = random_tensor({l.c_in, l.h, l.h}, 1);
  const Tensor w = random_tensor({l.c_out, l.c_in, l.k, l.k}, 2);
  const Tensor b({l.c_out});
  for (auto _ : state) {
    Graph g;
    auto y = ops::conv2d(g, g.leaf(x), g.leaf(w), g.leaf(b), l.stride, (l.k - 1) / 2);
    benchmark::DoNotOptimize(g.value(y).data.data());
  }
  const std::int64_t macs = static_cast<std::int64_t>(l.c_out) * (l.h / l.stride) *
                            (l.h / l.stride) * l.c_in * l.k * l.k;
  state.SetItemsProcessed(state.iterations() * macs);
}

void bm_conv2d_forward_backward(benchmark::State& state) {
  const LayerShape& l = kLayers[state.range(0)];
  const Tensor x = random_tensor({l.c_in, l.h, l.h}, 1);
  const Tensor w = random_tensor({l.c_out, l.c_in, l.k, l.k}, 2);
  const Tensor b({l.c_out});
  for (auto _ : state) {
    Graph g;
    auto xid = g.leaf(x);
    auto y = ops::conv2d(g, xid, g.leaf(w), g.leaf(b), l.stride, (l.k - 1) / 2);
    auto loss = ops::sum_squares(g, y);
    g.backward(loss);
    benchmark::DoNotOptimize(g.grad(xid).data.data());
  }
  const std::int64_t macs = 3 * static_cast<std::int64_t>(l.c_out) * (l.h / l.stride) *
                            (l.h / l.stride) * l.c_in * l.k * l.k;
  state.SetItemsProcessed(state.iterations() * macs);
}

void bm_fully_connected_train(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Tensor x = random_tensor({n}, 3);
  const Tensor w = random_tensor({n, n}, 4);
  const Tensor b({n});
  for (auto _ : state) {
    Graph g;
    auto xid = g.leaf(x);
    auto y = ops::fully_connected(g, xid, g.leaf(w), g.leaf(b));
    auto loss = ops::sum_squares(g, y);
    g.backward(loss);
    benchmark::DoNotOptimize(g.grad(xid).data.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

}  // namespace

BENCHMARK(bm_conv2d_forward)->DenseRange(0, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_conv2d_forward_backward)->DenseRange(0, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_fully_connected_train)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
