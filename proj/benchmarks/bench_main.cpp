#include <random>

#include <benchmark/benchmark.h>

#include "iqlut/ecnn.hpp"
#include "iqlut/lut.hpp"
#include "iqlut/lut_infer.hpp"
#include "iqlut/resize.hpp"
#include "synthetic.hpp"

namespace {

using namespace iqlut;

Model bench_model(int layers, int channels) {
  const ModelSpec spec = make_model_spec(layers, channels, 4, KernelShape{2, 2}, default_input_bits(layers));
  return testing::random_model(spec, 1, 0.3);
}

void BM_LutInfer(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const LutModel lut = build_lut_model(bench_model(2, 4), 8);
  const ImagePlane lr = testing::random_plane(2, side, side);
  LutInferOptions opts;
  opts.threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(lut_infer(lut, lr, opts));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_LutInfer)->Args({64, 1})->Args({128, 1})->Args({128, 4})->Unit(benchmark::kMillisecond);

void BM_ForwardFloat(benchmark::State& state) {
  const Model m = bench_model(2, 4);
  const ImagePlane lr = testing::random_plane(3, 64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(forward_full(lr, m));
}
BENCHMARK(BM_ForwardFloat)->Unit(benchmark::kMillisecond);

void BM_DpfiEval(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  SubnetParams p = make_subnet(4, 16);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (auto& l : p.stages) {
    for (double& v : l.weight) v = n(rng);
    for (double& v : l.bias) v = n(rng);
  }
  const LutTable table = build_lut(p, BlockQuantizer(BlockQuant{bits, 0.3, 0.6, -1, 1, true}), 8);
  const NonUniformQuantizer q(0.3, 0.6, bits);
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpfi_eval(table, q, x));
    x = x > 1.0 ? -1.0 : x + 1e-3;
  }
}
BENCHMARK(BM_DpfiEval)->Arg(3)->Arg(8);

void BM_ExpandedConv(benchmark::State& state) {
  const Model m = bench_model(1, 4);
  FeatureTensor in(4, 64, 64, 0.1);
  const SubnetFunctions fns(m.blocks[1].subnets);
  for (auto _ : state) benchmark::DoNotOptimize(expanded_conv(in, fns, m.spec.kernel, 16));
}
BENCHMARK(BM_ExpandedConv)->Unit(benchmark::kMillisecond);

void BM_Resize(benchmark::State& state) {
  const ImagePlane p = testing::random_plane(5, 128, 128);
  const auto kernel = static_cast<ResizeKernel>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(resize(p, 4.0, kernel));
}
BENCHMARK(BM_Resize)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
