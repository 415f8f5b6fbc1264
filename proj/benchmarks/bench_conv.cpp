#include <benchmark/benchmark.h>

#include "asmap/nn.hpp"
#include "asmap/rng.hpp"

using namespace asmap;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.normal();
    return t;
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
    const std::size_t hw = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    const Tensor input = random_tensor({5, hw, hw}, rng);
    const Tensor kernels = random_tensor({32, 5, 3, 3}, rng);
    std::vector<double> bias(32, 0.0);
    for (auto _ : state) {
        auto out = conv2d_forward(input, kernels, bias);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(32)->Arg(62);

static void BM_Conv2dBackward(benchmark::State& state) {
    const std::size_t hw = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    const Tensor input = random_tensor({5, hw, hw}, rng);
    const Tensor kernels = random_tensor({32, 5, 3, 3}, rng);
    const Tensor grad_out = random_tensor({32, hw - 2, hw - 2}, rng);
    Tensor grad_in, grad_k;
    std::vector<double> grad_b;
    for (auto _ : state) {
        conv2d_backward(input, kernels, grad_out, grad_in, grad_k, grad_b);
        benchmark::DoNotOptimize(grad_in.data.data());
    }
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Arg(32)->Arg(62);

static void BM_CnnPredict(benchmark::State& state) {
    const std::size_t hw = static_cast<std::size_t>(state.range(0));
    Rng rng(5);
    ModelSpec spec;
    spec.kind = ModelKind::Cnn;
    spec.in_channels = 5;
    spec.in_h = hw;
    spec.in_w = hw;
    spec.n_classes = 2;
    Model model = init_params(rng, spec);
    const Tensor x = random_tensor({5, hw, hw}, rng);
    for (auto _ : state) {
        auto p = predict(model, x);
        benchmark::DoNotOptimize(p.data());
    }
}
BENCHMARK(BM_CnnPredict)->Arg(8)->Arg(32)->Arg(62);

BENCHMARK_MAIN();
