#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "fiberlab/operators.hpp"

using namespace fiberlab;

namespace {

const DiscreteManifold& twisted() {
    static const DiscreteManifold M = [] {
        FamilySpec s;
        s.kind = FamilyKind::TwistedTorus3;
        s.base_dim = 2;
        s.epsilon = 0.1;
        s.twist = 0.5;
        s.resolution = {48, 32};
        return build_family(s);
    }();
    return M;
}

const ScalarField& field() {
    static const ScalarField f = sample(twisted(), [](const SmallVec& x) {
        return std::sin(2 * std::numbers::pi * x(0)) * std::cos(2 * std::numbers::pi * (x(1) + x(2)));
    });
    return f;
}

const LaplaceOperator& op() {
    static const LaplaceOperator L = laplacian_matrix(twisted());
    return L;
}

void BM_GradientSerial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::gradient_serial(twisted(), field()));
}
void BM_GradientOmp(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::gradient_omp(twisted(), field()));
}
void BM_HessianSerial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::hessian_serial(twisted(), field()));
}
void BM_HessianOmp(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::hessian_omp(twisted(), field()));
}
void BM_LaplacianSerial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::laplacian_apply_serial(op(), field()));
}
void BM_LaplacianOmp(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(kernels::laplacian_apply_omp(op(), field()));
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HessianSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HessianOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LaplacianSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LaplacianOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
