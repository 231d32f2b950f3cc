// Serial against OpenMP versions of the heavy kernels.
#include "bondlab/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace bondlab;

namespace {

kernels::Exec mode(const benchmark::State& s) { return s.range(0) ? kernels::Exec::parallel : kernels::Exec::serial; }

Mat random_matrix(int r, int c, std::uint64_t seed) {
    auto rng = make_stream(seed, 0);
    std::normal_distribution<double> z;
    Mat X(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) X(i, j) = z(rng);
    return X;
}

void BM_autocovariances(benchmark::State& s) {
    Mat X = demean(random_matrix(2000, 40, 1));
    for (auto _ : s) benchmark::DoNotOptimize(kernels::autocovariances(X, 12, mode(s)));
}

void BM_weighted_chi2(benchmark::State& s) {
    Vec w = random_matrix(30, 1, 2).col(0).cwiseAbs();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::weighted_chi2_sf(w, 20.0, 100000, 7, mode(s)));
}

void BM_rolling_slopes(benchmark::State& s) {
    Mat F = random_matrix(150, 2, 3);
    Mat Y = random_matrix(150, 1000, 4);
    for (auto _ : s)
        benchmark::DoNotOptimize(kernels::rolling_stats(Y, F, 36, 24, kernels::RollMode::slopes, mode(s)));
}

void BM_replicate(benchmark::State& s) {
    Mat X = random_matrix(150, 10, 5);
    for (auto _ : s)
        benchmark::DoNotOptimize(kernels::replicate(
            1000, 10, 9,
            [&](int, std::mt19937_64& rng) {
                std::uniform_int_distribution<int> u(0, int(X.rows()) - 1);
                Vec m = Vec::Zero(X.cols());
                for (Eigen::Index t = 0; t < X.rows(); ++t) m += X.row(u(rng)).transpose();
                return Vec(m / double(X.rows()));
            },
            mode(s)));
}

}  // namespace

BENCHMARK(BM_autocovariances)->Arg(0)->Arg(1)->ArgName("parallel");
BENCHMARK(BM_weighted_chi2)->Arg(0)->Arg(1)->ArgName("parallel");
BENCHMARK(BM_rolling_slopes)->Arg(0)->Arg(1)->ArgName("parallel");
BENCHMARK(BM_replicate)->Arg(0)->Arg(1)->ArgName("parallel");

BENCHMARK_MAIN();
