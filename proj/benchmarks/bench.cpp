// Microbenchmarks for the hot paths: candidate sampling and scoring,
// featurization, k-means iterations, and regressor prediction.

#include <benchmark/benchmark.h>

#include <vector>

#include "d2v/classifier.hpp"
#include "d2v/da2.hpp"
#include "d2v/regress.hpp"
#include "d2v/rng.hpp"
#include "d2v/vocab.hpp"

using namespace d2v;

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& x : v) {
        x = rng.gamma(1.0);
        sum += x;
    }
    for (double& x : v) x /= sum;
    return v;
}

DatasetMatrix random_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DomainVector> cols;
    for (std::size_t j = 0; j < m; ++j) cols.emplace_back(random_simplex(rng, n));
    return DatasetMatrix(cols);
}

} // namespace

static void BM_SampleCandidates(benchmark::State& state) {
    const std::size_t m = state.range(0);
    TokenDistribution a(std::vector<double>(m, 1.0 / static_cast<double>(m)));
    for (auto _ : state) {
        auto set = sample_candidates(a, 10000, 1.0, 1);
        benchmark::DoNotOptimize(set.candidates.data());
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SampleCandidates)->Arg(4)->Arg(16)->Arg(64);

static void BM_ScoreCandidates(benchmark::State& state) {
    const std::size_t n = 16, m = state.range(0);
    const auto V = random_matrix(n, m, 2);
    Rng rng(3);
    const DomainVector target(random_simplex(rng, n));
    const auto set =
        sample_candidates(TokenDistribution(std::vector<double>(m, 1.0 / m)), 10000, 1.0, 4);
    for (auto _ : state) {
        auto result = optimize_da2(V, target, set, DistanceSpec{}, 100);
        benchmark::DoNotOptimize(result.report.best_score);
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ScoreCandidates)->Arg(4)->Arg(16)->Arg(64);

static void BM_Featurize(benchmark::State& state) {
    FeatureConfig cfg;
    std::string text;
    Rng rng(5);
    for (int w = 0; w < 200; ++w) {
        if (!text.empty()) text += ' ';
        for (int c = 0; c < 6; ++c) text += static_cast<char>('a' + rng.uniform_int(26));
    }
    for (auto _ : state) {
        auto fv = featurize(text, cfg);
        benchmark::DoNotOptimize(fv.counts.data());
    }
    state.SetBytesProcessed(state.iterations() * text.size());
}
BENCHMARK(BM_Featurize);

static void BM_KmeansFit(benchmark::State& state) {
    Rng rng(6);
    EmbeddingSet set;
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> v(16);
        for (double& x : v) x = rng.normal();
        set.ids.push_back(std::to_string(i));
        set.vectors.push_back(std::move(v));
    }
    for (auto _ : state) {
        auto result = kmeans_fit(set, state.range(0), 7, 50, 1);
        benchmark::DoNotOptimize(result.inertia);
    }
}
BENCHMARK(BM_KmeansFit)->Arg(8)->Arg(32);

static void BM_GbdtPredict(benchmark::State& state) {
    Rng rng(8);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 500; ++i) {
        auto x = random_simplex(rng, 8);
        ys.push_back(x[0] * 2 - x[3] + 0.1 * rng.normal());
        xs.push_back(std::move(x));
    }
    const auto model = fit_gbdt(xs, ys, GbdtConfig{}, 9);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(xs[i++ % xs.size()]));
    }
}
BENCHMARK(BM_GbdtPredict);

BENCHMARK_MAIN();
