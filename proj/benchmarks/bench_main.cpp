#include <benchmark/benchmark.h>

#include "kgqa/compose.hpp"
#include "kgqa/encoder.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/stack_sim.hpp"
#include "kgqa/synth.hpp"

using namespace kgqa;

namespace {

Vector random_vector(Eigen::Index n, Rng& rng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
    return v;
}

void BM_CircularCorrelation(benchmark::State& state) {
    Rng rng(1);
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const Vector a = random_vector(n, rng), b = random_vector(n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(circular_correlation(a, b));
}
BENCHMARK(BM_CircularCorrelation)->Arg(128)->Arg(768);

void BM_GcnForward(benchmark::State& state) {
    const KnowledgeGraph g = make_assembly_graph(AssemblyRecipe::default_recipe(), "CV01S", 3);
    const AugmentedGraph ag(g);
    const int d = static_cast<int>(state.range(0));
    const EncoderParams p = init_encoder(ag, {d, d, 2}, CompositionOp::Corr, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gcn_forward(ag, p));
}
BENCHMARK(BM_GcnForward)->Arg(32)->Arg(128);

void BM_Nlcs(benchmark::State& state) {
    Rng rng(2);
    const std::vector<std::string> alphabet = {"bolt", "nut", "cap", "wrench", "seal", "spring"};
    Sequence a(static_cast<std::size_t>(state.range(0))), b(a.size());
    for (auto& x : a) x = alphabet[rng.below(alphabet.size())];
    for (auto& x : b) x = alphabet[rng.below(alphabet.size())];
    for (auto _ : state) benchmark::DoNotOptimize(nlcs(a, b));
}
BENCHMARK(BM_Nlcs)->Arg(8)->Arg(64);

void BM_OptimalPlan(benchmark::State& state) {
    const StackedScene scene = generate_scene(static_cast<int>(state.range(0)), 4);
    const int target = scene.objects().front().id;
    for (auto _ : state) {
        const OptimalPlan plan = optimal_plan(scene, target);
        benchmark::DoNotOptimize(plan.min_length());
    }
}
BENCHMARK(BM_OptimalPlan)->Arg(8)->Arg(12);

void BM_PlaceLabels(benchmark::State& state) {
    const StackedScene scene = generate_scene(22, 5);
    for (auto _ : state) benchmark::DoNotOptimize(place_labels(scene));
}
BENCHMARK(BM_PlaceLabels);

}  // namespace

BENCHMARK_MAIN();
