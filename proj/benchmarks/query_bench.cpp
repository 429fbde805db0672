#include <sdindex/baselines.hpp>
#include <sdindex/multidim.hpp>
#include <sdindex/top1_index.hpp>

#include <benchmark/benchmark.h>

#include <cstddef>
#include <map>
#include <memory>
#include <utility>
#include <vector>

using namespace sdindex;

namespace {

// Built once per (n, dims) and shared by every benchmark of that shape.
struct fixture {
    dataset data;
    multidim_index index;
    ta_index ta;
    std::vector<query_spec> queries;
};

const fixture& shared(std::size_t n, std::size_t dims)
{
    static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<fixture>> cache;
    auto& slot = cache[{n, dims}];
    if (!slot) {
        const auto roles = default_roles(dims);
        auto data = generate({distribution::uniform, n, dims, 0.05, 1});
        auto index = multidim_index::build(data, {roles.repulsive, roles.attractive, {}});
        ta_index ta(data);
        random_engine rng(2);
        std::vector<query_spec> queries;
        for (int i = 0; i < 100; ++i) {
            queries.push_back(random_query(rng, dims, roles, 5));
        }
        slot = std::make_unique<fixture>(
            fixture{std::move(data), std::move(index), std::move(ta), std::move(queries)});
    }
    return *slot;
}

void bm_sdindex(benchmark::State& state)
{
    const auto& f = shared(static_cast<std::size_t>(state.range(0)),
                           static_cast<std::size_t>(state.range(1)));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.index.solve(f.queries[i++ % f.queries.size()]));
    }
}

void bm_scan(benchmark::State& state)
{
    const auto& f = shared(static_cast<std::size_t>(state.range(0)),
                           static_cast<std::size_t>(state.range(1)));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(scan_topk(f.data, f.queries[i++ % f.queries.size()]));
    }
}

void bm_ta(benchmark::State& state)
{
    const auto& f = shared(static_cast<std::size_t>(state.range(0)),
                           static_cast<std::size_t>(state.range(1)));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.ta.topk(f.data, f.queries[i++ % f.queries.size()]));
    }
}

void bm_top1(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto pts = generate({distribution::uniform, n, 2, 0.05, 3}).project(1, 0);
    const auto idx = top1_index::build(pts, 1.0);
    random_engine rng(4);
    std::vector<query2> queries;
    for (int i = 0; i < 100; ++i) {
        queries.push_back({unit_uniform(rng), unit_uniform(rng), {0.5, 0.5}});
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(idx.query(queries[i++ % queries.size()]));
    }
}

void bm_tree_build(benchmark::State& state)
{
    const auto pts =
        generate({distribution::uniform, static_cast<std::size_t>(state.range(0)), 2, 0.05, 5})
            .project(1, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(projection_tree::build(pts));
    }
}

void shapes_2d(benchmark::internal::Benchmark* b)
{
    for (long n : {10000L, 100000L, 1000000L}) {
        b->Args({n, 2});
    }
}

void shapes_6d(benchmark::internal::Benchmark* b)
{
    for (long n : {10000L, 100000L}) {
        b->Args({n, 6});
    }
}

}  // namespace

BENCHMARK(bm_sdindex)->Apply(shapes_2d)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_scan)->Apply(shapes_2d)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_sdindex)->Apply(shapes_6d)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_ta)->Apply(shapes_6d)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_top1)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_tree_build)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
