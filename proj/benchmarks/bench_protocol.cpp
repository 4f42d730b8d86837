#include <benchmark/benchmark.h>

#include "mmpir/audit.hpp"
#include "mmpir/protocol.hpp"
#include "mmpir/serialize.hpp"

using namespace mmpir;

namespace {

void BM_GenerateQueries(benchmark::State &state) {
    Params params(2, 4, 2, 1, 1, FieldModulus(65537));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_queries(params, RequestSet{{0, 1}}, {2}, ++seed));
    }
}
BENCHMARK(BM_GenerateQueries);

void BM_AnswerQuery(benchmark::State &state) {
    const std::uint32_t chunk = static_cast<std::uint32_t>(state.range(0));
    Params params(2, 4, 2, 1, chunk, FieldModulus(65537));
    Library library = random_library(4, params.file_symbols(), params.modulus, 1);
    Query query = generate_queries(params, RequestSet{{0, 1}}, {2}, 9)[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(answer_query(library, query));
    }
    state.SetBytesProcessed(std::int64_t(state.iterations()) * params.file_symbols() * 4);
}
BENCHMARK(BM_AnswerQuery)->Arg(1)->Arg(64)->Arg(1024);

void BM_RunExchange(benchmark::State &state) {
    const std::uint32_t chunk = static_cast<std::uint32_t>(state.range(0));
    Params params(2, 4, 2, 1, chunk, FieldModulus(65537));
    Library library = random_library(4, params.file_symbols(), params.modulus, 2);
    RequestSet request{{0, 1}};
    SideInfo side = side_info_from_library(library, {2});
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_exchange(params, library, request, side, ++seed));
    }
}
BENCHMARK(BM_RunExchange)->Arg(1)->Arg(64);

void BM_SerializeQuery(benchmark::State &state) {
    Params params(3, 6, 2, 1, 4, FieldModulus(65537));
    Query query = generate_queries(params, RequestSet{{0, 1}}, {2}, 3)[0];
    for (auto _ : state) {
        benchmark::DoNotOptimize(serialize_query(query));
    }
}
BENCHMARK(BM_SerializeQuery);

void BM_AuditSampling(benchmark::State &state) {
    Params params(2, 4, 2, 1, 1, FieldModulus(65537));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sample_feature_counts(params, RequestSet{{0, 1}}, 0, 1000, ++seed));
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * 1000);
}
BENCHMARK(BM_AuditSampling);

} // namespace
