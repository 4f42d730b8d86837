#include <benchmark/benchmark.h>

#include "mmpir/field.hpp"
#include "mmpir/mds.hpp"
#include "mmpir/rng.hpp"

using namespace mmpir;

namespace {

void BM_FieldMul(benchmark::State &state) {
    FieldModulus q(65537);
    Rng rng(1);
    FieldElement a = fe(1 + rng.uniform(q.q - 1), q);
    FieldElement b = fe(1 + rng.uniform(q.q - 1), q);
    for (auto _ : state) {
        a = mul(a, b);
        benchmark::DoNotOptimize(a);
    }
}
BENCHMARK(BM_FieldMul);

void BM_FieldInv(benchmark::State &state) {
    FieldModulus q(65537);
    Rng rng(2);
    FieldElement a = fe(1 + rng.uniform(q.q - 1), q);
    for (auto _ : state) {
        benchmark::DoNotOptimize(inv(a));
    }
}
BENCHMARK(BM_FieldInv);

void BM_SolveLinear(benchmark::State &state) {
    const std::uint32_t n = static_cast<std::uint32_t>(state.range(0));
    FieldModulus q(65537);
    Rng rng(3);
    Matrix a(n, n, q);
    do {
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = 0; j < n; ++j) a.set(i, j, fe(rng.uniform(q.q), q));
    } while (!invertible(a));
    std::vector<FieldElement> b;
    for (std::uint32_t i = 0; i < n; ++i) b.push_back(fe(rng.uniform(q.q), q));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_linear(a, b));
    }
}
BENCHMARK(BM_SolveLinear)->Arg(4)->Arg(12)->Arg(24);

void BM_MdsEncode(benchmark::State &state) {
    FieldModulus q(65537);
    MdsCode code = make_mds(6, 11, q);
    Rng rng(4);
    std::vector<FieldElement> message;
    for (int i = 0; i < 6; ++i) message.push_back(fe(rng.uniform(q.q), q));
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(code, message));
    }
}
BENCHMARK(BM_MdsEncode);

void BM_MdsRecover(benchmark::State &state) {
    FieldModulus q(65537);
    MdsCode code = make_mds(6, 11, q);
    Rng rng(5);
    std::vector<FieldElement> message;
    for (int i = 0; i < 6; ++i) message.push_back(fe(rng.uniform(q.q), q));
    std::vector<FieldElement> word = encode(code, message);
    std::vector<KnownSymbol> known;
    for (std::uint32_t pos : {0u, 6u, 7u, 8u, 9u, 10u}) known.push_back({pos, word[pos]});
    for (auto _ : state) {
        benchmark::DoNotOptimize(recover(code, known));
    }
}
BENCHMARK(BM_MdsRecover);

} // namespace
