#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "pairrank/metrics.hpp"

namespace {

std::string sample_text(std::mt19937_64& rng, int words) {
    static const std::vector<std::string> vocab{
        "alpha", "beta", "gamma", "delta", "omega", "river", "stone", "cloud",
        "light", "dark",  "wind",  "tree",  "bird",  "fish",  "road",  "house"};
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += vocab[rng() % vocab.size()];
    }
    return out;
}

std::pair<std::string, std::string> sentence_pair(int words) {
    std::mt19937_64 rng(words);
    return {sample_text(rng, words), sample_text(rng, words)};
}

} // namespace

static void BM_Rouge1(benchmark::State& state) {
    const auto [cand, ref] = sentence_pair(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairrank::rouge_n(cand, ref, 1));
    }
}
BENCHMARK(BM_Rouge1)->Arg(16)->Arg(64)->Arg(256);

static void BM_Rouge2(benchmark::State& state) {
    const auto [cand, ref] = sentence_pair(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairrank::rouge_n(cand, ref, 2));
    }
}
BENCHMARK(BM_Rouge2)->Arg(16)->Arg(64)->Arg(256);

static void BM_RougeL(benchmark::State& state) {
    const auto [cand, ref] = sentence_pair(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairrank::rouge_l(cand, ref));
    }
}
BENCHMARK(BM_RougeL)->Arg(16)->Arg(64)->Arg(256);

static void BM_Bleu(benchmark::State& state) {
    const auto [cand, ref] = sentence_pair(static_cast<int>(state.range(0)));
    const std::vector<std::string> refs{ref};
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairrank::bleu(cand, refs));
    }
}
BENCHMARK(BM_Bleu)->Arg(16)->Arg(64)->Arg(256);

static void BM_CiderCorpus(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
    for (int i = 0; i < state.range(0); ++i) {
        corpus.push_back({sample_text(rng, 12), {sample_text(rng, 12)}});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairrank::cider(corpus));
    }
}
BENCHMARK(BM_CiderCorpus)->Arg(50)->Arg(200);
