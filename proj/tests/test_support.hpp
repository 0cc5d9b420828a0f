#pragma once

// Shared fixtures: random texts and pools, tiny model factories, and the
// synthetic separable task used by the training and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "pairrank/dataset.hpp"
#include "pairrank/generator.hpp"
#include "pairrank/metrics.hpp"
#include "pairrank/pair_encoder.hpp"
#include "pairrank/text.hpp"
#include "pairrank/types.hpp"
#include "pairrank/vocab.hpp"

namespace test_support {

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline const std::vector<std::string>& toy_vocab() {
    static const std::vector<std::string> words{
        "alpha", "beta",  "gamma", "delta", "omega", "river", "stone", "cloud",
        "light", "dark",  "wind",  "tree",  "bird",  "fish",  "road",  "house"};
    return words;
}

inline std::string random_text(std::mt19937_64& rng, int min_len, int max_len) {
    const int len = min_len + static_cast<int>(rng() % (max_len - min_len + 1));
    std::string out;
    for (int i = 0; i < len; ++i) {
        if (i) out += ' ';
        out += toy_vocab()[rng() % toy_vocab().size()];
    }
    return out;
}

/// A pool with random candidate texts and random scores for the given
/// metrics (scores uniform in [0, 1]).
inline pairrank::ScoredPool random_scored_pool(std::mt19937_64& rng, int m,
                                               const std::vector<pairrank::Metric>& metrics,
                                               const std::string& id = "ex") {
    pairrank::ScoredPool pool;
    pool.example_id = id;
    pool.source = random_text(rng, 3, 8);
    pool.target = random_text(rng, 3, 8);
    for (int i = 0; i < m; ++i) {
        pairrank::CandidateRecord c;
        c.text = random_text(rng, 2, 8);
        c.method = "beam";
        for (pairrank::Metric metric : metrics) {
            c.scores[pairrank::metric_name(metric)] =
                static_cast<double>(rng() % 10000) / 10000.0;
        }
        pool.candidates.push_back(std::move(c));
    }
    return pool;
}

/// Synthetic separable task: the target repeats content words drawn from a
/// clean vocabulary and the stub generator corrupts candidates with noise
/// words from a disjoint vocabulary, so candidate quality is the (learnable)
/// absence of noise tokens.
struct SyntheticTask {
    std::vector<pairrank::Example> train, val, test;
};

inline SyntheticTask make_synthetic_task(int n_train, int n_val, int n_test, uint64_t seed) {
    std::mt19937_64 rng(seed);
    SyntheticTask task;
    int counter = 0;
    auto make_examples = [&](int n, const char* prefix) {
        std::vector<pairrank::Example> out;
        for (int i = 0; i < n; ++i) {
            pairrank::Example ex;
            ex.id = std::string(prefix) + std::to_string(counter++);
            ex.source = random_text(rng, 6, 10);
            // Target = a slice of the source's content words; overlap with
            // the source is what the metrics reward.
            const auto tokens = pairrank::tokenize(ex.source);
            std::string target;
            for (size_t t = 0; t < tokens.size() && t < 6; ++t) {
                if (t) target += ' ';
                target += tokens[t];
            }
            ex.target = target;
            out.push_back(std::move(ex));
        }
        return out;
    };
    task.train = make_examples(n_train, "train");
    task.val = make_examples(n_val, "val");
    task.test = make_examples(n_test, "test");
    return task;
}

/// Generates and scores pools for the synthetic task with quality shuffled
/// across candidate positions (top-beam is deliberately not the best).
inline std::vector<pairrank::ScoredPool> synthetic_pools(
    const std::vector<pairrank::Example>& examples,
    const std::vector<pairrank::Example>& all_examples,
    const std::vector<pairrank::Metric>& metrics, int num_candidates, uint64_t seed) {
    pairrank::StubGeneratorOptions opt;
    opt.base_noise = 0.02;
    opt.noise_step = 0.12;
    opt.shuffle_quality = true;
    pairrank::StubGenerator gen(all_examples, opt, seed);
    pairrank::DecodingConfig cfg;
    cfg.method = pairrank::DecodingMethod::beam;
    cfg.num_candidates = num_candidates;
    std::vector<pairrank::ScoredPool> pools;
    for (const auto& ex : examples) {
        pools.push_back(pairrank::generate_candidates(gen, ex, cfg));
    }
    pairrank::score_pools(pools, metrics);
    return pools;
}

/// Small trainable pair model over the pools' own vocabulary.
inline pairrank::PairRerankerModel small_pair_model(
    const std::vector<pairrank::ScoredPool>& pools,
    const std::vector<pairrank::Metric>& metrics, int width = 32, int layers = 1,
    uint64_t seed = 7) {
    std::vector<std::string> texts;
    for (const auto& pool : pools) {
        texts.push_back(pool.source);
        texts.push_back(pool.target);
        for (const auto& c : pool.candidates) texts.push_back(c.text);
    }
    pairrank::PairRerankerConfig cfg;
    cfg.encoder.width = width;
    cfg.encoder.layers = layers;
    cfg.encoder.heads = 2;
    cfg.encoder.ffn_mult = 2;
    cfg.encoder.max_positions = 96;
    cfg.metrics = pairrank::metric_names(metrics);
    cfg.init_seed = seed;
    return pairrank::PairRerankerModel(pairrank::Vocabulary::build(texts, 4000), cfg);
}

} // namespace test_support
