#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pairrank/decoding.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/generator.hpp"
#include "pairrank/metrics.hpp"
#include "pairrank/seq2seq.hpp"
#include "test_support.hpp"

using namespace pairrank;

namespace {

// Tiny Markov LM with an explicit transition table; vocab:
// 0 = bos, 1 = eos, 2..4 = a/b/c.
class ToyLM final : public ConditionalLM {
public:
    int vocab_size() const override { return 5; }
    int bos_id() const override { return 0; }
    int eos_id() const override { return 1; }
    std::vector<double> next_log_probs(const std::vector<int>&,
                                       const std::vector<int>& prefix) const override {
        static const std::map<int, std::vector<double>> table{
            // probs for [bos, eos, a, b, c] given the last token
            {0, {0.0, 0.05, 0.50, 0.30, 0.15}},
            {2, {0.0, 0.35, 0.05, 0.40, 0.20}},
            {3, {0.0, 0.25, 0.45, 0.05, 0.25}},
            {4, {0.0, 0.55, 0.15, 0.20, 0.10}},
        };
        const auto& p = table.at(prefix.back());
        std::vector<double> logp(p.size());
        for (size_t i = 0; i < p.size(); ++i) logp[i] = std::log(std::max(p[i], 1e-12));
        return logp;
    }
};

struct Enumerated {
    std::vector<int> ids;
    double log_prob;
};

void enumerate_seqs(const ToyLM& lm, std::vector<int>& prefix, double lp, int max_len,
                    std::vector<Enumerated>& out) {
    const int len = static_cast<int>(prefix.size()) - 1;
    if (!prefix.empty() && prefix.back() == lm.eos_id()) {
        out.push_back({std::vector<int>(prefix.begin() + 1, prefix.end() - 1), lp});
        return;
    }
    if (len >= max_len) {
        out.push_back({std::vector<int>(prefix.begin() + 1, prefix.end()), lp});
        return;
    }
    const auto logp = lm.next_log_probs({}, prefix);
    for (int tok = 1; tok < lm.vocab_size(); ++tok) {
        prefix.push_back(tok);
        enumerate_seqs(lm, prefix, lp + logp[tok], max_len, out);
        prefix.pop_back();
    }
}

} // namespace

TEST_CASE("beam search finds the exact top sequences of the toy LM") {
    ToyLM lm;
    const int max_len = 3;
    std::vector<Enumerated> all;
    std::vector<int> prefix{lm.bos_id()};
    enumerate_seqs(lm, prefix, 0.0, max_len, all);
    std::sort(all.begin(), all.end(), [](const Enumerated& x, const Enumerated& y) {
        return x.log_prob > y.log_prob;
    });

    // Width large enough to be exhaustive over this tree.
    const auto decoded = decode_beam(lm, {}, 64, 5, max_len);
    REQUIRE(decoded.size() == 5);
    for (size_t i = 0; i < decoded.size(); ++i) {
        CHECK(decoded[i].log_prob == doctest::Approx(all[i].log_prob).epsilon(1e-9));
        CHECK(decoded[i].ids == all[i].ids);
    }
}

TEST_CASE("diverse beam spreads first tokens under a strong penalty") {
    ToyLM lm;
    const auto decoded = decode_diverse_beam(lm, {}, 4, 2, 100.0, 4, 3);
    REQUIRE(decoded.size() == 4);
    std::set<int> first_tokens;
    for (const auto& d : decoded) {
        if (!d.ids.empty()) first_tokens.insert(d.ids.front());
    }
    CHECK(first_tokens.size() >= 2);
}

TEST_CASE("sampling decoders are deterministic under a fixed rng") {
    ToyLM lm;
    auto rng1 = test_support::make_rng(5);
    auto rng2 = test_support::make_rng(5);
    const auto a = decode_top_k(lm, {}, 3, 1.0, 8, 4, rng1);
    const auto b = decode_top_k(lm, {}, 3, 1.0, 8, 4, rng2);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].ids == b[i].ids);

    // k = 1 is greedy: bos -> a -> b -> a ... until max_len.
    auto rng3 = test_support::make_rng(1);
    const auto greedy = decode_top_k(lm, {}, 1, 1.0, 1, 3, rng3);
    CHECK(greedy[0].ids == std::vector<int>{2, 3, 2});

    // Tiny p keeps only the top token: same as greedy.
    auto rng4 = test_support::make_rng(1);
    const auto nucleus = decode_top_p(lm, {}, 1e-9, 1.0, 1, 3, rng4);
    CHECK(nucleus[0].ids == greedy[0].ids);

    auto rng5 = test_support::make_rng(9);
    const auto full = decode_top_p(lm, {}, 1.0, 1.0, 16, 4, rng5);
    CHECK(full.size() == 16);
}

TEST_CASE("decoding config validation") {
    DecodingConfig cfg;
    cfg.method = DecodingMethod::beam;
    cfg.num_candidates = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg.num_candidates = 15;
    cfg.beam_width = 8;  // < num_candidates
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.beam_width = 0;
    CHECK_NOTHROW(cfg.validate());

    DecodingConfig topk;
    topk.method = DecodingMethod::top_k;
    CHECK_THROWS_AS(topk.validate(), ConfigError);  // sampling needs a seed
    topk.seed = 3;
    CHECK_NOTHROW(topk.validate());

    DecodingConfig topp;
    topp.method = DecodingMethod::top_p;
    topp.seed = 3;
    topp.p = 1.5;
    CHECK_THROWS_AS(topp.validate(), ConfigError);
}

TEST_CASE("stub generator: count, tagging, determinism") {
    auto task = test_support::make_synthetic_task(6, 0, 0, 21);
    StubGenerator gen(task.train, {}, 77);
    DecodingConfig cfg;
    cfg.method = DecodingMethod::beam;
    cfg.num_candidates = 15;

    const ScoredPool pool = generate_candidates(gen, task.train[0], cfg);
    CHECK(pool.size() == 15);
    for (const auto& c : pool.candidates) CHECK(c.method == "beam");
    CHECK(pool.example_id == task.train[0].id);

    const ScoredPool again = generate_candidates(gen, task.train[0], cfg);
    for (int i = 0; i < pool.size(); ++i) CHECK(pool.candidates[i].text == again.candidates[i].text);

    DecodingConfig bad = cfg;
    bad.num_candidates = 0;
    CHECK_THROWS_AS(generate_candidates(gen, task.train[0], bad), ConfigError);
}

TEST_CASE("stub generator quality decreases with candidate rank") {
    auto task = test_support::make_synthetic_task(10, 0, 0, 33);
    StubGenerator gen(task.train, {}, 13);
    DecodingConfig cfg;
    cfg.method = DecodingMethod::beam;
    cfg.num_candidates = 12;
    double first = 0.0, last = 0.0;
    for (const auto& ex : task.train) {
        const ScoredPool pool = generate_candidates(gen, ex, cfg);
        first += rouge_n(pool.candidates.front().text, ex.target, 1);
        last += rouge_n(pool.candidates.back().text, ex.target, 1);
    }
    CHECK(first > last);
}

TEST_CASE("build_training_pools: cross-half isolation and merging") {
    auto task = test_support::make_synthetic_task(4, 0, 0, 55);
    const HalfSplitPlan plan = make_half_split(task.train, 3);
    const GeneratorFactory factory = [&](const std::vector<Example>& half, uint64_t seed) {
        uint64_t tag = 0;
        for (const auto& ex : half) tag ^= hash_text(ex.id);
        return std::unique_ptr<TextGenerator>(new StubGenerator(task.train, {}, mix_seed(seed, tag)));
    };
    DecodingConfig beam;
    beam.method = DecodingMethod::beam;
    beam.num_candidates = 15;
    DecodingConfig diverse;
    diverse.method = DecodingMethod::diverse_beam;
    diverse.num_candidates = 15;

    const TrainingPools result = build_training_pools(factory, task.train, plan,
                                                      {beam, diverse}, 9);
    REQUIRE(result.pools.size() == 4);
    for (const auto& pool : result.pools) {
        CHECK(pool.size() == 30);
        CHECK(pool.candidates[0].method == "beam");
        CHECK(pool.candidates[15].method == "diverse_beam");
        // The generating model's training half never contains this example.
        const std::string& trained_on = result.generator_half.at(pool.example_id);
        if (trained_on == "a") {
            CHECK_FALSE(plan.contains_a(pool.example_id));
            CHECK(plan.contains_b(pool.example_id));
        } else {
            CHECK_FALSE(plan.contains_b(pool.example_id));
            CHECK(plan.contains_a(pool.example_id));
        }
    }

    SUBCASE("single config yields pools of 15") {
        const TrainingPools one = build_training_pools(factory, task.train, plan, {beam}, 9);
        for (const auto& pool : one.pools) CHECK(pool.size() == 15);
    }
    SUBCASE("plan missing an id names it") {
        HalfSplitPlan broken = plan;
        std::string removed;
        removed = broken.half_a.back();
        broken.half_a.pop_back();
        try {
            build_training_pools(factory, task.train, broken, {beam}, 9);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(removed) != std::string::npos);
        }
    }
}

TEST_CASE("tiny seq2seq generator: trains, decodes all four methods, deterministic") {
    auto task = test_support::make_synthetic_task(8, 0, 0, 41);
    Seq2SeqConfig cfg;
    cfg.arch.width = 16;
    cfg.arch.layers = 1;
    cfg.arch.heads = 2;
    cfg.arch.ffn_mult = 2;
    cfg.arch.max_positions = 64;
    cfg.vocab_cap = 200;
    cfg.max_source_len = 16;
    cfg.max_target_len = 10;
    cfg.epochs = 2;
    cfg.learning_rate = 3e-3;
    cfg.batch_size = 4;

    std::vector<std::string> texts;
    for (const auto& ex : task.train) {
        texts.push_back(ex.source);
        texts.push_back(ex.target);
    }
    auto model = std::make_shared<TinySeq2Seq>(Vocabulary::build(texts, cfg.vocab_cap), cfg, 5);
    const double loss0 = model->train(task.train, 1);
    CHECK(loss0 > 0.0);
    CHECK(std::isfinite(loss0));

    TinyGenerator gen(model);
    for (DecodingMethod method : {DecodingMethod::beam, DecodingMethod::diverse_beam,
                                  DecodingMethod::top_k, DecodingMethod::top_p}) {
        DecodingConfig dc;
        dc.method = method;
        dc.num_candidates = 5;
        dc.max_len = 8;
        dc.seed = 3;
        const auto a = gen.generate(task.train[0].source, dc);
        const auto b = gen.generate(task.train[0].source, dc);
        CHECK(a.size() == 5);
        CHECK(a == b);  // deterministic per (source, config, seed)
        for (const auto& text : a) CHECK_FALSE(text.empty());
    }
}

TEST_CASE("import_external_candidates: transfer mode and large files") {
    const std::string path = "/tmp/pairrank_external_test.jsonl";
    {
        std::vector<ScoredPool> pools;
        for (int i = 0; i < 1000; ++i) {
            ScoredPool p;
            p.example_id = "ext" + std::to_string(i);
            p.source = "source text " + std::to_string(i);
            p.target = "";  // transfer mode
            for (int c = 0; c < 15; ++c) {
                CandidateRecord rec;
                rec.text = "candidate " + std::to_string(c);
                rec.method = "external";
                p.candidates.push_back(rec);
            }
            pools.push_back(std::move(p));
        }
        write_pools(path, pools);
    }
    const auto loaded = import_external_candidates(path);
    CHECK(loaded.size() == 1000);
    CHECK(loaded[0].transfer_mode());
    CHECK(loaded[0].size() == 15);
    std::remove(path.c_str());
}
