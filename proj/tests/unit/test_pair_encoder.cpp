#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "pairrank/checkpoint.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/pair_encoder.hpp"
#include "pairrank/vocab.hpp"
#include "test_support.hpp"

using namespace pairrank;

namespace {

Vocabulary toy_vocabulary() {
    std::vector<std::string> texts{"alpha beta gamma delta omega river stone cloud wind"};
    return Vocabulary::build(texts, 100);
}

/// Test encoder that returns planted per-position rows.
class PlantedEncoder final : public nn::SequenceEncoder {
public:
    using Fn = std::function<nn::Mat(const std::vector<int>&)>;
    PlantedEncoder(int width, Fn fn) : width_(width), fn_(std::move(fn)) {}
    int width() const override { return width_; }
    nn::Tape::Node* encode(nn::Tape& t, const std::vector<int>& ids,
                           const std::vector<int>&) override {
        return t.constant(fn_(ids));
    }
    std::vector<nn::Parameter*> parameters() override { return {}; }

private:
    int width_;
    Fn fn_;
};

/// Position-free bag encoder with tied candidate-marker embeddings: each
/// position's state is its token's fixed embedding, and <candidate1> /
/// <candidate2> share one row.
PlantedEncoder::Fn bag_embedding_fn(int width, uint64_t seed) {
    return [width, seed](const std::vector<int>& ids) {
        nn::Mat out(static_cast<int>(ids.size()), width);
        for (size_t p = 0; p < ids.size(); ++p) {
            int tok = ids[p];
            if (tok == Vocabulary::kCand2) tok = Vocabulary::kCand1;
            nn::GaussianInit init(mix_seed(seed, static_cast<uint64_t>(tok)));
            for (int c = 0; c < width; ++c) out.at(static_cast<int>(p), c) = init.next(1.0);
        }
        return out;
    };
}

PairRerankerConfig small_config(int metric_count) {
    PairRerankerConfig cfg;
    cfg.encoder.width = 16;
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.ffn_mult = 2;
    cfg.encoder.max_positions = 64;
    cfg.metrics.assign(static_cast<size_t>(metric_count), "");
    const char* names[] = {"rouge1", "rouge2", "rougeL", "bleu", "cider"};
    for (int i = 0; i < metric_count; ++i) cfg.metrics[static_cast<size_t>(i)] = names[i];
    cfg.init_seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("assemble_pair_sequence: exact layout and recorded anchors") {
    const Vocabulary vocab = toy_vocabulary();
    const TruncationLimits limits{8, 4};
    const PairInput in =
        assemble_pair_sequence(vocab, "alpha beta", "gamma", "delta omega", limits, 64);

    std::vector<int> expected{Vocabulary::kBos,   Vocabulary::kSource, vocab.id("alpha"),
                              vocab.id("beta"),   Vocabulary::kEos,    Vocabulary::kCand1,
                              vocab.id("gamma"),  Vocabulary::kEos,    Vocabulary::kCand2,
                              vocab.id("delta"),  vocab.id("omega"),   Vocabulary::kEos};
    CHECK(in.ids == expected);
    CHECK(in.source_anchor == 1);
    CHECK(in.cand1_anchor == 5);
    CHECK(in.cand2_anchor == 8);
    CHECK_FALSE(in.truncated);

    SUBCASE("swapping candidates keeps length and anchors, swaps segments") {
        const PairInput swapped =
            assemble_pair_sequence(vocab, "alpha beta", "delta omega", "gamma", limits, 64);
        CHECK(swapped.ids.size() == in.ids.size());
        CHECK(swapped.source_anchor == in.source_anchor);
        CHECK(swapped.cand1_anchor == in.cand1_anchor);
        CHECK(swapped.ids[static_cast<size_t>(swapped.cand1_anchor) + 1] == vocab.id("delta"));
    }
}

TEST_CASE("assemble_pair_sequence: head truncation to the limits") {
    const Vocabulary vocab = toy_vocabulary();
    std::string long_source;
    for (int i = 0; i < 10000; ++i) long_source += "alpha ";
    const PairInput in = assemble_pair_sequence(vocab, long_source, "beta", "gamma",
                                                TruncationLimits{256, 4}, 1024);
    // BOS + <source> + 256 + EOS = 259 tokens before the candidate segments.
    CHECK(in.cand1_anchor == 259);
    CHECK(in.truncated);

    int source_tokens = 0;
    for (int p = in.source_anchor + 1; in.ids[static_cast<size_t>(p)] != Vocabulary::kEos; ++p) {
        ++source_tokens;
    }
    CHECK(source_tokens == 256);
}

TEST_CASE("assemble_pair_sequence errors") {
    const Vocabulary vocab = toy_vocabulary();
    CHECK_THROWS_AS(assemble_pair_sequence(vocab, "", "a", "b", {4, 4}, 64), DataError);
    CHECK_THROWS_AS(assemble_pair_sequence(vocab, "a", "", "b", {4, 4}, 64), DataError);
    // Limits exceeding capacity after truncation are a configuration error.
    CHECK_THROWS_AS(
        assemble_pair_sequence(vocab, "alpha beta gamma", "delta omega", "river stone",
                               TruncationLimits{16, 16}, 10),
        ConfigError);
}

TEST_CASE("encode_and_score: shape, determinism, dimension check") {
    auto task = test_support::make_synthetic_task(4, 0, 0, 3);
    std::vector<std::string> texts;
    for (const auto& ex : task.train) {
        texts.push_back(ex.source);
        texts.push_back(ex.target);
    }
    PairRerankerModel model(Vocabulary::build(texts, 500), small_config(3));

    const PairInput in = model.assemble(task.train[0].source, task.train[0].target,
                                        task.train[1].target);
    const auto [s_i, s_j] = model.encode_and_score(in);
    CHECK(s_i.size() == 3);
    CHECK(s_j.size() == 3);

    const auto [r_i, r_j] = model.encode_and_score(in);
    CHECK(s_i == r_i);  // bitwise reproducible
    CHECK(s_j == r_j);

    // Injected encoder whose width disagrees with the head is rejected.
    CHECK_THROWS_AS(PairRerankerModel(toy_vocabulary(), small_config(2),
                                      std::make_unique<PlantedEncoder>(
                                          7, bag_embedding_fn(7, 1))),
                    ConfigError);
}

TEST_CASE("identical candidates under a position-free test encoder score equally") {
    PairRerankerConfig cfg = small_config(2);
    PairRerankerModel model(toy_vocabulary(), cfg,
                            std::make_unique<PlantedEncoder>(cfg.encoder.width,
                                                             bag_embedding_fn(cfg.encoder.width, 9)));
    const PairInput in = model.assemble("alpha beta gamma", "delta omega", "delta omega");
    const auto [s_i, s_j] = model.encode_and_score(in);
    REQUIRE(s_i.size() == 2);
    for (size_t m = 0; m < s_i.size(); ++m) CHECK(s_i[m] == doctest::Approx(s_j[m]).epsilon(1e-15));

    const auto conf = confidence(s_i, s_j);
    for (double c : conf) CHECK(c == doctest::Approx(0.5));
}

TEST_CASE("representations come from exactly the recorded anchor positions") {
    PairRerankerConfig cfg = small_config(1);
    const int width = cfg.encoder.width;
    const Vocabulary vocab = toy_vocabulary();

    const PairInput probe =
        assemble_pair_sequence(vocab, "alpha beta", "gamma", "delta", default_limits(64), 64);

    nn::Mat base(static_cast<int>(probe.ids.size()), width);
    nn::GaussianInit init(31);
    init.fill(base, 1.0);

    auto scores_with = [&](const nn::Mat& planted) {
        PairRerankerModel model(vocab, cfg,
                                std::make_unique<PlantedEncoder>(
                                    width, [planted](const std::vector<int>&) { return planted; }));
        return model.encode_and_score(probe);
    };

    const auto [base_i, base_j] = scores_with(base);

    // Perturbing every non-anchor position changes nothing.
    nn::Mat off_anchor = base;
    for (int p = 0; p < off_anchor.rows; ++p) {
        if (p == probe.source_anchor || p == probe.cand1_anchor || p == probe.cand2_anchor) continue;
        for (int c = 0; c < width; ++c) off_anchor.at(p, c) += 3.25;
    }
    const auto [oa_i, oa_j] = scores_with(off_anchor);
    CHECK(oa_i == base_i);
    CHECK(oa_j == base_j);

    // Perturbing the candidate-1 anchor changes only slot 1.
    nn::Mat cand1_bump = base;
    for (int c = 0; c < width; ++c) cand1_bump.at(probe.cand1_anchor, c) += 1.0;
    const auto [c1_i, c1_j] = scores_with(cand1_bump);
    CHECK(c1_i != base_i);
    CHECK(c1_j == base_j);
}

TEST_CASE("head weights are shared between the two slots") {
    PairRerankerConfig cfg = small_config(2);
    PairRerankerModel model(toy_vocabulary(), cfg,
                            std::make_unique<PlantedEncoder>(cfg.encoder.width,
                                                             bag_embedding_fn(cfg.encoder.width, 9)));
    const PairInput in = model.assemble("alpha beta", "gamma delta", "gamma delta");
    const auto [before_i, before_j] = model.encode_and_score(in);

    // One head, applied to both slots: a single parameter bump moves both.
    model.head().layers[1].weight.value.w[3] += 0.37;
    const auto [after_i, after_j] = model.encode_and_score(in);
    CHECK(after_i != before_i);
    CHECK(after_j != before_j);
    for (size_t m = 0; m < after_i.size(); ++m) {
        CHECK(after_i[m] == doctest::Approx(after_j[m]).epsilon(1e-15));
    }
}

TEST_CASE("confidence: hand values and complementarity") {
    CHECK(confidence({0.0}, {0.0})[0] == doctest::Approx(0.5));
    // sigma(ln 3) = 3/4.
    CHECK(confidence({std::log(3.0)}, {0.0})[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK_THROWS(confidence({0.0, 1.0}, {0.0}));

    auto rng = test_support::make_rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        ScoreVector a, b;
        for (int m = 0; m < 4; ++m) {
            a.push_back(static_cast<double>(rng() % 2000) / 100.0 - 10.0);
            b.push_back(static_cast<double>(rng() % 2000) / 100.0 - 10.0);
        }
        const auto ab = confidence(a, b);
        const auto ba = confidence(b, a);
        for (int m = 0; m < 4; ++m) CHECK(ab[m] + ba[m] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("checkpoint round-trip preserves scores; metric mismatch fails loudly") {
    auto task = test_support::make_synthetic_task(4, 0, 0, 3);
    std::vector<std::string> texts;
    for (const auto& ex : task.train) texts.push_back(ex.source + " " + ex.target);
    PairRerankerModel model(Vocabulary::build(texts, 500), small_config(2));

    const std::string path = "/tmp/pairrank_ckpt_test_" + std::to_string(::getpid()) + ".json";
    save_pair_reranker(path, model);
    auto loaded = load_pair_reranker(path);

    const auto [a1, b1] = model.score(task.train[0].source, task.train[0].target,
                                      task.train[1].target);
    const auto [a2, b2] = loaded->score(task.train[0].source, task.train[0].target,
                                        task.train[1].target);
    CHECK(a1 == a2);
    CHECK(b1 == b2);
    CHECK(checkpoint_kind(path) == "pairreranker");

    CHECK_THROWS_AS(require_checkpoint_metrics(loaded->metrics(), {"rouge1", "bleu"}, path),
                    ConfigError);
    CHECK_NOTHROW(require_checkpoint_metrics(loaded->metrics(), {"rouge1", "rouge2"}, path));
    std::remove(path.c_str());
}
