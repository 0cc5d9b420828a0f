#include "pairrank/pair_encoder.hpp"

#include <cmath>

#include "pairrank/errors.hpp"

namespace pairrank {

using nn::Tape;

TruncationLimits default_limits(int capacity) {
    const int overhead = 7;  // <s>, three segment markers, three </s>
    const int budget = capacity - overhead;
    if (budget < 3) throw ConfigError("encoder capacity too small for the pair layout");
    TruncationLimits lim;
    lim.source_max = budget / 2;
    lim.cand_max = budget / 4;
    if (lim.cand_max < 1) lim.cand_max = 1;
    return lim;
}

PairInput assemble_pair_sequence(const Vocabulary& vocab, const std::string& source,
                                 const std::string& cand1, const std::string& cand2,
                                 TruncationLimits limits, int capacity) {
    if (source.empty() || cand1.empty() || cand2.empty()) {
        throw DataError("assemble_pair_sequence: all three segments must be nonempty");
    }
    if (limits.source_max < 1 || limits.cand_max < 1) {
        throw ConfigError("assemble_pair_sequence: truncation limits must be >= 1");
    }

    PairInput out;
    auto truncate = [&out](std::vector<int> ids, int limit) {
        if (static_cast<int>(ids.size()) > limit) {
            ids.resize(static_cast<size_t>(limit));  // head-keeping truncation
            out.truncated = true;
        }
        return ids;
    };
    const std::vector<int> src = truncate(vocab.encode(source), limits.source_max);
    const std::vector<int> c1 = truncate(vocab.encode(cand1), limits.cand_max);
    const std::vector<int> c2 = truncate(vocab.encode(cand2), limits.cand_max);
    if (src.empty() || c1.empty() || c2.empty()) {
        throw DataError("assemble_pair_sequence: a segment tokenized to nothing");
    }

    auto emit = [&out](int id, int segment) {
        out.ids.push_back(id);
        out.segments.push_back(segment);
    };
    emit(Vocabulary::kBos, 0);
    out.source_anchor = static_cast<int>(out.ids.size());
    emit(Vocabulary::kSource, 0);
    for (int id : src) emit(id, 0);
    emit(Vocabulary::kEos, 0);
    out.cand1_anchor = static_cast<int>(out.ids.size());
    emit(Vocabulary::kCand1, 1);
    for (int id : c1) emit(id, 1);
    emit(Vocabulary::kEos, 1);
    out.cand2_anchor = static_cast<int>(out.ids.size());
    emit(Vocabulary::kCand2, 2);
    for (int id : c2) emit(id, 2);
    emit(Vocabulary::kEos, 2);

    if (static_cast<int>(out.ids.size()) > capacity) {
        throw ConfigError("assembled sequence length " + std::to_string(out.ids.size()) +
                          " exceeds encoder capacity " + std::to_string(capacity) +
                          "; truncation limits are misconfigured");
    }
    return out;
}

std::vector<double> confidence(const ScoreVector& s_i, const ScoreVector& s_j) {
    if (s_i.size() != s_j.size()) throw RuntimeFailure("confidence: score length mismatch");
    std::vector<double> out(s_i.size());
    for (size_t m = 0; m < s_i.size(); ++m) out[m] = nn::stable_sigmoid(s_i[m] - s_j[m]);
    return out;
}

MlpHead::MlpHead(int encoder_width, int metric_count, int depth, nn::GaussianInit& init) {
    if (depth < 1) throw ConfigError("head depth must be >= 1");
    int in = 2 * encoder_width;
    for (int l = 0; l < depth; ++l) {
        const int out = (l == depth - 1) ? metric_count : encoder_width;
        layers.emplace_back("head.l" + std::to_string(l), in, out, init);
        in = out;
    }
}

Tape::Node* MlpHead::apply(Tape& t, Tape::Node* x) {
    for (size_t l = 0; l < layers.size(); ++l) {
        x = layers[l].apply(t, x);
        if (l + 1 < layers.size()) x = t.tanh_op(x);
    }
    return x;
}

void MlpHead::collect(std::vector<nn::Parameter*>& out) {
    for (auto& l : layers) l.collect(out);
}

PairRerankerModel::PairRerankerModel(Vocabulary vocab, PairRerankerConfig cfg)
    : PairRerankerModel(std::move(vocab), cfg, nullptr) {}

PairRerankerModel::PairRerankerModel(Vocabulary vocab, PairRerankerConfig cfg,
                                     std::unique_ptr<nn::SequenceEncoder> encoder)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)), encoder_(std::move(encoder)) {
    if (cfg_.metrics.empty()) throw ConfigError("pair reranker needs a nonempty metric list");
    if (!encoder_) {
        encoder_ = std::make_unique<nn::TransformerEncoder>(vocab_.size(), cfg_.encoder,
                                                            cfg_.init_seed);
    }
    nn::GaussianInit init(cfg_.init_seed ^ 0x48454144ULL);
    head_ = MlpHead(cfg_.encoder.width, static_cast<int>(cfg_.metrics.size()), cfg_.head_depth,
                    init);
    if (head_.input_width() != 2 * encoder_->width()) {
        throw ConfigError("encoder width " + std::to_string(encoder_->width()) +
                          " does not match the head input width (configured for width " +
                          std::to_string(cfg_.encoder.width) + ")");
    }
}

TruncationLimits PairRerankerModel::effective_limits() const {
    if (cfg_.limits.source_max > 0 && cfg_.limits.cand_max > 0) return cfg_.limits;
    return default_limits(cfg_.encoder.max_positions);
}

PairInput PairRerankerModel::assemble(const std::string& source, const std::string& cand_a,
                                      const std::string& cand_b) const {
    return assemble_pair_sequence(vocab_, source, cand_a, cand_b, effective_limits(),
                                  cfg_.encoder.max_positions);
}

std::pair<Tape::Node*, Tape::Node*> PairRerankerModel::score_nodes(Tape& t,
                                                                   const PairInput& input) {
    Tape::Node* states = encoder_->encode(t, input.ids, input.segments);
    Tape::Node* h_src = t.select_rows(states, {input.source_anchor});
    Tape::Node* h_c1 = t.select_rows(states, {input.cand1_anchor});
    Tape::Node* h_c2 = t.select_rows(states, {input.cand2_anchor});
    Tape::Node* s_i = head_.apply(t, t.concat_cols({h_src, h_c1}));
    Tape::Node* s_j = head_.apply(t, t.concat_cols({h_src, h_c2}));
    return {s_i, s_j};
}

std::pair<ScoreVector, ScoreVector> PairRerankerModel::encode_and_score(const PairInput& input) {
    Tape t;
    auto [si, sj] = score_nodes(t, input);
    return {si->value.w, sj->value.w};
}

std::pair<ScoreVector, ScoreVector> PairRerankerModel::score(const std::string& source,
                                                             const std::string& cand_a,
                                                             const std::string& cand_b) {
    return encode_and_score(assemble(source, cand_a, cand_b));
}

std::vector<nn::Parameter*> PairRerankerModel::parameters() {
    std::vector<nn::Parameter*> out = encoder_->parameters();
    head_.collect(out);
    return out;
}

std::vector<nn::Parameter*> PairRerankerModel::head_parameters() {
    std::vector<nn::Parameter*> out;
    head_.collect(out);
    return out;
}

} // namespace pairrank
