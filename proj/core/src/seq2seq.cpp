#include "pairrank/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pairrank/errors.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

using nn::Mat;
using nn::Tape;

TinySeq2Seq::TinySeq2Seq(Vocabulary vocab, Seq2SeqConfig cfg, uint64_t init_seed)
    : vocab_(std::move(vocab)),
      cfg_(cfg),
      encoder_(vocab_.size(),
               [&] {
                   auto arch = cfg.arch;
                   arch.max_positions = std::max(arch.max_positions, cfg.max_source_len + 2);
                   return arch;
               }(),
               mix_seed(init_seed, 1)) {
    nn::GaussianInit init(mix_seed(init_seed, 2));
    dec_tok_ = nn::Parameter("dec.tok", Mat(vocab_.size(), cfg_.arch.width));
    init.fill(dec_tok_.value, 0.02);
    dec_pos_ = nn::Parameter("dec.pos", Mat(cfg_.max_target_len + 1, cfg_.arch.width));
    init.fill(dec_pos_.value, 0.02);
    for (int l = 0; l < cfg_.arch.layers; ++l) {
        dec_layers_.emplace_back("dec.l" + std::to_string(l), cfg_.arch.width, cfg_.arch.heads,
                                 cfg_.arch.width * cfg_.arch.ffn_mult, init);
    }
    dec_ln_ = nn::LayerNorm("dec.ln", cfg_.arch.width);
    out_proj_ = nn::LinearLayer("dec.out", cfg_.arch.width, vocab_.size(), init);
}

std::vector<int> TinySeq2Seq::encode_source(const std::string& text) const {
    std::vector<int> ids = vocab_.encode(text);
    const size_t keep = static_cast<size_t>(std::max(1, cfg_.max_source_len - 2));
    if (ids.size() > keep) ids.resize(keep);
    ids.insert(ids.begin(), Vocabulary::kBos);
    ids.push_back(Vocabulary::kEos);
    return ids;
}

Tape::Node* TinySeq2Seq::decoder_logits(Tape& t, Tape::Node* memory,
                                        const std::vector<int>& prefix) {
    std::vector<int> pos(prefix.size());
    for (size_t i = 0; i < prefix.size(); ++i) pos[i] = static_cast<int>(i);
    Tape::Node* x = t.add(t.embedding(dec_tok_, prefix), t.embedding(dec_pos_, pos));
    const Mat mask = nn::causal_mask(static_cast<int>(prefix.size()));
    for (auto& layer : dec_layers_) x = layer.apply(t, x, memory, &mask);
    return out_proj_.apply(t, dec_ln_.apply(t, x));
}

std::vector<double> TinySeq2Seq::next_log_probs(const std::vector<int>& source_ids,
                                                const std::vector<int>& prefix) const {
    auto* self = const_cast<TinySeq2Seq*>(this);
    if (source_ids != cached_src_) {
        Tape t;
        Tape::Node* mem = self->encoder_.encode(t, source_ids);
        cached_memory_ = mem->value;
        cached_src_ = source_ids;
    }
    std::vector<int> clipped = prefix;
    if (static_cast<int>(clipped.size()) > cfg_.max_target_len + 1) {
        clipped.erase(clipped.begin(),
                      clipped.end() - (cfg_.max_target_len + 1));
    }
    Tape t;
    Tape::Node* memory = t.constant(cached_memory_);
    Tape::Node* logits = self->decoder_logits(t, memory, clipped);

    const int last = logits->value.rows - 1;
    std::vector<double> out(static_cast<size_t>(logits->value.cols));
    double mx = logits->value.at(last, 0);
    for (int c = 1; c < logits->value.cols; ++c) mx = std::max(mx, logits->value.at(last, c));
    double lse = 0.0;
    for (int c = 0; c < logits->value.cols; ++c) lse += std::exp(logits->value.at(last, c) - mx);
    lse = mx + std::log(lse);
    for (int c = 0; c < logits->value.cols; ++c) out[c] = logits->value.at(last, c) - lse;
    return out;
}

std::vector<nn::Parameter*> TinySeq2Seq::parameters() {
    std::vector<nn::Parameter*> out = encoder_.parameters();
    out.push_back(&dec_tok_);
    out.push_back(&dec_pos_);
    for (auto& l : dec_layers_) l.collect(out);
    dec_ln_.collect(out);
    out_proj_.collect(out);
    return out;
}

double TinySeq2Seq::train(const std::vector<Example>& examples, uint64_t shuffle_seed) {
    if (examples.empty()) return 0.0;
    struct Sample {
        std::vector<int> src;
        std::vector<int> dec_in;   // bos + target[:-1]
        std::vector<int> labels;   // target + eos
    };
    std::vector<Sample> samples;
    for (const auto& ex : examples) {
        if (ex.target.empty()) continue;
        Sample s;
        s.src = encode_source(ex.source);
        std::vector<int> tgt = vocab_.encode(ex.target);
        if (static_cast<int>(tgt.size()) > cfg_.max_target_len - 1) {
            tgt.resize(static_cast<size_t>(cfg_.max_target_len - 1));
        }
        s.labels = tgt;
        s.labels.push_back(Vocabulary::kEos);
        s.dec_in.push_back(Vocabulary::kBos);
        s.dec_in.insert(s.dec_in.end(), tgt.begin(), tgt.end());
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw DataError("seq2seq training: every example has an empty target");

    nn::AdamOptimizer opt(parameters());
    std::mt19937_64 rng(mix_seed(shuffle_seed, 0x5355ULL));
    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    double epoch_loss = 0.0;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
        epoch_loss = 0.0;
        size_t done = 0;
        while (done < order.size()) {
            const size_t batch_end = std::min(done + static_cast<size_t>(cfg_.batch_size),
                                              order.size());
            opt.zero_grad();
            double batch_loss = 0.0;
            const size_t batch_n = batch_end - done;
            for (size_t b = done; b < batch_end; ++b) {
                const Sample& s = samples[order[b]];
                Tape t;
                Tape::Node* memory = encoder_.encode(t, s.src);
                Tape::Node* logits = decoder_logits(t, memory, s.dec_in);
                Tape::Node* probs = t.softmax_rows(logits);
                Tape::Node* picked = t.pick_per_row(probs, s.labels);
                Tape::Node* loss = t.scale(t.mean_all(t.log_op(picked)), -1.0);
                t.backward(loss);
                batch_loss += loss->value.at(0, 0);
            }
            // Mean-of-batch gradients.
            for (nn::Parameter* p : parameters()) {
                for (auto& g : p->grad.w) g /= static_cast<double>(batch_n);
            }
            opt.step(cfg_.learning_rate);
            epoch_loss += batch_loss;
            done = batch_end;
        }
        epoch_loss /= static_cast<double>(samples.size());
    }
    cached_src_.clear();  // parameters changed; drop the inference cache
    return epoch_loss;
}

std::vector<std::string> TinyGenerator::generate(const std::string& source,
                                                 const DecodingConfig& config) const {
    config.validate();
    const std::vector<int> src = model_->encode_source(source);
    const int max_len = std::min(config.max_len, model_->config().max_target_len);

    std::vector<DecodedSeq> decoded;
    switch (config.method) {
        case DecodingMethod::beam:
            decoded = decode_beam(*model_, src, config.effective_beam_width(),
                                  config.num_candidates, max_len);
            break;
        case DecodingMethod::diverse_beam:
            decoded = decode_diverse_beam(*model_, src, config.effective_beam_width(),
                                          config.effective_groups(), config.diversity_penalty,
                                          config.num_candidates, max_len);
            break;
        case DecodingMethod::top_k: {
            std::mt19937_64 rng(mix_seed(static_cast<uint64_t>(*config.seed),
                                         hash_text(source) ^ 0x4bULL));
            decoded = decode_top_k(*model_, src, config.k, config.temperature,
                                   config.num_candidates, max_len, rng);
            break;
        }
        case DecodingMethod::top_p: {
            std::mt19937_64 rng(mix_seed(static_cast<uint64_t>(*config.seed),
                                         hash_text(source) ^ 0x70ULL));
            decoded = decode_top_p(*model_, src, config.p, config.temperature,
                                   config.num_candidates, max_len, rng);
            break;
        }
    }

    std::vector<std::string> out;
    out.reserve(config.num_candidates);
    for (const auto& d : decoded) {
        std::ostringstream os;
        for (size_t i = 0; i < d.ids.size(); ++i) {
            if (i) os << ' ';
            os << model_->vocab().token(d.ids[i]);
        }
        std::string text = os.str();
        out.push_back(text.empty() ? "<unk>" : std::move(text));
    }
    // Small vocabularies can leave beam search with fewer than the requested
    // hypotheses; repeat the last one to honor the count contract.
    while (static_cast<int>(out.size()) < config.num_candidates) {
        out.push_back(out.empty() ? "<unk>" : out.back());
    }
    return out;
}

} // namespace pairrank
