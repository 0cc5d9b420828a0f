#include "pairrank/nn/layers.hpp"

#include <cmath>

#include "pairrank/errors.hpp"

namespace pairrank::nn {

double GaussianInit::next(double stddev) {
    if (has_spare_) {
        has_spare_ = false;
        return spare_ * stddev;
    }
    // Box-Muller on uniforms in (0, 1].
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) / 9007199254740993.0;
    const double u2 = (static_cast<double>(rng_() >> 11) + 1.0) / 9007199254740993.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2) * stddev;
}

void GaussianInit::fill(Mat& m, double stddev) {
    for (auto& v : m.w) v = next(stddev);
}

LinearLayer::LinearLayer(const std::string& name, int in, int out, GaussianInit& init)
    : weight(name + ".w", Mat(in, out)), bias(name + ".b", Mat(1, out)) {
    init.fill(weight.value, std::sqrt(2.0 / static_cast<double>(in + out)));
}

Tape::Node* LinearLayer::apply(Tape& t, Tape::Node* x) {
    return t.add_row(t.matmul(x, t.param(weight)), t.param(bias));
}

void LinearLayer::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, int d)
    : gain(name + ".g", Mat(1, d, 1.0)), bias(name + ".b", Mat(1, d, 0.0)) {}

Tape::Node* LayerNorm::apply(Tape& t, Tape::Node* x) {
    return t.layer_norm_rows(x, t.param(gain), t.param(bias));
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
}

AttentionBlock::AttentionBlock(const std::string& name, int width, int heads_, GaussianInit& init)
    : heads(heads_),
      q(name + ".q", width, width, init),
      k(name + ".k", width, width, init),
      v(name + ".v", width, width, init),
      o(name + ".o", width, width, init) {
    if (width % heads_ != 0) throw ConfigError("attention width must be divisible by heads");
}

Tape::Node* AttentionBlock::apply(Tape& t, Tape::Node* x_q, Tape::Node* x_kv, const Mat* mask) {
    const int width = q.weight.value.rows;
    const int dk = width / heads;
    Tape::Node* Q = q.apply(t, x_q);
    Tape::Node* K = k.apply(t, x_kv);
    Tape::Node* V = v.apply(t, x_kv);

    std::vector<Tape::Node*> head_outs;
    head_outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tape::Node* Qh = t.slice_cols(Q, h * dk, dk);
        Tape::Node* Kh = t.slice_cols(K, h * dk, dk);
        Tape::Node* Vh = t.slice_cols(V, h * dk, dk);
        Tape::Node* logits = t.scale(t.matmul(Qh, t.transpose(Kh)), 1.0 / std::sqrt(dk));
        if (mask) logits = t.add(logits, t.constant(*mask));
        Tape::Node* weights = t.softmax_rows(logits);
        head_outs.push_back(t.matmul(weights, Vh));
    }
    return o.apply(t, t.concat_cols(head_outs));
}

void AttentionBlock::collect(std::vector<Parameter*>& out) {
    q.collect(out);
    k.collect(out);
    v.collect(out);
    o.collect(out);
}

TransformerLayer::TransformerLayer(const std::string& name, int width, int heads, int ffn_width,
                                   GaussianInit& init)
    : ln1(name + ".ln1", width),
      ln2(name + ".ln2", width),
      attn(name + ".attn", width, heads, init),
      ff1(name + ".ff1", width, ffn_width, init),
      ff2(name + ".ff2", ffn_width, width, init) {}

Tape::Node* TransformerLayer::apply(Tape& t, Tape::Node* x, const Mat* self_mask) {
    Tape::Node* a = ln1.apply(t, x);
    x = t.add(x, attn.apply(t, a, a, self_mask));
    Tape::Node* f = t.relu(ff1.apply(t, ln2.apply(t, x)));
    return t.add(x, ff2.apply(t, f));
}

void TransformerLayer::collect(std::vector<Parameter*>& out) {
    ln1.collect(out);
    ln2.collect(out);
    attn.collect(out);
    ff1.collect(out);
    ff2.collect(out);
}

TransformerDecoderLayer::TransformerDecoderLayer(const std::string& name, int width, int heads,
                                                 int ffn_width, GaussianInit& init)
    : ln1(name + ".ln1", width),
      ln2(name + ".ln2", width),
      ln3(name + ".ln3", width),
      self_attn(name + ".self", width, heads, init),
      cross_attn(name + ".cross", width, heads, init),
      ff1(name + ".ff1", width, ffn_width, init),
      ff2(name + ".ff2", ffn_width, width, init) {}

Tape::Node* TransformerDecoderLayer::apply(Tape& t, Tape::Node* x, Tape::Node* memory,
                                           const Mat* causal) {
    Tape::Node* a = ln1.apply(t, x);
    x = t.add(x, self_attn.apply(t, a, a, causal));
    Tape::Node* c = ln2.apply(t, x);
    x = t.add(x, cross_attn.apply(t, c, memory, nullptr));
    Tape::Node* f = t.relu(ff1.apply(t, ln3.apply(t, x)));
    return t.add(x, ff2.apply(t, f));
}

void TransformerDecoderLayer::collect(std::vector<Parameter*>& out) {
    ln1.collect(out);
    ln2.collect(out);
    ln3.collect(out);
    self_attn.collect(out);
    cross_attn.collect(out);
    ff1.collect(out);
    ff2.collect(out);
}

TransformerEncoder::TransformerEncoder(int vocab_size, EncoderConfig cfg, uint64_t init_seed)
    : cfg_(cfg), vocab_size_(vocab_size) {
    GaussianInit init(init_seed);
    tok_emb_ = Parameter("enc.tok", Mat(vocab_size, cfg.width));
    init.fill(tok_emb_.value, 0.02);
    pos_emb_ = Parameter("enc.pos", Mat(cfg.max_positions, cfg.width));
    init.fill(pos_emb_.value, 0.02);
    seg_emb_ = Parameter("enc.seg", Mat(std::max(1, cfg.segment_kinds), cfg.width));
    init.fill(seg_emb_.value, 0.02);
    for (int l = 0; l < cfg.layers; ++l) {
        layers_.emplace_back("enc.l" + std::to_string(l), cfg.width, cfg.heads,
                             cfg.width * cfg.ffn_mult, init);
    }
    final_ln_ = LayerNorm("enc.ln", cfg.width);
}

Tape::Node* TransformerEncoder::encode(Tape& t, const std::vector<int>& ids,
                                       const std::vector<int>& segments) {
    if (ids.empty()) throw RuntimeFailure("encoder: empty id sequence");
    if (static_cast<int>(ids.size()) > cfg_.max_positions) {
        throw RuntimeFailure("encoder: sequence length " + std::to_string(ids.size()) +
                             " exceeds capacity " + std::to_string(cfg_.max_positions));
    }
    if (segments.size() != ids.size()) {
        throw RuntimeFailure("encoder: one segment id per token required");
    }
    Tape::Node* x = t.embedding(tok_emb_, ids);
    if (cfg_.use_positions) {
        std::vector<int> pos(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) pos[i] = static_cast<int>(i);
        x = t.add(x, t.embedding(pos_emb_, pos));
    }
    if (cfg_.segment_kinds > 0) {
        x = t.add(x, t.embedding(seg_emb_, segments));
    }
    for (auto& layer : layers_) x = layer.apply(t, x, nullptr);
    return final_ln_.apply(t, x);
}

std::vector<Parameter*> TransformerEncoder::parameters() {
    std::vector<Parameter*> out{&tok_emb_, &pos_emb_, &seg_emb_};
    for (auto& l : layers_) l.collect(out);
    final_ln_.collect(out);
    return out;
}

Mat causal_mask(int len) {
    Mat m(len, len, 0.0);
    for (int r = 0; r < len; ++r) {
        for (int c = r + 1; c < len; ++c) m.at(r, c) = -1e30;
    }
    return m;
}

} // namespace pairrank::nn
