#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pairrank/nn/tape.hpp"

namespace pairrank::nn {

/// Deterministic N(0, stddev) initializer (Box-Muller over mt19937_64), so
/// model init does not depend on libstdc++ distribution internals.
class GaussianInit {
public:
    explicit GaussianInit(uint64_t seed) : rng_(seed) {}
    double next(double stddev);
    void fill(Mat& m, double stddev);

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct LinearLayer {
    Parameter weight;  // in x out
    Parameter bias;    // 1 x out

    LinearLayer() = default;
    LinearLayer(const std::string& name, int in, int out, GaussianInit& init);
    Tape::Node* apply(Tape& t, Tape::Node* x);
    void collect(std::vector<Parameter*>& out);
};

struct LayerNorm {
    Parameter gain;  // 1 x d, init 1
    Parameter bias;  // 1 x d, init 0

    LayerNorm() = default;
    LayerNorm(const std::string& name, int d);
    Tape::Node* apply(Tape& t, Tape::Node* x);
    void collect(std::vector<Parameter*>& out);
};

/// Multi-head attention. Query rows come from x_q, keys/values from x_kv
/// (self-attention passes the same node twice). An optional additive mask
/// (rows(x_q) x rows(x_kv)) is added to the attention logits.
struct AttentionBlock {
    int heads = 1;
    LinearLayer q, k, v, o;

    AttentionBlock() = default;
    AttentionBlock(const std::string& name, int width, int heads, GaussianInit& init);
    Tape::Node* apply(Tape& t, Tape::Node* x_q, Tape::Node* x_kv, const Mat* mask);
    void collect(std::vector<Parameter*>& out);
};

/// Pre-norm transformer encoder layer: x + attn(ln(x)), then x + ffn(ln(x)).
struct TransformerLayer {
    LayerNorm ln1, ln2;
    AttentionBlock attn;
    LinearLayer ff1, ff2;

    TransformerLayer() = default;
    TransformerLayer(const std::string& name, int width, int heads, int ffn_width,
                     GaussianInit& init);
    Tape::Node* apply(Tape& t, Tape::Node* x, const Mat* self_mask);
    void collect(std::vector<Parameter*>& out);
};

/// Decoder layer with causal self-attention and cross-attention to a memory.
struct TransformerDecoderLayer {
    LayerNorm ln1, ln2, ln3;
    AttentionBlock self_attn, cross_attn;
    LinearLayer ff1, ff2;

    TransformerDecoderLayer() = default;
    TransformerDecoderLayer(const std::string& name, int width, int heads, int ffn_width,
                            GaussianInit& init);
    Tape::Node* apply(Tape& t, Tape::Node* x, Tape::Node* memory, const Mat* causal_mask);
    void collect(std::vector<Parameter*>& out);
};

struct EncoderConfig {
    int width = 64;
    int layers = 2;
    int heads = 4;
    int ffn_mult = 4;
    int max_positions = 128;
    bool use_positions = true;
    int segment_kinds = 3;  // source / candidate-1 / candidate-2 type embeddings
};

/// Token-id sequence to per-position hidden states. Swappable so tests can
/// plant fixed representations behind the same scoring path. Segment ids
/// mark which input segment each position belongs to; implementations may
/// ignore them.
class SequenceEncoder {
public:
    virtual ~SequenceEncoder() = default;
    virtual int width() const = 0;
    virtual Tape::Node* encode(Tape& t, const std::vector<int>& ids,
                               const std::vector<int>& segments) = 0;
    Tape::Node* encode(Tape& t, const std::vector<int>& ids) {
        return encode(t, ids, std::vector<int>(ids.size(), 0));
    }
    virtual std::vector<Parameter*> parameters() = 0;
};

class TransformerEncoder final : public SequenceEncoder {
public:
    TransformerEncoder(int vocab_size, EncoderConfig cfg, uint64_t init_seed);

    int width() const override { return cfg_.width; }
    using SequenceEncoder::encode;
    Tape::Node* encode(Tape& t, const std::vector<int>& ids,
                       const std::vector<int>& segments) override;
    std::vector<Parameter*> parameters() override;

    const EncoderConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_size_; }

private:
    EncoderConfig cfg_;
    int vocab_size_ = 0;
    Parameter tok_emb_;  // vocab x width
    Parameter pos_emb_;  // max_positions x width
    Parameter seg_emb_;  // segment_kinds x width
    std::vector<TransformerLayer> layers_;
    LayerNorm final_ln_;
};

Mat causal_mask(int len);

} // namespace pairrank::nn
