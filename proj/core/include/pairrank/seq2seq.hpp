#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pairrank/decoding.hpp"
#include "pairrank/generator.hpp"
#include "pairrank/nn/layers.hpp"
#include "pairrank/nn/optim.hpp"
#include "pairrank/vocab.hpp"

namespace pairrank {

struct Seq2SeqConfig {
    nn::EncoderConfig arch;  // width/layers/heads for both encoder and decoder
    size_t vocab_cap = 4000;
    int max_source_len = 48;
    int max_target_len = 32;
    int epochs = 8;
    double learning_rate = 3e-3;
    int batch_size = 8;
};

/// A small trainable encoder-decoder LM over the word vocabulary. Large
/// pretrained checkpoints are out of scope here; this model exists so the
/// whole generate-rerank pipeline can run end to end on one desktop.
class TinySeq2Seq final : public ConditionalLM {
public:
    TinySeq2Seq(Vocabulary vocab, Seq2SeqConfig cfg, uint64_t init_seed);

    int vocab_size() const override { return vocab_.size(); }
    int bos_id() const override { return Vocabulary::kBos; }
    int eos_id() const override { return Vocabulary::kEos; }
    std::vector<double> next_log_probs(const std::vector<int>& source_ids,
                                       const std::vector<int>& prefix) const override;

    /// Teacher-forced MLE training; deterministic under the given seed.
    /// Returns the mean loss of the final epoch.
    double train(const std::vector<Example>& examples, uint64_t shuffle_seed);

    const Vocabulary& vocab() const { return vocab_; }
    const Seq2SeqConfig& config() const { return cfg_; }
    std::vector<int> encode_source(const std::string& text) const;

private:
    nn::Tape::Node* decoder_logits(nn::Tape& t, nn::Tape::Node* memory,
                                   const std::vector<int>& prefix);
    std::vector<nn::Parameter*> parameters();

    Vocabulary vocab_;
    Seq2SeqConfig cfg_;
    nn::TransformerEncoder encoder_;
    nn::Parameter dec_tok_, dec_pos_;
    std::vector<nn::TransformerDecoderLayer> dec_layers_;
    nn::LayerNorm dec_ln_;
    nn::LinearLayer out_proj_;

    mutable std::vector<int> cached_src_;
    mutable nn::Mat cached_memory_;
};

/// TextGenerator adapter dispatching the four decoding methods over a
/// TinySeq2Seq model.
class TinyGenerator final : public TextGenerator {
public:
    explicit TinyGenerator(std::shared_ptr<TinySeq2Seq> model) : model_(std::move(model)) {}

    std::string name() const override { return "tiny"; }
    std::vector<std::string> generate(const std::string& source,
                                      const DecodingConfig& config) const override;

private:
    std::shared_ptr<TinySeq2Seq> model_;
};

} // namespace pairrank
