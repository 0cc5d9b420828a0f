#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pairrank {

/// Next-token distribution interface the decoding algorithms run against.
/// Implementations must be deterministic functions of (source, prefix).
class ConditionalLM {
public:
    virtual ~ConditionalLM() = default;
    virtual int vocab_size() const = 0;
    virtual int bos_id() const = 0;
    virtual int eos_id() const = 0;
    /// log p(. | prefix, source); prefix begins with BOS.
    virtual std::vector<double> next_log_probs(const std::vector<int>& source_ids,
                                               const std::vector<int>& prefix) const = 0;
};

struct DecodedSeq {
    std::vector<int> ids;  // without BOS/EOS
    double log_prob = 0.0;
};

std::vector<DecodedSeq> decode_beam(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                    int beam_width, int num_return, int max_len);

/// Grouped diverse beam search: groups expand in order within each step and
/// tokens already emitted by earlier groups at that step are penalized.
std::vector<DecodedSeq> decode_diverse_beam(const ConditionalLM& lm,
                                            const std::vector<int>& source_ids, int beam_width,
                                            int groups, double diversity_penalty, int num_return,
                                            int max_len);

std::vector<DecodedSeq> decode_top_k(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                     int k, double temperature, int num_samples, int max_len,
                                     std::mt19937_64& rng);

std::vector<DecodedSeq> decode_top_p(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                     double p, double temperature, int num_samples, int max_len,
                                     std::mt19937_64& rng);

} // namespace pairrank
