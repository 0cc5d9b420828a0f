#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pairrank/nn/layers.hpp"
#include "pairrank/vocab.hpp"

namespace pairrank {

using ScoreVector = std::vector<double>;

struct TruncationLimits {
    int source_max = 0;  // 0 derives defaults from the encoder capacity
    int cand_max = 0;
};

/// Head-keeping defaults: the source gets half of the capacity left after
/// the framing tokens, each candidate a quarter.
TruncationLimits default_limits(int capacity);

/// The assembled joint sequence. Layout:
///   <s> <source> x </s> <candidate1> c_i </s> <candidate2> c_j </s>
/// with each segment truncated to its limit and the three special-token
/// anchor positions recorded.
struct PairInput {
    std::vector<int> ids;
    std::vector<int> segments;  // 0 = source framing, 1 = candidate 1, 2 = candidate 2
    int source_anchor = 0;
    int cand1_anchor = 0;
    int cand2_anchor = 0;
    bool truncated = false;
};

PairInput assemble_pair_sequence(const Vocabulary& vocab, const std::string& source,
                                 const std::string& cand1, const std::string& cand2,
                                 TruncationLimits limits, int capacity);

/// Per-metric confidence that the first candidate is better: sigmoid of the
/// elementwise score difference.
std::vector<double> confidence(const ScoreVector& s_i, const ScoreVector& s_j);

/// The scoring head: a 5-layer perceptron with tanh activations between
/// layers, input 2 x encoder width, hidden layers of encoder width, output
/// one score per metric. One instance serves both candidate slots, so the
/// weights are shared by construction.
struct MlpHead {
    std::vector<nn::LinearLayer> layers;

    MlpHead() = default;
    MlpHead(int encoder_width, int metric_count, int depth, nn::GaussianInit& init);
    nn::Tape::Node* apply(nn::Tape& t, nn::Tape::Node* x);
    void collect(std::vector<nn::Parameter*>& out);
    int input_width() const { return layers.empty() ? 0 : layers.front().weight.value.rows; }
    int output_width() const { return layers.empty() ? 0 : layers.back().weight.value.cols; }
};

/// Text-level pairwise scoring surface used by inference and the judges.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual int metric_count() const = 0;
    virtual std::pair<ScoreVector, ScoreVector> score(const std::string& source,
                                                      const std::string& cand_a,
                                                      const std::string& cand_b) = 0;
};

struct PairRerankerConfig {
    nn::EncoderConfig encoder;
    TruncationLimits limits;  // zeros mean default_limits(encoder.max_positions)
    int head_depth = 5;
    std::vector<std::string> metrics;
    uint64_t init_seed = 0;
};

class PairRerankerModel final : public PairScorer {
public:
    PairRerankerModel(Vocabulary vocab, PairRerankerConfig cfg);
    /// Test seam: run the standard assembly/extraction/head path over a
    /// custom encoder implementation.
    PairRerankerModel(Vocabulary vocab, PairRerankerConfig cfg,
                      std::unique_ptr<nn::SequenceEncoder> encoder);

    int metric_count() const override { return static_cast<int>(cfg_.metrics.size()); }
    const std::vector<std::string>& metrics() const { return cfg_.metrics; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const PairRerankerConfig& config() const { return cfg_; }
    TruncationLimits effective_limits() const;
    int capacity() const { return cfg_.encoder.max_positions; }

    PairInput assemble(const std::string& source, const std::string& cand_a,
                       const std::string& cand_b) const;

    /// Graph-level scoring: anchor states are read at the recorded positions
    /// and the shared head maps concat(h(<source>), h(<candidateK>)) to the
    /// per-metric scores.
    std::pair<nn::Tape::Node*, nn::Tape::Node*> score_nodes(nn::Tape& t, const PairInput& input);

    /// Value-level scoring of an assembled input.
    std::pair<ScoreVector, ScoreVector> encode_and_score(const PairInput& input);

    std::pair<ScoreVector, ScoreVector> score(const std::string& source,
                                              const std::string& cand_a,
                                              const std::string& cand_b) override;

    std::vector<nn::Parameter*> parameters();
    std::vector<nn::Parameter*> head_parameters();
    nn::SequenceEncoder& encoder() { return *encoder_; }
    MlpHead& head() { return head_; }

private:
    Vocabulary vocab_;
    PairRerankerConfig cfg_;
    std::unique_ptr<nn::SequenceEncoder> encoder_;
    MlpHead head_;
};

} // namespace pairrank
