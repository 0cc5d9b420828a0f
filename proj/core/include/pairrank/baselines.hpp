#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pairrank/metrics.hpp"
#include "pairrank/nn/layers.hpp"
#include "pairrank/pair_encoder.hpp"
#include "pairrank/pair_trainer.hpp"
#include "pairrank/types.hpp"
#include "pairrank/vocab.hpp"

namespace pairrank {

enum class PointwiseVariant { simcls, summareranker };

std::string pointwise_variant_name(PointwiseVariant v);
PointwiseVariant pointwise_variant_from_string(const std::string& s);

struct PointwiseConfig {
    PointwiseVariant variant = PointwiseVariant::simcls;
    nn::EncoderConfig encoder;
    TruncationLimits limits;  // summareranker cross-encoder truncation
    int head_depth = 5;
    std::vector<std::string> metrics;
    double lambda = 0.01;  // SimCLS margin scale
    uint64_t init_seed = 0;
};

/// Pointwise baseline scorers sharing the encoder family and truncation
/// rules with the pairwise model. SimCLS scores by cosine between the
/// first-token states of source and candidate; SummaReranker cross-encodes
/// (source, candidate) and emits a per-metric probability through a shared
/// head (no mixture-of-experts).
class PointwiseModel {
public:
    PointwiseModel(Vocabulary vocab, PointwiseConfig cfg);
    PointwiseModel(Vocabulary vocab, PointwiseConfig cfg,
                   std::unique_ptr<nn::SequenceEncoder> encoder);

    PointwiseVariant variant() const { return cfg_.variant; }
    const PointwiseConfig& config() const { return cfg_; }
    const Vocabulary& vocabulary() const { return vocab_; }

    /// SimCLS representation: hidden state of the first token of
    /// "<s> text </s>" at the last layer.
    nn::Tape::Node* first_token_state(nn::Tape& t, const std::string& text);
    std::vector<double> encode_text(const std::string& text);

    /// SummaReranker logits (1 x |metrics|) for one (source, candidate).
    nn::Tape::Node* cross_logits(nn::Tape& t, const std::string& source,
                                 const std::string& candidate);
    std::vector<double> candidate_probs(const std::string& source, const std::string& candidate);

    /// Scalar selection score: cosine for simcls, mean per-metric
    /// probability for summareranker.
    double selection_score(const std::string& source, const std::string& candidate);

    std::vector<nn::Parameter*> parameters();
    nn::SequenceEncoder& encoder() { return *encoder_; }

private:
    Vocabulary vocab_;
    PointwiseConfig cfg_;
    std::unique_ptr<nn::SequenceEncoder> encoder_;
    MlpHead head_;  // summareranker only
};

/// Cosine similarity of the two first-token representations.
/// Throws on a zero-norm embedding.
double simcls_score(PointwiseModel& model, const std::string& source,
                    const std::string& candidate);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Marginal ranking loss over predicted scores pre-sorted by descending
/// metric quality: sum_j max(0, s_j - s_ref) +
/// sum_i sum_{j>i} max(0, s_j - s_i + (j-i)*lambda).
/// quality_sorted is the metric-quality sequence used to verify the sort.
double simcls_loss(const std::vector<double>& pred_sorted,
                   const std::vector<double>& quality_sorted, double ref_score, double lambda);

/// Binary-classification loss per metric: -log(p of the metric's best
/// candidate) - sum log(1 - p of the others), averaged over metrics.
/// probs is candidates x metrics; best_index has one entry per metric.
/// Probabilities at exactly 0 or 1 are clamped at 1e-7 with a warning.
double summareranker_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& best_index);
/// Single-metric convenience overload.
double summareranker_loss(const std::vector<double>& probs, int best_index);

/// Argmax of the model's selection score over the pool; ties break to the
/// lowest index.
int rank_pointwise(PointwiseModel& model, const ScoredPool& pool);

/// Graph-level training losses (used by train_pointwise and the gradient
/// verification suites).
nn::Tape::Node* simcls_pool_loss(nn::Tape& t, PointwiseModel& model, const ScoredPool& pool,
                                 const std::vector<Metric>& metrics, double lambda);
nn::Tape::Node* summareranker_pool_loss(nn::Tape& t, PointwiseModel& model,
                                        const ScoredPool& pool,
                                        const std::vector<Metric>& metrics);

/// Trains either baseline with the shared budget/schedule. Model selection
/// uses held-out loss. Reproducible under cfg.seed.
TrainResult train_pointwise(PointwiseModel& model, const std::vector<ScoredPool>& pools,
                            const std::vector<Metric>& metrics, const TrainConfig& cfg,
                            const std::string& checkpoint_path = "",
                            const std::string& log_path = "");

} // namespace pairrank
