#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pairrank/metrics.hpp"
#include "pairrank/pair_encoder.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

/// One training unit: an ordered candidate pair with per-metric binary
/// labels (z = 1 iff the slot-a candidate's metric score >= slot-b's).
struct PairSample {
    std::string source;
    std::string cand_a;
    std::string cand_b;
    std::vector<int> labels;
    int index_a = 0;
    int index_b = 0;
};

/// symmetric_bce is the corrected two-slot binary cross-entropy, evaluated
/// under both slot orderings. literal is the loss exactly as printed in the
/// source formulation (kept for comparison; it rewards the slot-b score when
/// slot a wins).
enum class PairLossVariant { symmetric_bce, literal };

PairLossVariant pair_loss_variant_from_string(const std::string& s);
std::string pair_loss_variant_name(PairLossVariant v);

struct TrainConfig {
    int k_pairs = 1;
    int epochs = 5;
    int batch_size = 64;
    double max_learning_rate = 1e-5;
    double warmup_ratio = 0.05;
    PairLossVariant loss_variant = PairLossVariant::symmetric_bce;
    double heldout_fraction = 0.05;
    uint64_t seed = 0;
    int64_t step_offset = 0;  // resumed runs continue the step count

    void validate() const;
};

/// Mean of per-metric fractional ranks (rank 1 = best; ties share the
/// average rank). Lower aggregate = better candidate.
std::vector<double> aggregate_quality_ranks(const ScoredPool& pool,
                                            const std::vector<Metric>& metrics);

/// Couples the aggregate-best k candidates with the aggregate-worst k
/// (best-r with worst-r), then shuffles the slot order within each pair.
/// Requires a scored pool with m >= 2k.
std::vector<PairSample> select_training_pairs(const ScoredPool& pool,
                                              const std::vector<Metric>& metrics, int k,
                                              std::mt19937_64& rng);

/// Per-metric two-slot binary cross-entropy counted under both slot
/// orderings, averaged over metrics. At zero logits with one metric this is
/// 4*ln 2.
double pair_loss(const ScoreVector& s_a, const ScoreVector& s_b, const std::vector<int>& labels,
                 PairLossVariant variant = PairLossVariant::symmetric_bce);

nn::Tape::Node* pair_loss_node(nn::Tape& t, nn::Tape::Node* s_a, nn::Tape::Node* s_b,
                               const std::vector<int>& labels,
                               PairLossVariant variant = PairLossVariant::symmetric_bce);

struct TrainLogEntry {
    int64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::optional<double> heldout_pair_acc;
};

struct TrainResult {
    std::vector<TrainLogEntry> log;
    int64_t steps = 0;
    double best_heldout_acc = -1.0;
    double final_loss = 0.0;
};

void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log);

/// Pairwise-loss minimization with linear warmup + decay, epoch-wise slot
/// reshuffling, and best-checkpoint selection by held-out pairwise accuracy.
/// Fully reproducible under cfg.seed. When checkpoint_path is empty no
/// checkpoint is written.
TrainResult train_pair_reranker(PairRerankerModel& model, const std::vector<ScoredPool>& pools,
                                const std::vector<Metric>& metrics, const TrainConfig& cfg,
                                const std::string& checkpoint_path = "",
                                const std::string& log_path = "");

/// Fraction of (sample, metric) pairs where sign(s_a - s_b) matches the
/// label over the given pools, with a fixed slot orientation.
double pairwise_accuracy(PairRerankerModel& model, const std::vector<ScoredPool>& pools,
                         const std::vector<Metric>& metrics, int k_pairs, uint64_t seed);

/// Compares the analytic pair_loss gradient w.r.t. the head parameters
/// against central finite differences. Returns the max relative error.
double gradient_check(PairRerankerModel& model, const PairSample& sample,
                      PairLossVariant variant = PairLossVariant::symmetric_bce,
                      double step = 1e-4);

} // namespace pairrank
