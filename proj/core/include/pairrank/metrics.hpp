#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

enum class Metric { rouge1, rouge2, rougeL, bleu, cider };

const std::vector<Metric>& all_metrics();
std::string metric_name(Metric m);
Metric metric_from_string(const std::string& name);
std::vector<Metric> parse_metric_list(const std::vector<std::string>& names);
std::vector<std::string> metric_names(const std::vector<Metric>& metrics);

/// N-gram overlap F1 (n in {1,2}). Returns 0 when either side has no n-grams.
double rouge_n(const std::string& candidate, const std::string& reference, int n);

/// Longest-common-subsequence F1 over token sequences.
double rouge_l(const std::string& candidate, const std::string& reference);

/// Sentence BLEU: geometric mean of clipped n-gram precisions (orders
/// 1..max_order) times the brevity penalty. Zero counts at orders >= 2 are
/// add-one smoothed; order 1 is left unsmoothed so disjoint texts score 0.
double bleu(const std::string& candidate, const std::vector<std::string>& references,
            int max_order = 4);

/// Unsmoothed corpus BLEU over (candidate, references) pairs, for
/// corpus-level report footers.
double corpus_bleu(const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs,
                   int max_order = 4);

/// CIDEr is corpus-relative: the IDF table comes from the references of the
/// evaluated split. Score is the TF-IDF n-gram cosine averaged over orders
/// 1..4 and over references, in [0, 1].
class CiderScorer {
public:
    explicit CiderScorer(const std::vector<std::vector<std::string>>& reference_sets);

    double score(const std::string& candidate, const std::vector<std::string>& references) const;
    size_t corpus_size() const { return corpus_size_; }

    static constexpr int kMaxOrder = 4;

private:
    std::unordered_map<std::string, double> idf_;
    double log_corpus_size_ = 0.0;
    size_t corpus_size_ = 0;
};

/// Per-candidate CIDEr for a whole evaluation set, with the IDF corpus
/// built from the given reference sets.
std::vector<double> cider(const std::vector<std::pair<std::string, std::vector<std::string>>>& pool);

/// Fills every candidate's score map for every requested metric. CIDEr uses
/// the targets of the given pool collection as its IDF corpus. Throws
/// DataError on transfer-mode pools (no reference to score against).
void score_pools(std::vector<ScoredPool>& pools, const std::vector<Metric>& metrics);

/// Single-pool variant; for CIDEr the pool is its own (degenerate) corpus.
void score_pool(ScoredPool& pool, const std::vector<Metric>& metrics);

/// Index of the highest-scoring candidate under one metric; ties break to
/// the lowest index. Throws DataError when any candidate lacks the metric.
int oracle_select(const ScoredPool& pool, Metric metric);

/// Percent improvement of new_value over base_value: 100 * (new - base) / base.
double gain(double new_value, double base_value);

} // namespace pairrank
