#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pairrank/metrics.hpp"
#include "pairrank/pair_encoder.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

/// How per-metric score differences combine into one winner decision:
/// the mean over metrics (default) or a single metric's difference.
struct WinnerRule {
    int metric_index = -1;  // -1 = mean over metrics
};

double aggregate_margin(const ScoreVector& s_a, const ScoreVector& s_b, WinnerRule rule);

struct ComparisonResult {
    int index_a = 0;
    int index_b = 0;
    std::vector<double> confidence;  // per metric, sigmoid(s_a - s_b)
    int winner = 0;

    /// Mean confidence in the slot-a candidate minus 0.5; positive means a.
    double margin() const;
};

/// One comparison: winner is index_a iff the aggregate margin is > 0; an
/// exact tie keeps index_a (the incumbent slot).
ComparisonResult compare(PairScorer& model, const std::string& source, const std::string& cand_a,
                         const std::string& cand_b, int index_a = 0, int index_b = 1,
                         WinnerRule rule = {});

/// Judges compare two pool positions; slot a carries the incumbent.
using PairJudge = std::function<ComparisonResult(const ScoredPool&, int, int)>;

PairJudge make_model_judge(PairScorer& model, WinnerRule rule = {});
/// Reads the pool's stored metric scores instead of a model; orientation
/// independent and transitive, so it serves as the tournament test oracle.
PairJudge make_oracle_judge(const std::vector<Metric>& metrics, WinnerRule rule = {});

struct BubbleResult {
    int selected = 0;  // original pool index
    std::vector<ComparisonResult> trace;
};

/// The single bubble pass over a fixed candidate order: the incumbent meets
/// every later candidate once, m-1 comparisons total.
BubbleResult bubble_select_ordered(const ScoredPool& pool, const std::vector<int>& order,
                                   const PairJudge& judge);

/// Shuffles the candidate order under rng, then runs the ordered pass.
BubbleResult bubble_select(const ScoredPool& pool, const PairJudge& judge, std::mt19937_64& rng);

struct RankedCandidate {
    int index = 0;
    int wins = 0;
    double mean_margin = 0.0;
};

/// All m(m-1)/2 unordered pairs once, in canonical orientation (lower index
/// in slot a); ranking by win count, ties by mean margin, then index.
std::vector<RankedCandidate> round_robin_rank(const ScoredPool& pool, const PairJudge& judge);

struct ConsistencyReport {
    int64_t pairs_evaluated = 0;
    int64_t agreements = 0;
    int64_t skipped_pools = 0;

    double rate() const {
        return pairs_evaluated > 0
                   ? static_cast<double>(agreements) / static_cast<double>(pairs_evaluated)
                   : 0.0;
    }
};

/// Samples candidate pairs per pool and checks whether the judge names the
/// same winner under both slot orderings. Pools with fewer than 2 candidates
/// are skipped and counted.
ConsistencyReport consistency_rate(const std::vector<ScoredPool>& pools, const PairJudge& judge,
                                   int sample_pairs_per_pool, std::mt19937_64& rng);

} // namespace pairrank
