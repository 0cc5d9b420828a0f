#include "pairrank/rank_inference.hpp"

#include <algorithm>
#include <cmath>

#include "pairrank/errors.hpp"
#include "pairrank/nn/tape.hpp"

namespace pairrank {

double aggregate_margin(const ScoreVector& s_a, const ScoreVector& s_b, WinnerRule rule) {
    if (s_a.size() != s_b.size() || s_a.empty()) {
        throw RuntimeFailure("aggregate_margin: bad score vectors");
    }
    if (rule.metric_index >= 0) {
        if (rule.metric_index >= static_cast<int>(s_a.size())) {
            throw ConfigError("winner rule metric index out of range");
        }
        return s_a[rule.metric_index] - s_b[rule.metric_index];
    }
    double sum = 0.0;
    for (size_t m = 0; m < s_a.size(); ++m) sum += s_a[m] - s_b[m];
    return sum / static_cast<double>(s_a.size());
}

double ComparisonResult::margin() const {
    double sum = 0.0;
    for (double c : confidence) sum += c;
    return sum / static_cast<double>(confidence.size()) - 0.5;
}

namespace {

ComparisonResult result_from_scores(const ScoreVector& s_a, const ScoreVector& s_b, int index_a,
                                    int index_b, WinnerRule rule) {
    ComparisonResult r;
    r.index_a = index_a;
    r.index_b = index_b;
    r.confidence = confidence(s_a, s_b);
    const double margin = aggregate_margin(s_a, s_b, rule);
    r.winner = margin < 0.0 ? index_b : index_a;  // exact tie keeps the incumbent slot
    return r;
}

} // namespace

ComparisonResult compare(PairScorer& model, const std::string& source, const std::string& cand_a,
                         const std::string& cand_b, int index_a, int index_b, WinnerRule rule) {
    if (cand_a.empty() || cand_b.empty()) throw DataError("compare: empty candidate text");
    auto [s_a, s_b] = model.score(source, cand_a, cand_b);
    return result_from_scores(s_a, s_b, index_a, index_b, rule);
}

PairJudge make_model_judge(PairScorer& model, WinnerRule rule) {
    return [&model, rule](const ScoredPool& pool, int a, int b) {
        return compare(model, pool.source, pool.candidates.at(a).text,
                       pool.candidates.at(b).text, a, b, rule);
    };
}

PairJudge make_oracle_judge(const std::vector<Metric>& metrics, WinnerRule rule) {
    return [metrics, rule](const ScoredPool& pool, int a, int b) {
        ScoreVector s_a, s_b;
        for (Metric m : metrics) {
            const std::string name = metric_name(m);
            auto ia = pool.candidates.at(a).scores.find(name);
            auto ib = pool.candidates.at(b).scores.find(name);
            if (ia == pool.candidates.at(a).scores.end() ||
                ib == pool.candidates.at(b).scores.end()) {
                throw DataError("oracle judge: pool \"" + pool.example_id +
                                "\" not scored for \"" + name + "\"");
            }
            s_a.push_back(ia->second);
            s_b.push_back(ib->second);
        }
        return result_from_scores(s_a, s_b, a, b, rule);
    };
}

BubbleResult bubble_select_ordered(const ScoredPool& pool, const std::vector<int>& order,
                                   const PairJudge& judge) {
    if (pool.candidates.empty()) throw DataError("bubble_select: empty pool");
    if (order.size() != pool.candidates.size()) {
        throw RuntimeFailure("bubble_select: order must cover the pool");
    }
    BubbleResult result;
    int incumbent = order.front();
    for (size_t i = 1; i < order.size(); ++i) {
        ComparisonResult r = judge(pool, incumbent, order[i]);
        incumbent = r.winner;
        result.trace.push_back(std::move(r));
    }
    result.selected = incumbent;
    return result;
}

BubbleResult bubble_select(const ScoredPool& pool, const PairJudge& judge, std::mt19937_64& rng) {
    if (pool.candidates.empty()) throw DataError("bubble_select: empty pool");
    std::vector<int> order(pool.candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    return bubble_select_ordered(pool, order, judge);
}

std::vector<RankedCandidate> round_robin_rank(const ScoredPool& pool, const PairJudge& judge) {
    const int m = pool.size();
    if (m < 2) throw DataError("round_robin_rank: need at least 2 candidates");
    std::vector<RankedCandidate> ranked(m);
    for (int i = 0; i < m; ++i) ranked[i].index = i;
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            const ComparisonResult r = judge(pool, a, b);
            ranked[r.winner].wins += 1;
            const double margin = r.margin();
            ranked[a].mean_margin += margin;
            ranked[b].mean_margin -= margin;
        }
    }
    for (auto& rc : ranked) rc.mean_margin /= static_cast<double>(m - 1);
    std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& x, const RankedCandidate& y) {
        if (x.wins != y.wins) return x.wins > y.wins;
        if (x.mean_margin != y.mean_margin) return x.mean_margin > y.mean_margin;
        return x.index < y.index;
    });
    return ranked;
}

ConsistencyReport consistency_rate(const std::vector<ScoredPool>& pools, const PairJudge& judge,
                                   int sample_pairs_per_pool, std::mt19937_64& rng) {
    if (pools.empty()) throw DataError("consistency_rate: no pools");
    if (sample_pairs_per_pool < 1) throw ConfigError("consistency_rate: need >= 1 pair per pool");
    ConsistencyReport report;
    for (const auto& pool : pools) {
        const int m = pool.size();
        if (m < 2) {
            report.skipped_pools += 1;
            continue;
        }
        for (int s = 0; s < sample_pairs_per_pool; ++s) {
            const int a = static_cast<int>(rng() % static_cast<uint64_t>(m));
            int b = static_cast<int>(rng() % static_cast<uint64_t>(m - 1));
            if (b >= a) ++b;
            const ComparisonResult fwd = judge(pool, a, b);
            const ComparisonResult rev = judge(pool, b, a);
            report.pairs_evaluated += 1;
            if (fwd.winner == rev.winner) report.agreements += 1;
        }
    }
    return report;
}

} // namespace pairrank
