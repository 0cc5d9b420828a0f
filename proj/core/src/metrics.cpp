#include "pairrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <set>

#include "pairrank/errors.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

namespace {

using Counts = std::unordered_map<std::string, int>;

Counts ngram_counts(const std::vector<std::string>& tokens, int n) {
    Counts counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (const auto& g : ngrams(tokens, n)) counts[g] += 1;
    return counts;
}

double f1(double overlap, double cand_total, double ref_total) {
    if (cand_total <= 0.0 || ref_total <= 0.0 || overlap <= 0.0) return 0.0;
    const double p = overlap / cand_total;
    const double r = overlap / ref_total;
    return 2.0 * p * r / (p + r);
}

struct BleuStats {
    std::vector<int64_t> matches;  // clipped, per order
    std::vector<int64_t> totals;   // candidate n-gram counts, per order
    int64_t cand_len = 0;
    int64_t ref_len = 0;  // closest reference length
};

BleuStats bleu_stats(const std::vector<std::string>& cand,
                     const std::vector<std::vector<std::string>>& refs, int max_order) {
    BleuStats st;
    st.matches.assign(max_order, 0);
    st.totals.assign(max_order, 0);
    st.cand_len = static_cast<int64_t>(cand.size());

    int64_t best_ref = 0;
    int64_t best_diff = -1;
    for (const auto& r : refs) {
        const auto len = static_cast<int64_t>(r.size());
        const int64_t diff = std::llabs(len - st.cand_len);
        if (best_diff < 0 || diff < best_diff || (diff == best_diff && len < best_ref)) {
            best_diff = diff;
            best_ref = len;
        }
    }
    st.ref_len = best_ref;

    for (int n = 1; n <= max_order; ++n) {
        const Counts cand_counts = ngram_counts(cand, n);
        Counts max_ref;
        for (const auto& r : refs) {
            for (const auto& [g, c] : ngram_counts(r, n)) {
                max_ref[g] = std::max(max_ref[g], c);
            }
        }
        int64_t total = 0;
        int64_t match = 0;
        for (const auto& [g, c] : cand_counts) {
            total += c;
            auto it = max_ref.find(g);
            if (it != max_ref.end()) match += std::min(c, it->second);
        }
        st.totals[n - 1] = total;
        st.matches[n - 1] = match;
    }
    return st;
}

double brevity_penalty(int64_t cand_len, int64_t ref_len) {
    if (cand_len <= 0) return 0.0;
    if (cand_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

} // namespace

const std::vector<Metric>& all_metrics() {
    static const std::vector<Metric> m{Metric::rouge1, Metric::rouge2, Metric::rougeL,
                                       Metric::bleu, Metric::cider};
    return m;
}

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::rouge1: return "rouge1";
        case Metric::rouge2: return "rouge2";
        case Metric::rougeL: return "rougeL";
        case Metric::bleu: return "bleu";
        case Metric::cider: return "cider";
    }
    return "?";
}

Metric metric_from_string(const std::string& name) {
    for (Metric m : all_metrics()) {
        if (metric_name(m) == name) return m;
    }
    throw ConfigError("unknown metric \"" + name +
                      "\" (expected one of rouge1, rouge2, rougeL, bleu, cider)");
}

std::vector<Metric> parse_metric_list(const std::vector<std::string>& names) {
    if (names.empty()) throw ConfigError("metric list is empty");
    std::vector<Metric> out;
    for (const auto& n : names) {
        Metric m = metric_from_string(n);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw ConfigError("metric \"" + n + "\" listed twice");
        }
        out.push_back(m);
    }
    return out;
}

std::vector<std::string> metric_names(const std::vector<Metric>& metrics) {
    std::vector<std::string> out;
    out.reserve(metrics.size());
    for (Metric m : metrics) out.push_back(metric_name(m));
    return out;
}

double rouge_n(const std::string& candidate, const std::string& reference, int n) {
    if (n != 1 && n != 2) throw ConfigError("rouge_n supports n in {1,2}");
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    const Counts cc = ngram_counts(cand, n);
    const Counts rc = ngram_counts(ref, n);
    double cand_total = 0.0, ref_total = 0.0, overlap = 0.0;
    for (const auto& [g, c] : cc) cand_total += c;
    for (const auto& [g, c] : rc) ref_total += c;
    for (const auto& [g, c] : cc) {
        auto it = rc.find(g);
        if (it != rc.end()) overlap += std::min(c, it->second);
    }
    return f1(overlap, cand_total, ref_total);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    const size_t n = cand.size(), m = ref.size();
    if (n == 0 || m == 0) return 0.0;
    // Two-row LCS table.
    std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            cur[j] = (cand[i - 1] == ref[j - 1]) ? prev[j - 1] + 1
                                                 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return f1(static_cast<double>(prev[m]), static_cast<double>(n), static_cast<double>(m));
}

double bleu(const std::string& candidate, const std::vector<std::string>& references,
            int max_order) {
    if (references.empty()) throw DataError("bleu: empty reference list");
    if (max_order < 1) throw ConfigError("bleu: max_order must be >= 1");
    const auto cand = tokenize(candidate);
    std::vector<std::vector<std::string>> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize(r));

    const BleuStats st = bleu_stats(cand, refs, max_order);
    if (st.cand_len == 0 || st.matches[0] == 0) return 0.0;

    double log_sum = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        const auto match = st.matches[n - 1];
        const auto total = st.totals[n - 1];
        double p;
        if (n == 1) {
            p = static_cast<double>(match) / static_cast<double>(total);
        } else if (match > 0) {
            p = static_cast<double>(match) / static_cast<double>(total);
        } else {
            p = 1.0 / static_cast<double>(total + 1);
        }
        log_sum += std::log(p);
    }
    return brevity_penalty(st.cand_len, st.ref_len) * std::exp(log_sum / max_order);
}

double corpus_bleu(const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs,
                   int max_order) {
    if (pairs.empty()) throw DataError("corpus_bleu: empty corpus");
    std::vector<int64_t> matches(max_order, 0), totals(max_order, 0);
    int64_t cand_len = 0, ref_len = 0;
    for (const auto& [candidate, references] : pairs) {
        if (references.empty()) throw DataError("corpus_bleu: pair with empty reference list");
        const auto cand = tokenize(candidate);
        std::vector<std::vector<std::string>> refs;
        for (const auto& r : references) refs.push_back(tokenize(r));
        const BleuStats st = bleu_stats(cand, refs, max_order);
        for (int n = 0; n < max_order; ++n) {
            matches[n] += st.matches[n];
            totals[n] += st.totals[n];
        }
        cand_len += st.cand_len;
        ref_len += st.ref_len;
    }
    double log_sum = 0.0;
    for (int n = 0; n < max_order; ++n) {
        if (matches[n] == 0 || totals[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(totals[n]));
    }
    return brevity_penalty(cand_len, ref_len) * std::exp(log_sum / max_order);
}

CiderScorer::CiderScorer(const std::vector<std::vector<std::string>>& reference_sets) {
    if (reference_sets.empty()) throw DataError("cider: empty corpus");
    corpus_size_ = reference_sets.size();
    log_corpus_size_ = std::log(static_cast<double>(corpus_size_));
    std::unordered_map<std::string, int> df;
    for (const auto& refs : reference_sets) {
        std::set<std::string> grams;
        for (const auto& ref : refs) {
            const auto tokens = tokenize(ref);
            for (int n = 1; n <= kMaxOrder; ++n) {
                for (auto& g : ngrams(tokens, n)) grams.insert(std::move(g));
            }
        }
        for (const auto& g : grams) df[g] += 1;
    }
    for (const auto& [g, count] : df) {
        idf_[g] = log_corpus_size_ - std::log(static_cast<double>(count));
    }
}

double CiderScorer::score(const std::string& candidate,
                          const std::vector<std::string>& references) const {
    if (references.empty()) throw DataError("cider: candidate with empty reference list");
    const auto cand_tokens = tokenize(candidate);

    // TF-IDF vector per order; n-grams unseen in any corpus reference get
    // the maximal IDF log(N).
    auto weight = [&](const std::string& g) {
        auto it = idf_.find(g);
        return it != idf_.end() ? it->second : log_corpus_size_;
    };
    auto vectorize = [&](const std::vector<std::string>& tokens, int n) {
        std::unordered_map<std::string, double> v;
        for (const auto& [g, c] : ngram_counts(tokens, n)) {
            v[g] = static_cast<double>(c) * weight(g);
        }
        return v;
    };

    double total = 0.0;
    for (const auto& ref : references) {
        const auto ref_tokens = tokenize(ref);
        double order_sum = 0.0;
        for (int n = 1; n <= kMaxOrder; ++n) {
            const auto cv = vectorize(cand_tokens, n);
            const auto rv = vectorize(ref_tokens, n);
            double dot = 0.0, cn = 0.0, rn = 0.0;
            for (const auto& [g, w] : cv) {
                cn += w * w;
                auto it = rv.find(g);
                if (it != rv.end()) dot += w * it->second;
            }
            for (const auto& [g, w] : rv) rn += w * w;
            if (cn > 0.0 && rn > 0.0) {
                order_sum += dot / (std::sqrt(cn) * std::sqrt(rn));
            }
        }
        total += order_sum / kMaxOrder;
    }
    return total / static_cast<double>(references.size());
}

std::vector<double> cider(const std::vector<std::pair<std::string, std::vector<std::string>>>& pool) {
    std::vector<std::vector<std::string>> reference_sets;
    reference_sets.reserve(pool.size());
    for (const auto& [cand, refs] : pool) reference_sets.push_back(refs);
    const CiderScorer scorer(reference_sets);
    std::vector<double> out;
    out.reserve(pool.size());
    for (const auto& [cand, refs] : pool) out.push_back(scorer.score(cand, refs));
    return out;
}

namespace {

void score_with(std::vector<ScoredPool>& pools, const std::vector<Metric>& metrics,
                const CiderScorer* cider_scorer) {
    for (auto& pool : pools) {
        if (pool.transfer_mode()) {
            throw DataError("pool \"" + pool.example_id +
                            "\" has no reference target (transfer mode); metric scoring "
                            "requires references");
        }
        for (auto& cand : pool.candidates) {
            for (Metric m : metrics) {
                double v = 0.0;
                switch (m) {
                    case Metric::rouge1: v = rouge_n(cand.text, pool.target, 1); break;
                    case Metric::rouge2: v = rouge_n(cand.text, pool.target, 2); break;
                    case Metric::rougeL: v = rouge_l(cand.text, pool.target); break;
                    case Metric::bleu: v = bleu(cand.text, {pool.target}); break;
                    case Metric::cider: v = cider_scorer->score(cand.text, {pool.target}); break;
                }
                cand.scores[metric_name(m)] = v;
            }
        }
    }
}

} // namespace

void score_pools(std::vector<ScoredPool>& pools, const std::vector<Metric>& metrics) {
    if (metrics.empty()) throw ConfigError("score_pools: empty metric list");
    const bool wants_cider =
        std::find(metrics.begin(), metrics.end(), Metric::cider) != metrics.end();
    std::unique_ptr<CiderScorer> scorer;
    if (wants_cider) {
        std::vector<std::vector<std::string>> refs;
        refs.reserve(pools.size());
        for (const auto& p : pools) {
            if (p.transfer_mode()) {
                throw DataError("pool \"" + p.example_id +
                                "\" has no reference target (transfer mode); metric scoring "
                                "requires references");
            }
            refs.push_back({p.target});
        }
        if (refs.empty()) throw DataError("score_pools: no pools to build the CIDEr corpus from");
        scorer = std::make_unique<CiderScorer>(refs);
    }
    score_with(pools, metrics, scorer.get());
}

void score_pool(ScoredPool& pool, const std::vector<Metric>& metrics) {
    std::vector<ScoredPool> one{pool};
    score_pools(one, metrics);
    pool = std::move(one.front());
}

int oracle_select(const ScoredPool& pool, Metric metric) {
    if (pool.candidates.empty()) throw DataError("oracle_select: empty pool");
    const std::string name = metric_name(metric);
    int best = 0;
    double best_score = 0.0;
    for (int i = 0; i < pool.size(); ++i) {
        auto it = pool.candidates[i].scores.find(name);
        if (it == pool.candidates[i].scores.end()) {
            throw DataError("oracle_select: pool \"" + pool.example_id + "\" candidate " +
                            std::to_string(i) + " not scored for metric \"" + name + "\"");
        }
        if (i == 0 || it->second > best_score) {
            best = i;
            best_score = it->second;
        }
    }
    return best;
}

double gain(double new_value, double base_value) {
    if (!(base_value > 0.0)) {
        throw DataError("gain: base value must be positive, got " + std::to_string(base_value));
    }
    return 100.0 * (new_value - base_value) / base_value;
}

} // namespace pairrank
