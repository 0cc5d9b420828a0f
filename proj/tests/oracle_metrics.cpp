#include "oracle_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string word;
    for (size_t i = 0; i < text.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        const bool is_space = c < 0x80 && (c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                                           c == '\f' || c == '\v');
        const bool is_punct = c < 0x80 && std::ispunct(c);
        if (is_space) {
            if (!word.empty()) {
                tokens.push_back(word);
                word.clear();
            }
        } else if (is_punct) {
            if (!word.empty()) {
                tokens.push_back(word);
                word.clear();
            }
            tokens.push_back(std::string(1, static_cast<char>(c)));
        } else {
            if (c < 0x80 && c >= 'A' && c <= 'Z') {
                word.push_back(static_cast<char>(c - 'A' + 'a'));
            } else {
                word.push_back(static_cast<char>(c));
            }
        }
    }
    if (!word.empty()) tokens.push_back(word);
    return tokens;
}

namespace {

std::map<std::vector<std::string>, int> gram_counts(const std::vector<std::string>& tokens,
                                                    int n) {
    std::map<std::vector<std::string>, int> counts;
    for (int i = 0; i + n <= static_cast<int>(tokens.size()); ++i) {
        std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + n);
        counts[gram] += 1;
    }
    return counts;
}

} // namespace

double rouge_n(const std::string& candidate, const std::string& reference, int n) {
    const auto cand = gram_counts(tokenize(candidate), n);
    const auto ref = gram_counts(tokenize(reference), n);
    int cand_total = 0, ref_total = 0, overlap = 0;
    for (const auto& [g, c] : cand) cand_total += c;
    for (const auto& [g, c] : ref) ref_total += c;
    for (const auto& [g, c] : cand) {
        auto it = ref.find(g);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    if (cand_total == 0 || ref_total == 0 || overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / cand_total;
    const double r = static_cast<double>(overlap) / ref_total;
    return 2.0 * p * r / (p + r);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    const auto a = tokenize(candidate);
    const auto b = tokenize(reference);
    if (a.empty() || b.empty()) return 0.0;
    // Full LCS table.
    std::vector<std::vector<int>> table(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                table[i][j] = table[i - 1][j - 1] + 1;
            } else {
                table[i][j] = std::max(table[i - 1][j], table[i][j - 1]);
            }
        }
    }
    const int lcs = table[a.size()][b.size()];
    if (lcs == 0) return 0.0;
    const double p = static_cast<double>(lcs) / a.size();
    const double r = static_cast<double>(lcs) / b.size();
    return 2.0 * p * r / (p + r);
}

double bleu(const std::string& candidate, const std::vector<std::string>& references,
            int max_order) {
    const auto cand = tokenize(candidate);
    if (cand.empty()) return 0.0;

    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references) refs.push_back(tokenize(r));

    // Closest reference length; ties go to the shorter reference.
    long ref_len = 0;
    long best_diff = -1;
    for (const auto& r : refs) {
        const long len = static_cast<long>(r.size());
        const long diff = std::labs(len - static_cast<long>(cand.size()));
        if (best_diff < 0 || diff < best_diff || (diff == best_diff && len < ref_len)) {
            best_diff = diff;
            ref_len = len;
        }
    }

    double log_sum = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        const auto cand_grams = gram_counts(cand, n);
        std::map<std::vector<std::string>, int> max_ref;
        for (const auto& r : refs) {
            for (const auto& [g, c] : gram_counts(r, n)) {
                max_ref[g] = std::max(max_ref[g], c);
            }
        }
        long total = 0, match = 0;
        for (const auto& [g, c] : cand_grams) {
            total += c;
            auto it = max_ref.find(g);
            if (it != max_ref.end()) match += std::min(c, it->second);
        }
        double precision;
        if (n == 1) {
            if (match == 0) return 0.0;
            precision = static_cast<double>(match) / total;
        } else if (match > 0) {
            precision = static_cast<double>(match) / total;
        } else {
            precision = 1.0 / (static_cast<double>(total) + 1.0);
        }
        log_sum += std::log(precision);
    }

    double bp = 1.0;
    if (static_cast<long>(cand.size()) < ref_len) {
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand.size()));
    }
    return bp * std::exp(log_sum / max_order);
}

std::vector<double> cider(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus) {
    const int max_order = 4;
    const double log_n = std::log(static_cast<double>(corpus.size()));

    // Document frequency over the reference sets (one document per corpus
    // item; an n-gram counts once per item).
    std::map<std::vector<std::string>, int> df;
    for (const auto& [cand, refs] : corpus) {
        std::set<std::vector<std::string>> grams;
        for (const auto& r : refs) {
            const auto tokens = tokenize(r);
            for (int n = 1; n <= max_order; ++n) {
                for (const auto& [g, c] : gram_counts(tokens, n)) grams.insert(g);
            }
        }
        for (const auto& g : grams) df[g] += 1;
    }
    auto idf = [&](const std::vector<std::string>& g) {
        auto it = df.find(g);
        if (it == df.end()) return log_n;
        return log_n - std::log(static_cast<double>(std::max(1, it->second)));
    };

    std::vector<double> out;
    for (const auto& [cand, refs] : corpus) {
        const auto cand_tokens = tokenize(cand);
        double ref_total = 0.0;
        for (const auto& r : refs) {
            const auto ref_tokens = tokenize(r);
            double order_total = 0.0;
            for (int n = 1; n <= max_order; ++n) {
                std::map<std::vector<std::string>, double> cv, rv;
                for (const auto& [g, c] : gram_counts(cand_tokens, n)) cv[g] = c * idf(g);
                for (const auto& [g, c] : gram_counts(ref_tokens, n)) rv[g] = c * idf(g);
                double dot = 0.0, cn = 0.0, rn = 0.0;
                for (const auto& [g, w] : cv) {
                    cn += w * w;
                    auto it = rv.find(g);
                    if (it != rv.end()) dot += w * it->second;
                }
                for (const auto& [g, w] : rv) rn += w * w;
                if (cn > 0.0 && rn > 0.0) order_total += dot / (std::sqrt(cn) * std::sqrt(rn));
            }
            ref_total += order_total / max_order;
        }
        out.push_back(ref_total / static_cast<double>(refs.size()));
    }
    return out;
}

int argmax(const std::vector<double>& values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

} // namespace oracle
