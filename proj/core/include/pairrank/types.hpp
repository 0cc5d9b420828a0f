#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pairrank {

/// One task instance: a source text and its reference target.
struct Example {
    std::string id;
    std::string source;
    std::string target;
};

/// A generated candidate, tagged with the decoding method that produced it.
/// The scores map stays empty until the pool is scored; once scored it holds
/// one entry per configured metric. Ordered map so serialization is stable.
struct CandidateRecord {
    std::string text;
    std::string method;
    std::map<std::string, double> scores;

    bool scored() const { return !scores.empty(); }
};

/// A source's candidate set. Candidate order is significant (candidate 0 is
/// the top-beam choice for beam pools) and preserved across serialization.
struct ScoredPool {
    std::string example_id;
    std::string source;
    std::string target;
    std::vector<CandidateRecord> candidates;

    int size() const { return static_cast<int>(candidates.size()); }
    /// Pools imported without references can be reranked but not scored.
    bool transfer_mode() const { return target.empty(); }
};

/// Disjoint halves of the training set, used to keep candidate generation
/// leakage-free: each half's candidates come from a generator that never saw
/// that half.
struct HalfSplitPlan {
    int64_t seed = 0;
    std::vector<std::string> half_a;
    std::vector<std::string> half_b;

    bool contains_a(const std::string& id) const;
    bool contains_b(const std::string& id) const;
};

} // namespace pairrank
