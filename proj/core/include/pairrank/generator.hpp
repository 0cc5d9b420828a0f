#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

enum class DecodingMethod { beam, diverse_beam, top_k, top_p };

std::string decoding_method_name(DecodingMethod m);
DecodingMethod decoding_method_from_string(const std::string& name);

struct DecodingConfig {
    DecodingMethod method = DecodingMethod::beam;
    int num_candidates = 15;
    int beam_width = 0;       // 0 -> num_candidates
    int diversity_groups = 0; // 0 -> beam_width
    double diversity_penalty = 1.0;
    int k = 50;
    double p = 0.95;
    double temperature = 1.0;
    std::optional<int64_t> seed;  // required for the sampling methods
    int max_len = 48;

    void validate() const;  // throws ConfigError
    int effective_beam_width() const { return beam_width > 0 ? beam_width : num_candidates; }
    int effective_groups() const {
        return diversity_groups > 0 ? diversity_groups : effective_beam_width();
    }
};

/// Generator contract: deterministic texts for (source, config). Returns
/// exactly config.num_candidates candidates.
class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> generate(const std::string& source,
                                              const DecodingConfig& config) const = 0;
};

/// Deterministic test generator: perturbs the reference target with
/// controlled noise drawn from a separate noise vocabulary, so candidate
/// quality is a visible surface feature. Candidate quality decreases with
/// rank unless shuffle_quality permutes the ranks (useful when top-beam
/// should not already be the best candidate).
struct StubGeneratorOptions {
    double base_noise = 0.05;
    double noise_step = 0.06;
    bool shuffle_quality = false;
    std::vector<std::string> noise_vocab;  // defaults provided when empty
};

class StubGenerator final : public TextGenerator {
public:
    StubGenerator(const std::vector<Example>& examples, StubGeneratorOptions options,
                  uint64_t seed);

    std::string name() const override { return "stub"; }
    std::vector<std::string> generate(const std::string& source,
                                      const DecodingConfig& config) const override;

private:
    std::unordered_map<std::string, std::string> target_by_source_;
    StubGeneratorOptions opt_;
    uint64_t seed_;
};

/// Builds a generator "fine-tuned" on the given examples (the training half
/// under the leakage-free protocol, or the full set for val/test).
using GeneratorFactory =
    std::function<std::unique_ptr<TextGenerator>(const std::vector<Example>& train_examples,
                                                 uint64_t seed)>;

/// Runs one generator/config pair over one example. The pool is unscored and
/// every candidate is tagged with the config's method name.
ScoredPool generate_candidates(const TextGenerator& gen, const Example& example,
                               const DecodingConfig& config);

struct TrainingPools {
    std::vector<ScoredPool> pools;  // one per training example, configs merged
    /// example_id -> the half ("a"/"b") whose examples trained the generator
    /// that produced this pool. Cross-half isolation is checkable from this.
    std::map<std::string, std::string> generator_half;
};

/// Leakage-free training pools: each example's candidates come from the
/// generator trained on the *other* half. Pools from all configs are merged
/// per example in config order.
TrainingPools build_training_pools(const GeneratorFactory& factory,
                                   const std::vector<Example>& train, const HalfSplitPlan& plan,
                                   const std::vector<DecodingConfig>& configs, uint64_t seed);

/// Loads externally generated candidate pools (pool JSONL layout). Pools may
/// be transfer mode (empty target); they rerank but do not score.
std::vector<ScoredPool> import_external_candidates(const std::string& path);

} // namespace pairrank
