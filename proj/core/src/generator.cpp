#include "pairrank/generator.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "pairrank/dataset.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

std::string decoding_method_name(DecodingMethod m) {
    switch (m) {
        case DecodingMethod::beam: return "beam";
        case DecodingMethod::diverse_beam: return "diverse_beam";
        case DecodingMethod::top_k: return "top_k";
        case DecodingMethod::top_p: return "top_p";
    }
    return "?";
}

DecodingMethod decoding_method_from_string(const std::string& name) {
    if (name == "beam") return DecodingMethod::beam;
    if (name == "diverse_beam") return DecodingMethod::diverse_beam;
    if (name == "top_k") return DecodingMethod::top_k;
    if (name == "top_p") return DecodingMethod::top_p;
    throw ConfigError("unknown decoding method \"" + name +
                      "\" (expected beam, diverse_beam, top_k, top_p)");
}

void DecodingConfig::validate() const {
    const std::string ctx = "decoding config (" + decoding_method_name(method) + "): ";
    if (num_candidates < 1) throw ConfigError(ctx + "num_candidates must be >= 1");
    if (max_len < 1) throw ConfigError(ctx + "max_len must be >= 1");
    if (temperature <= 0.0) throw ConfigError(ctx + "temperature must be > 0");
    switch (method) {
        case DecodingMethod::beam:
            if (effective_beam_width() < num_candidates) {
                throw ConfigError(ctx + "beam_width must be >= num_candidates");
            }
            break;
        case DecodingMethod::diverse_beam: {
            if (effective_beam_width() < num_candidates) {
                throw ConfigError(ctx + "beam_width must be >= num_candidates");
            }
            if (diversity_penalty < 0.0) throw ConfigError(ctx + "diversity_penalty must be >= 0");
            if (effective_beam_width() % effective_groups() != 0) {
                throw ConfigError(ctx + "beam_width must be divisible by diversity_groups");
            }
            break;
        }
        case DecodingMethod::top_k:
            if (k < 1) throw ConfigError(ctx + "k must be >= 1");
            if (!seed) throw ConfigError(ctx + "sampling methods require an explicit seed");
            break;
        case DecodingMethod::top_p:
            if (!(p > 0.0 && p <= 1.0)) throw ConfigError(ctx + "p must be in (0, 1]");
            if (!seed) throw ConfigError(ctx + "sampling methods require an explicit seed");
            break;
    }
}

namespace {

const std::vector<std::string>& default_noise_vocab() {
    static const std::vector<std::string> words{
        "zarn", "blick", "quor", "fimble", "drax",  "plon", "vexi", "grubb",
        "snorp", "tazzle", "wug",  "korp",  "mizzle", "flet", "jorv", "quab"};
    return words;
}

} // namespace

StubGenerator::StubGenerator(const std::vector<Example>& examples, StubGeneratorOptions options,
                             uint64_t seed)
    : opt_(std::move(options)), seed_(seed) {
    if (opt_.noise_vocab.empty()) opt_.noise_vocab = default_noise_vocab();
    for (const auto& ex : examples) target_by_source_.emplace(ex.source, ex.target);
}

std::vector<std::string> StubGenerator::generate(const std::string& source,
                                                 const DecodingConfig& config) const {
    config.validate();
    auto it = target_by_source_.find(source);
    // Unknown sources (never a normal case) fall back to perturbing the
    // source itself so the stub stays total.
    const std::string& base = it != target_by_source_.end() && !it->second.empty() ? it->second
                                                                                   : source;
    const std::vector<std::string> base_tokens = tokenize(base);

    double method_mult = 1.0;
    switch (config.method) {
        case DecodingMethod::beam: method_mult = 1.0; break;
        case DecodingMethod::diverse_beam: method_mult = 1.4; break;
        case DecodingMethod::top_k: method_mult = 2.2; break;
        case DecodingMethod::top_p: method_mult = 1.8; break;
    }

    const uint64_t example_seed =
        mix_seed(seed_ ^ (config.seed ? static_cast<uint64_t>(*config.seed) : 0ULL),
                 hash_text(source) ^ hash_text(decoding_method_name(config.method)));

    // Quality rank r gets noise base + step * r; shuffle_quality permutes
    // which candidate index carries which rank.
    std::vector<int> rank_of(config.num_candidates);
    for (int i = 0; i < config.num_candidates; ++i) rank_of[i] = i;
    if (opt_.shuffle_quality) {
        std::mt19937_64 rng(mix_seed(example_seed, 0x71ULL));
        for (size_t i = rank_of.size() - 1; i > 0; --i) {
            std::swap(rank_of[i], rank_of[rng() % (i + 1)]);
        }
    }

    std::vector<std::string> out;
    out.reserve(config.num_candidates);
    for (int i = 0; i < config.num_candidates; ++i) {
        std::mt19937_64 rng(mix_seed(example_seed, 1000 + static_cast<uint64_t>(i)));
        const double noise =
            std::min(0.95, (opt_.base_noise + opt_.noise_step * rank_of[i]) * method_mult);
        auto uniform = [&] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };

        std::vector<std::string> tokens;
        for (const auto& tok : base_tokens) {
            if (uniform() >= noise) {
                tokens.push_back(tok);
                continue;
            }
            const double action = uniform();
            if (action < 0.6) {
                tokens.push_back(opt_.noise_vocab[rng() % opt_.noise_vocab.size()]);
            } else if (action < 0.8) {
                // drop token
            } else {
                tokens.push_back(tok);
                tokens.push_back(opt_.noise_vocab[rng() % opt_.noise_vocab.size()]);
            }
        }
        if (tokens.empty()) tokens.push_back(opt_.noise_vocab[rng() % opt_.noise_vocab.size()]);

        std::ostringstream os;
        for (size_t t = 0; t < tokens.size(); ++t) {
            if (t) os << ' ';
            os << tokens[t];
        }
        out.push_back(os.str());
    }
    return out;
}

ScoredPool generate_candidates(const TextGenerator& gen, const Example& example,
                               const DecodingConfig& config) {
    config.validate();
    std::vector<std::string> texts;
    try {
        texts = gen.generate(example.source, config);
    } catch (const std::exception& e) {
        throw RuntimeFailure("generator \"" + gen.name() + "\" failed on example \"" +
                             example.id + "\": " + e.what());
    }
    if (static_cast<int>(texts.size()) != config.num_candidates) {
        throw RuntimeFailure("generator \"" + gen.name() + "\" returned " +
                             std::to_string(texts.size()) + " candidates for example \"" +
                             example.id + "\", expected " +
                             std::to_string(config.num_candidates));
    }
    ScoredPool pool;
    pool.example_id = example.id;
    pool.source = example.source;
    pool.target = example.target;
    pool.candidates.reserve(texts.size());
    for (auto& t : texts) {
        CandidateRecord c;
        c.text = std::move(t);
        c.method = decoding_method_name(config.method);
        pool.candidates.push_back(std::move(c));
    }
    return pool;
}

TrainingPools build_training_pools(const GeneratorFactory& factory,
                                   const std::vector<Example>& train, const HalfSplitPlan& plan,
                                   const std::vector<DecodingConfig>& configs, uint64_t seed) {
    if (configs.empty()) throw ConfigError("build_training_pools: no decoding configs");
    for (const auto& cfg : configs) cfg.validate();

    std::map<std::string, const Example*> by_id;
    for (const auto& ex : train) by_id[ex.id] = &ex;
    std::vector<Example> half_a_examples, half_b_examples;
    for (const auto& id : plan.half_a) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("half-split plan id \"" + id + "\" not in training set");
        half_a_examples.push_back(*it->second);
    }
    for (const auto& id : plan.half_b) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("half-split plan id \"" + id + "\" not in training set");
        half_b_examples.push_back(*it->second);
    }

    auto gen_on_a = factory(half_a_examples, mix_seed(seed, 0xAULL));
    auto gen_on_b = factory(half_b_examples, mix_seed(seed, 0xBULL));

    TrainingPools out;
    for (const auto& ex : train) {
        const TextGenerator* gen = nullptr;
        std::string trained_half;
        if (plan.contains_a(ex.id)) {
            gen = gen_on_b.get();  // unseen half: generator trained on b
            trained_half = "b";
        } else if (plan.contains_b(ex.id)) {
            gen = gen_on_a.get();
            trained_half = "a";
        } else {
            throw DataError("example \"" + ex.id + "\" missing from the half-split plan");
        }
        std::vector<ScoredPool> per_config;
        per_config.reserve(configs.size());
        for (const auto& cfg : configs) per_config.push_back(generate_candidates(*gen, ex, cfg));
        out.pools.push_back(merge_pools(per_config));
        out.generator_half[ex.id] = trained_half;
    }
    return out;
}

std::vector<ScoredPool> import_external_candidates(const std::string& path) {
    return read_pools(path);
}

} // namespace pairrank
