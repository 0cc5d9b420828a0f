#include "pairrank/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "pairrank/errors.hpp"

namespace pairrank {

namespace {

struct Hyp {
    std::vector<int> prefix;  // starts with BOS
    double log_prob = 0.0;
    bool finished = false;
};

bool hyp_better(const Hyp& a, const Hyp& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.prefix < b.prefix;  // deterministic tie break
}

DecodedSeq to_decoded(const Hyp& h, int eos) {
    DecodedSeq out;
    out.log_prob = h.log_prob;
    for (size_t i = 1; i < h.prefix.size(); ++i) {
        if (h.prefix[i] == eos) break;
        out.ids.push_back(h.prefix[i]);
    }
    return out;
}

std::vector<DecodedSeq> collect(std::vector<Hyp> hyps, int num_return, int eos) {
    std::sort(hyps.begin(), hyps.end(), hyp_better);
    std::vector<DecodedSeq> out;
    for (const auto& h : hyps) {
        if (static_cast<int>(out.size()) >= num_return) break;
        out.push_back(to_decoded(h, eos));
    }
    return out;
}

// One beam step over a group of hypotheses. extra_penalty, when set, is an
// additive per-token adjustment (diverse beam's diversity term).
std::vector<Hyp> expand_group(const ConditionalLM& lm, const std::vector<int>& src,
                              const std::vector<Hyp>& group, int width,
                              const std::vector<double>* extra_penalty) {
    std::vector<Hyp> pool;
    for (const auto& h : group) {
        if (h.finished) {
            pool.push_back(h);
            continue;
        }
        const auto logp = lm.next_log_probs(src, h.prefix);
        // Keeping only the top `width` continuations of each hypothesis is
        // enough: the step keeps width hypotheses overall.
        std::vector<int> idx(logp.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        std::vector<double> adjusted = logp;
        if (extra_penalty) {
            for (size_t i = 0; i < adjusted.size(); ++i) adjusted[i] -= (*extra_penalty)[i];
        }
        const int keep = std::min<int>(width, static_cast<int>(idx.size()));
        std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), [&](int a, int b) {
            if (adjusted[a] != adjusted[b]) return adjusted[a] > adjusted[b];
            return a < b;
        });
        for (int i = 0; i < keep; ++i) {
            Hyp next = h;
            next.prefix.push_back(idx[i]);
            next.log_prob += adjusted[idx[i]];
            next.finished = idx[i] == lm.eos_id();
            pool.push_back(std::move(next));
        }
    }
    std::sort(pool.begin(), pool.end(), hyp_better);
    if (static_cast<int>(pool.size()) > width) pool.resize(width);
    return pool;
}

} // namespace

std::vector<DecodedSeq> decode_beam(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                    int beam_width, int num_return, int max_len) {
    if (beam_width < num_return) throw ConfigError("beam_width must be >= num_return");
    std::vector<Hyp> beams{Hyp{{lm.bos_id()}, 0.0, false}};
    for (int step = 0; step < max_len; ++step) {
        bool all_done = true;
        for (const auto& h : beams) all_done = all_done && h.finished;
        if (all_done) break;
        beams = expand_group(lm, source_ids, beams, beam_width, nullptr);
    }
    return collect(std::move(beams), num_return, lm.eos_id());
}

std::vector<DecodedSeq> decode_diverse_beam(const ConditionalLM& lm,
                                            const std::vector<int>& source_ids, int beam_width,
                                            int groups, double diversity_penalty, int num_return,
                                            int max_len) {
    if (groups < 1) throw ConfigError("diverse beam needs groups >= 1");
    if (beam_width % groups != 0) throw ConfigError("beam_width must be divisible by groups");
    if (beam_width < num_return) throw ConfigError("beam_width must be >= num_return");
    const int group_width = beam_width / groups;

    std::vector<std::vector<Hyp>> beam_groups(groups,
                                              std::vector<Hyp>{Hyp{{lm.bos_id()}, 0.0, false}});
    for (int step = 0; step < max_len; ++step) {
        bool all_done = true;
        for (const auto& g : beam_groups) {
            for (const auto& h : g) all_done = all_done && h.finished;
        }
        if (all_done) break;
        std::vector<double> token_counts(lm.vocab_size(), 0.0);
        for (auto& group : beam_groups) {
            std::vector<double> penalty(token_counts.size());
            for (size_t i = 0; i < penalty.size(); ++i) {
                penalty[i] = diversity_penalty * token_counts[i];
            }
            group = expand_group(lm, source_ids, group, group_width, &penalty);
            for (const auto& h : group) {
                if (!h.finished && !h.prefix.empty()) token_counts[h.prefix.back()] += 1.0;
            }
        }
    }
    std::vector<Hyp> all;
    for (auto& g : beam_groups) all.insert(all.end(), g.begin(), g.end());
    return collect(std::move(all), num_return, lm.eos_id());
}

namespace {

std::vector<DecodedSeq> decode_sampling(const ConditionalLM& lm, const std::vector<int>& src,
                                        int num_samples, int max_len, double temperature,
                                        std::mt19937_64& rng,
                                        bool top_k_mode, int k, double p) {
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
    std::vector<DecodedSeq> out;
    out.reserve(num_samples);
    for (int s = 0; s < num_samples; ++s) {
        Hyp h{{lm.bos_id()}, 0.0, false};
        for (int step = 0; step < max_len && !h.finished; ++step) {
            const auto logp = lm.next_log_probs(src, h.prefix);
            std::vector<int> idx(logp.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
            std::sort(idx.begin(), idx.end(), [&](int a, int b) {
                if (logp[a] != logp[b]) return logp[a] > logp[b];
                return a < b;
            });

            size_t cutoff;
            if (top_k_mode) {
                cutoff = std::min<size_t>(static_cast<size_t>(k), idx.size());
            } else {
                // Nucleus: smallest prefix of the sorted vocabulary whose
                // (untempered) probability mass reaches p.
                double mass = 0.0;
                cutoff = idx.size();
                for (size_t i = 0; i < idx.size(); ++i) {
                    mass += std::exp(logp[idx[i]]);
                    if (mass >= p) {
                        cutoff = i + 1;
                        break;
                    }
                }
            }

            std::vector<double> weights(cutoff);
            double mx = logp[idx[0]];
            double total = 0.0;
            for (size_t i = 0; i < cutoff; ++i) {
                weights[i] = std::exp((logp[idx[i]] - mx) / temperature);
                total += weights[i];
            }
            // Inverse-CDF draw with an explicit uniform so sampling is
            // reproducible across standard libraries.
            const double u =
                (static_cast<double>(rng() >> 11) / 9007199254740992.0) * total;
            double acc = 0.0;
            size_t chosen = cutoff - 1;
            for (size_t i = 0; i < cutoff; ++i) {
                acc += weights[i];
                if (u < acc) {
                    chosen = i;
                    break;
                }
            }
            const int tok = idx[chosen];
            h.prefix.push_back(tok);
            h.log_prob += logp[tok];
            h.finished = tok == lm.eos_id();
        }
        out.push_back(to_decoded(h, lm.eos_id()));
    }
    return out;
}

} // namespace

std::vector<DecodedSeq> decode_top_k(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                     int k, double temperature, int num_samples, int max_len,
                                     std::mt19937_64& rng) {
    if (k < 1) throw ConfigError("top-k sampling needs k >= 1");
    return decode_sampling(lm, source_ids, num_samples, max_len, temperature, rng, true, k, 0.0);
}

std::vector<DecodedSeq> decode_top_p(const ConditionalLM& lm, const std::vector<int>& source_ids,
                                     double p, double temperature, int num_samples, int max_len,
                                     std::mt19937_64& rng) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("top-p sampling needs p in (0, 1]");
    return decode_sampling(lm, source_ids, num_samples, max_len, temperature, rng, false, 0, p);
}

} // namespace pairrank
