#include "pairrank/pair_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pairrank/checkpoint.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/nn/optim.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

using nn::Tape;

PairLossVariant pair_loss_variant_from_string(const std::string& s) {
    if (s == "symmetric_bce") return PairLossVariant::symmetric_bce;
    if (s == "literal") return PairLossVariant::literal;
    throw ConfigError("unknown pair loss variant \"" + s +
                      "\" (expected symmetric_bce or literal)");
}

std::string pair_loss_variant_name(PairLossVariant v) {
    return v == PairLossVariant::symmetric_bce ? "symmetric_bce" : "literal";
}

void TrainConfig::validate() const {
    if (k_pairs < 1) throw ConfigError("train: k_pairs must be >= 1");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_learning_rate <= 0.0) throw ConfigError("train: max_learning_rate must be > 0");
    if (warmup_ratio < 0.0 || warmup_ratio > 1.0) {
        throw ConfigError("train: warmup_ratio must be in [0, 1]");
    }
    if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) {
        throw ConfigError("train: heldout_fraction must be in [0, 1)");
    }
}

std::vector<double> aggregate_quality_ranks(const ScoredPool& pool,
                                            const std::vector<Metric>& metrics) {
    const int m = pool.size();
    std::vector<double> aggregate(m, 0.0);
    for (Metric metric : metrics) {
        const std::string name = metric_name(metric);
        std::vector<double> scores(m);
        for (int i = 0; i < m; ++i) {
            auto it = pool.candidates[i].scores.find(name);
            if (it == pool.candidates[i].scores.end()) {
                throw DataError("pool \"" + pool.example_id + "\" candidate " + std::to_string(i) +
                                " not scored for \"" + name + "\"");
            }
            scores[i] = it->second;
        }
        std::vector<int> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        // Fractional ranks: tied scores share the mean of their positions.
        int pos = 0;
        while (pos < m) {
            int end = pos;
            while (end + 1 < m && scores[order[end + 1]] == scores[order[pos]]) ++end;
            const double rank = (static_cast<double>(pos) + static_cast<double>(end)) / 2.0 + 1.0;
            for (int i = pos; i <= end; ++i) aggregate[order[i]] += rank;
            pos = end + 1;
        }
    }
    for (auto& v : aggregate) v /= static_cast<double>(metrics.size());
    return aggregate;
}

std::vector<PairSample> select_training_pairs(const ScoredPool& pool,
                                              const std::vector<Metric>& metrics, int k,
                                              std::mt19937_64& rng) {
    const int m = pool.size();
    if (m < 2 * k) {
        throw DataError("pool \"" + pool.example_id + "\" has " + std::to_string(m) +
                        " candidates, need at least " + std::to_string(2 * k) + " for k=" +
                        std::to_string(k));
    }
    const std::vector<double> aggregate = aggregate_quality_ranks(pool, metrics);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (aggregate[a] != aggregate[b]) return aggregate[a] < aggregate[b];
        return a < b;
    });

    std::vector<PairSample> out;
    out.reserve(k);
    for (int r = 0; r < k; ++r) {
        int best = order[r];
        int worst = order[m - 1 - r];
        // Intra-pair shuffle: either slot order is equally likely.
        const bool swap = (rng() & 1ULL) != 0;
        if (swap) std::swap(best, worst);
        PairSample s;
        s.source = pool.source;
        s.index_a = best;
        s.index_b = worst;
        s.cand_a = pool.candidates[best].text;
        s.cand_b = pool.candidates[worst].text;
        for (Metric metric : metrics) {
            const std::string name = metric_name(metric);
            const double a = pool.candidates[best].scores.at(name);
            const double b = pool.candidates[worst].scores.at(name);
            s.labels.push_back(a >= b ? 1 : 0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

void check_finite(const ScoreVector& s, const char* what) {
    for (double v : s) {
        if (!std::isfinite(v)) throw RuntimeFailure(std::string("pair_loss: non-finite ") + what);
    }
}

} // namespace

double pair_loss(const ScoreVector& s_a, const ScoreVector& s_b, const std::vector<int>& labels,
                 PairLossVariant variant) {
    if (s_a.size() != s_b.size() || s_a.size() != labels.size()) {
        throw RuntimeFailure("pair_loss: score/label length mismatch");
    }
    if (s_a.empty()) throw RuntimeFailure("pair_loss: empty score vectors");
    check_finite(s_a, "slot-a score");
    check_finite(s_b, "slot-b score");

    double total = 0.0;
    for (size_t m = 0; m < s_a.size(); ++m) {
        const double z = labels[m] ? 1.0 : 0.0;
        if (variant == PairLossVariant::symmetric_bce) {
            // BCE of both slots against their labels, counted for the pair
            // read in both slot orders; the two orders contribute equally.
            const double one_order = z * (nn::stable_softplus(-s_a[m]) + nn::stable_softplus(s_b[m])) +
                                     (1.0 - z) * (nn::stable_softplus(s_a[m]) +
                                                  nn::stable_softplus(-s_b[m]));
            total += 2.0 * one_order;
        } else {
            // As printed: -z_a log sigma(s_a) - (1 - z_b) log sigma(s_b),
            // with z_b = 1 - z_a.
            total += z * (nn::stable_softplus(-s_a[m]) + nn::stable_softplus(-s_b[m]));
        }
    }
    return total / static_cast<double>(s_a.size());
}

Tape::Node* pair_loss_node(Tape& t, Tape::Node* s_a, Tape::Node* s_b,
                           const std::vector<int>& labels, PairLossVariant variant) {
    const int m = s_a->value.cols;
    if (s_a->value.rows != 1 || s_b->value.rows != 1 || s_b->value.cols != m ||
        static_cast<int>(labels.size()) != m) {
        throw RuntimeFailure("pair_loss_node: expected 1 x |metrics| score rows");
    }
    nn::Mat z(1, m), zc(1, m);
    for (int i = 0; i < m; ++i) {
        z.at(0, i) = labels[i] ? 1.0 : 0.0;
        zc.at(0, i) = labels[i] ? 0.0 : 1.0;
    }
    Tape::Node* zn = t.constant(z);
    Tape::Node* zcn = t.constant(zc);
    Tape::Node* neg_a = t.scale(s_a, -1.0);
    Tape::Node* neg_b = t.scale(s_b, -1.0);
    if (variant == PairLossVariant::symmetric_bce) {
        Tape::Node* correct = t.hadamard(zn, t.add(t.softplus(neg_a), t.softplus(s_b)));
        Tape::Node* flipped = t.hadamard(zcn, t.add(t.softplus(s_a), t.softplus(neg_b)));
        return t.scale(t.mean_all(t.add(correct, flipped)), 2.0);
    }
    return t.mean_all(t.hadamard(zn, t.add(t.softplus(neg_a), t.softplus(neg_b))));
}

void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write training log: " + path);
    for (const auto& e : log) {
        nlohmann::json j{{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}};
        if (e.heldout_pair_acc) j["heldout_pair_acc"] = *e.heldout_pair_acc;
        out << j.dump() << '\n';
    }
}

namespace {

double accuracy_on_samples(PairRerankerModel& model, const std::vector<PairSample>& samples) {
    if (samples.empty()) return -1.0;
    int64_t hits = 0, total = 0;
    for (const auto& s : samples) {
        auto [sa, sb] = model.score(s.source, s.cand_a, s.cand_b);
        for (size_t m = 0; m < s.labels.size(); ++m) {
            const bool predicted_a = sa[m] >= sb[m];
            const bool label_a = s.labels[m] == 1;
            hits += predicted_a == label_a ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<PairSample> samples_for_pools(const std::vector<ScoredPool>& pools,
                                          const std::vector<Metric>& metrics, int k,
                                          uint64_t seed) {
    std::vector<PairSample> out;
    for (size_t i = 0; i < pools.size(); ++i) {
        std::mt19937_64 rng(mix_seed(seed, hash_text(pools[i].example_id)));
        auto ps = select_training_pairs(pools[i], metrics, k, rng);
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

} // namespace

double pairwise_accuracy(PairRerankerModel& model, const std::vector<ScoredPool>& pools,
                         const std::vector<Metric>& metrics, int k_pairs, uint64_t seed) {
    return accuracy_on_samples(model, samples_for_pools(pools, metrics, k_pairs, seed));
}

TrainResult train_pair_reranker(PairRerankerModel& model, const std::vector<ScoredPool>& pools,
                                const std::vector<Metric>& metrics, const TrainConfig& cfg,
                                const std::string& checkpoint_path,
                                const std::string& log_path) {
    cfg.validate();
    if (pools.empty()) throw DataError("train: empty pool list");
    if (metric_names(metrics) != model.metrics()) {
        throw ConfigError("train: metric list does not match the model's configured metrics");
    }

    // Seeded held-out slice for model selection.
    std::vector<size_t> order(pools.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 split_rng(mix_seed(cfg.seed, 0x484f4c44ULL));
    for (size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[split_rng() % (i + 1)]);
    }
    size_t heldout_n = 0;
    if (pools.size() >= 2 && cfg.heldout_fraction > 0.0) {
        heldout_n = std::max<size_t>(
            1, static_cast<size_t>(std::llround(cfg.heldout_fraction * pools.size())));
        if (heldout_n >= pools.size()) heldout_n = pools.size() - 1;
    }
    std::vector<ScoredPool> heldout, train;
    for (size_t i = 0; i < order.size(); ++i) {
        (i < heldout_n ? heldout : train).push_back(pools[order[i]]);
    }

    TrainResult result;
    if (cfg.epochs == 0) {
        if (!checkpoint_path.empty()) save_pair_reranker(checkpoint_path, model);
        if (!log_path.empty()) write_train_log(log_path, result.log);
        return result;
    }

    const int64_t batches_per_epoch = static_cast<int64_t>(
        (train.size() * static_cast<size_t>(cfg.k_pairs) + cfg.batch_size - 1) /
        static_cast<size_t>(cfg.batch_size));
    nn::LrSchedule schedule{cfg.max_learning_rate, cfg.epochs * batches_per_epoch,
                            cfg.warmup_ratio};
    nn::AdamOptimizer opt(model.parameters());

    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fresh slot orientations each epoch.
        std::vector<PairSample> samples =
            samples_for_pools(train, metrics, cfg.k_pairs,
                              mix_seed(cfg.seed, 0xE0000ULL + static_cast<uint64_t>(epoch)));
        std::mt19937_64 order_rng(mix_seed(cfg.seed, 0xF0000ULL + static_cast<uint64_t>(epoch)));
        for (size_t i = samples.size() - 1; i > 0; --i) {
            std::swap(samples[i], samples[order_rng() % (i + 1)]);
        }

        size_t done = 0;
        while (done < samples.size()) {
            const size_t end = std::min(done + static_cast<size_t>(cfg.batch_size),
                                        samples.size());
            const size_t batch_n = end - done;
            opt.zero_grad();
            double batch_loss = 0.0;
            for (size_t i = done; i < end; ++i) {
                const PairSample& s = samples[i];
                Tape t;
                const PairInput input = model.assemble(s.source, s.cand_a, s.cand_b);
                auto [sa, sb] = model.score_nodes(t, input);
                Tape::Node* loss = pair_loss_node(t, sa, sb, s.labels, cfg.loss_variant);
                t.backward(loss);
                batch_loss += loss->value.at(0, 0);
            }
            for (nn::Parameter* p : model.parameters()) {
                for (auto& g : p->grad.w) g /= static_cast<double>(batch_n);
            }
            ++step;
            const double lr = schedule.at(step);
            opt.step(lr);
            result.log.push_back(
                {cfg.step_offset + step, batch_loss / static_cast<double>(batch_n), lr, {}});
            result.final_loss = batch_loss / static_cast<double>(batch_n);
            done = end;
        }

        // Held-out pairwise accuracy with a fixed per-epoch orientation.
        const double acc = heldout.empty()
                               ? -1.0
                               : pairwise_accuracy(model, heldout, metrics, cfg.k_pairs,
                                                   mix_seed(cfg.seed, 0xACCULL));
        if (!result.log.empty()) result.log.back().heldout_pair_acc =
            acc >= 0.0 ? std::optional<double>(acc) : std::nullopt;
        const bool improved = heldout.empty() || acc > result.best_heldout_acc;
        if (acc > result.best_heldout_acc) result.best_heldout_acc = acc;
        if (improved && !checkpoint_path.empty()) save_pair_reranker(checkpoint_path, model);
    }
    result.steps = step;
    if (!log_path.empty()) write_train_log(log_path, result.log);
    return result;
}

double gradient_check(PairRerankerModel& model, const PairSample& sample,
                      PairLossVariant variant, double step) {
    if (step <= 0.0) throw ConfigError("gradient_check: step must be > 0");

    const PairInput input = model.assemble(sample.source, sample.cand_a, sample.cand_b);
    auto loss_value = [&]() {
        Tape t;
        auto [sa, sb] = model.score_nodes(t, input);
        Tape::Node* loss = pair_loss_node(t, sa, sb, sample.labels, variant);
        return loss->value.at(0, 0);
    };

    for (nn::Parameter* p : model.parameters()) p->zero_grad();
    {
        Tape t;
        auto [sa, sb] = model.score_nodes(t, input);
        Tape::Node* loss = pair_loss_node(t, sa, sb, sample.labels, variant);
        t.backward(loss);
    }

    double max_rel = 0.0;
    for (nn::Parameter* p : model.head_parameters()) {
        for (size_t i = 0; i < p->value.w.size(); ++i) {
            const double saved = p->value.w[i];
            p->value.w[i] = saved + step;
            const double up = loss_value();
            p->value.w[i] = saved - step;
            const double down = loss_value();
            p->value.w[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = p->grad.w[i];
            const double rel = std::fabs(analytic - numeric) /
                               std::max(1e-4, std::fabs(analytic) + std::fabs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    for (nn::Parameter* p : model.parameters()) p->zero_grad();
    return max_rel;
}

} // namespace pairrank
