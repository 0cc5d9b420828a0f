#include "pairrank/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pairrank/checkpoint.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/nn/optim.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

using nn::Tape;

std::string pointwise_variant_name(PointwiseVariant v) {
    return v == PointwiseVariant::simcls ? "simcls" : "summareranker";
}

PointwiseVariant pointwise_variant_from_string(const std::string& s) {
    if (s == "simcls") return PointwiseVariant::simcls;
    if (s == "summareranker") return PointwiseVariant::summareranker;
    throw ConfigError("unknown pointwise variant \"" + s + "\"");
}

PointwiseModel::PointwiseModel(Vocabulary vocab, PointwiseConfig cfg)
    : PointwiseModel(std::move(vocab), std::move(cfg), nullptr) {}

PointwiseModel::PointwiseModel(Vocabulary vocab, PointwiseConfig cfg,
                               std::unique_ptr<nn::SequenceEncoder> encoder)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)), encoder_(std::move(encoder)) {
    if (!encoder_) {
        encoder_ = std::make_unique<nn::TransformerEncoder>(vocab_.size(), cfg_.encoder,
                                                            cfg_.init_seed);
    }
    if (cfg_.variant == PointwiseVariant::summareranker) {
        if (cfg_.metrics.empty()) throw ConfigError("summareranker needs a nonempty metric list");
        nn::GaussianInit init(cfg_.init_seed ^ 0x505748ULL);
        head_ = MlpHead(encoder_->width(), static_cast<int>(cfg_.metrics.size()),
                        cfg_.head_depth, init);
    }
}

nn::Tape::Node* PointwiseModel::first_token_state(Tape& t, const std::string& text) {
    std::vector<int> ids = vocab_.encode(text);
    const int keep = std::max(1, cfg_.encoder.max_positions - 2);
    if (static_cast<int>(ids.size()) > keep) ids.resize(static_cast<size_t>(keep));
    ids.insert(ids.begin(), Vocabulary::kBos);
    ids.push_back(Vocabulary::kEos);
    Tape::Node* states = encoder_->encode(t, ids);
    return t.select_rows(states, {0});
}

std::vector<double> PointwiseModel::encode_text(const std::string& text) {
    Tape t;
    return first_token_state(t, text)->value.w;
}

nn::Tape::Node* PointwiseModel::cross_logits(Tape& t, const std::string& source,
                                             const std::string& candidate) {
    if (cfg_.variant != PointwiseVariant::summareranker) {
        throw RuntimeFailure("cross_logits: model is not a summareranker variant");
    }
    // Same layout as the pair model's first two segments.
    TruncationLimits lim = cfg_.limits;
    if (lim.source_max < 1 || lim.cand_max < 1) {
        const TruncationLimits d = default_limits(cfg_.encoder.max_positions);
        lim.source_max = d.source_max;
        lim.cand_max = d.cand_max * 2;
    }
    std::vector<int> src = vocab_.encode(source);
    std::vector<int> cand = vocab_.encode(candidate);
    if (static_cast<int>(src.size()) > lim.source_max) src.resize(lim.source_max);
    if (static_cast<int>(cand.size()) > lim.cand_max) cand.resize(lim.cand_max);
    if (src.empty() || cand.empty()) {
        throw DataError("cross_logits: source or candidate tokenized to nothing");
    }

    std::vector<int> ids{Vocabulary::kBos};
    std::vector<int> segments{0};
    const int source_anchor = static_cast<int>(ids.size());
    ids.push_back(Vocabulary::kSource);
    ids.insert(ids.end(), src.begin(), src.end());
    ids.push_back(Vocabulary::kEos);
    segments.insert(segments.end(), src.size() + 2, 0);
    const int cand_anchor = static_cast<int>(ids.size());
    ids.push_back(Vocabulary::kCand1);
    ids.insert(ids.end(), cand.begin(), cand.end());
    ids.push_back(Vocabulary::kEos);
    segments.insert(segments.end(), cand.size() + 2, 1);
    if (static_cast<int>(ids.size()) > cfg_.encoder.max_positions) {
        throw ConfigError("cross-encoder sequence exceeds capacity; limits misconfigured");
    }

    Tape::Node* states = encoder_->encode(t, ids, segments);
    Tape::Node* h_src = t.select_rows(states, {source_anchor});
    Tape::Node* h_cand = t.select_rows(states, {cand_anchor});
    return head_.apply(t, t.concat_cols({h_src, h_cand}));
}

std::vector<double> PointwiseModel::candidate_probs(const std::string& source,
                                                    const std::string& candidate) {
    Tape t;
    Tape::Node* probs = t.sigmoid(cross_logits(t, source, candidate));
    return probs->value.w;
}

double PointwiseModel::selection_score(const std::string& source, const std::string& candidate) {
    if (cfg_.variant == PointwiseVariant::simcls) {
        return simcls_score(*this, source, candidate);
    }
    const auto probs = candidate_probs(source, candidate);
    return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
}

std::vector<nn::Parameter*> PointwiseModel::parameters() {
    std::vector<nn::Parameter*> out = encoder_->parameters();
    if (cfg_.variant == PointwiseVariant::summareranker) head_.collect(out);
    return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw RuntimeFailure("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw RuntimeFailure("cosine: zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double simcls_score(PointwiseModel& model, const std::string& source,
                    const std::string& candidate) {
    if (model.variant() != PointwiseVariant::simcls) {
        throw RuntimeFailure("simcls_score: model is not a simcls variant");
    }
    return cosine(model.encode_text(source), model.encode_text(candidate));
}

double simcls_loss(const std::vector<double>& pred_sorted,
                   const std::vector<double>& quality_sorted, double ref_score, double lambda) {
    if (pred_sorted.size() != quality_sorted.size()) {
        throw RuntimeFailure("simcls_loss: score/quality length mismatch");
    }
    if (lambda < 0.0) throw ConfigError("simcls_loss: lambda must be >= 0");
    for (size_t i = 1; i < quality_sorted.size(); ++i) {
        if (quality_sorted[i] > quality_sorted[i - 1]) {
            throw DataError("simcls_loss: candidates are not sorted by descending metric score");
        }
    }
    double total = 0.0;
    for (double s : pred_sorted) total += std::max(0.0, s - ref_score);
    for (size_t i = 0; i < pred_sorted.size(); ++i) {
        for (size_t j = i + 1; j < pred_sorted.size(); ++j) {
            const double margin = static_cast<double>(j - i) * lambda;
            total += std::max(0.0, pred_sorted[j] - pred_sorted[i] + margin);
        }
    }
    return total;
}

namespace {

double clamp_prob(double p, bool& warned) {
    constexpr double eps = 1e-7;
    if (p <= 0.0 || p >= 1.0) {
        if (!warned) {
            std::fprintf(stderr, "warning: summareranker_loss clamping probability %g to [%g, %g]\n",
                         p, eps, 1.0 - eps);
            warned = true;
        }
        return std::clamp(p, eps, 1.0 - eps);
    }
    return p;
}

} // namespace

double summareranker_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& best_index) {
    if (probs.empty()) throw RuntimeFailure("summareranker_loss: no candidates");
    const size_t metric_count = probs.front().size();
    if (metric_count == 0 || best_index.size() != metric_count) {
        throw RuntimeFailure("summareranker_loss: one best index per metric required");
    }
    bool warned = false;
    double total = 0.0;
    for (size_t m = 0; m < metric_count; ++m) {
        const int best = best_index[m];
        if (best < 0 || best >= static_cast<int>(probs.size())) {
            throw RuntimeFailure("summareranker_loss: best index out of range");
        }
        double l = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            if (probs[i].size() != metric_count) {
                throw RuntimeFailure("summareranker_loss: ragged probability matrix");
            }
            const double p = clamp_prob(probs[i][m], warned);
            l += static_cast<int>(i) == best ? -std::log(p) : -std::log(1.0 - p);
        }
        total += l;
    }
    return total / static_cast<double>(metric_count);
}

double summareranker_loss(const std::vector<double>& probs, int best_index) {
    std::vector<std::vector<double>> matrix;
    matrix.reserve(probs.size());
    for (double p : probs) matrix.push_back({p});
    return summareranker_loss(matrix, std::vector<int>{best_index});
}

int rank_pointwise(PointwiseModel& model, const ScoredPool& pool) {
    if (pool.candidates.empty()) throw DataError("rank_pointwise: empty pool");
    int best = 0;
    double best_score = 0.0;
    for (int i = 0; i < pool.size(); ++i) {
        const double s = model.selection_score(pool.source, pool.candidates[i].text);
        if (i == 0 || s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

namespace {

// Shared tape composites for the two training losses.

Tape::Node* cosine_node(Tape& t, Tape::Node* a, Tape::Node* b) {
    Tape::Node* dot = t.sum_all(t.hadamard(a, b));
    Tape::Node* na = t.sqrt_op(t.add_const(t.sum_all(t.hadamard(a, a)), 1e-12));
    Tape::Node* nb = t.sqrt_op(t.add_const(t.sum_all(t.hadamard(b, b)), 1e-12));
    return t.scale_by(dot, t.reciprocal(t.hadamard(na, nb)));
}

} // namespace

Tape::Node* simcls_pool_loss(Tape& t, PointwiseModel& model, const ScoredPool& pool,
                             const std::vector<Metric>& metrics, double lambda) {
    // Candidates ordered by aggregate quality (best first).
    const std::vector<double> agg = aggregate_quality_ranks(pool, metrics);
    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (agg[a] != agg[b]) return agg[a] < agg[b];
        return a < b;
    });

    Tape::Node* h_src = model.first_token_state(t, pool.source);
    Tape::Node* ref = cosine_node(t, h_src, model.first_token_state(t, pool.target));
    std::vector<Tape::Node*> pred;
    pred.reserve(order.size());
    for (int idx : order) {
        pred.push_back(cosine_node(t, h_src, model.first_token_state(t, pool.candidates[idx].text)));
    }

    Tape::Node* loss = nullptr;
    auto accumulate = [&](Tape::Node* term) { loss = loss ? t.add(loss, term) : term; };
    for (auto* s : pred) accumulate(t.relu(t.sub(s, ref)));
    for (size_t i = 0; i < pred.size(); ++i) {
        for (size_t j = i + 1; j < pred.size(); ++j) {
            const double margin = static_cast<double>(j - i) * lambda;
            accumulate(t.relu(t.add_const(t.sub(pred[j], pred[i]), margin)));
        }
    }
    return loss;
}

Tape::Node* summareranker_pool_loss(Tape& t, PointwiseModel& model, const ScoredPool& pool,
                                    const std::vector<Metric>& metrics) {
    const int metric_count = static_cast<int>(metrics.size());
    std::vector<int> best(metric_count);
    for (int m = 0; m < metric_count; ++m) best[m] = oracle_select(pool, metrics[m]);

    Tape::Node* loss_vec = nullptr;  // 1 x |metrics|
    for (int i = 0; i < pool.size(); ++i) {
        Tape::Node* logits = model.cross_logits(t, pool.source, pool.candidates[i].text);
        nn::Mat pos(1, metric_count), neg(1, metric_count);
        for (int m = 0; m < metric_count; ++m) {
            pos.at(0, m) = best[m] == i ? 1.0 : 0.0;
            neg.at(0, m) = best[m] == i ? 0.0 : 1.0;
        }
        // -log sigma(l) for the metric's best candidate, -log(1 - sigma(l))
        // for the rest.
        Tape::Node* term = t.add(t.hadamard(t.constant(pos), t.softplus(t.scale(logits, -1.0))),
                                 t.hadamard(t.constant(neg), t.softplus(logits)));
        loss_vec = loss_vec ? t.add(loss_vec, term) : term;
    }
    return t.mean_all(loss_vec);
}

namespace {

double heldout_mean_loss(PointwiseModel& model, const std::vector<ScoredPool>& pools,
                         const std::vector<Metric>& metrics, double lambda) {
    if (pools.empty()) return -1.0;
    double total = 0.0;
    for (const auto& pool : pools) {
        Tape t;
        Tape::Node* loss = model.variant() == PointwiseVariant::simcls
                               ? simcls_pool_loss(t, model, pool, metrics, lambda)
                               : summareranker_pool_loss(t, model, pool, metrics);
        total += loss->value.at(0, 0);
    }
    return total / static_cast<double>(pools.size());
}

} // namespace

TrainResult train_pointwise(PointwiseModel& model, const std::vector<ScoredPool>& pools,
                            const std::vector<Metric>& metrics, const TrainConfig& cfg,
                            const std::string& checkpoint_path, const std::string& log_path) {
    cfg.validate();
    if (pools.empty()) throw DataError("train: empty pool list");
    if (model.variant() == PointwiseVariant::summareranker &&
        metric_names(metrics) != model.config().metrics) {
        throw ConfigError("train: metric list does not match the model's configured metrics");
    }
    for (const auto& pool : pools) {
        if (pool.size() < 2) {
            throw DataError("train: pool \"" + pool.example_id + "\" has fewer than 2 candidates");
        }
    }

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
        if (!checkpoint_path.empty()) save_pointwise(checkpoint_path, model);
        if (!log_path.empty()) write_train_log(log_path, result.log);
        return result;
    }

    const double lambda = model.config().lambda;
    const int64_t batches_per_epoch =
        static_cast<int64_t>((train.size() + cfg.batch_size - 1) /
                             static_cast<size_t>(cfg.batch_size));
    nn::LrSchedule schedule{cfg.max_learning_rate, cfg.epochs * batches_per_epoch,
                            cfg.warmup_ratio};
    nn::AdamOptimizer opt(model.parameters());

    double best_heldout_loss = 0.0;
    bool have_best = false;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<size_t> epoch_order(train.size());
        std::iota(epoch_order.begin(), epoch_order.end(), 0);
        std::mt19937_64 rng(mix_seed(cfg.seed, 0xF0000ULL + static_cast<uint64_t>(epoch)));
        for (size_t i = epoch_order.size() - 1; i > 0; --i) {
            std::swap(epoch_order[i], epoch_order[rng() % (i + 1)]);
        }

        size_t done = 0;
        while (done < epoch_order.size()) {
            const size_t end = std::min(done + static_cast<size_t>(cfg.batch_size),
                                        epoch_order.size());
            const size_t batch_n = end - done;
            opt.zero_grad();
            double batch_loss = 0.0;
            for (size_t i = done; i < end; ++i) {
                const ScoredPool& pool = train[epoch_order[i]];
                Tape t;
                Tape::Node* loss = model.variant() == PointwiseVariant::simcls
                                       ? simcls_pool_loss(t, model, pool, metrics, lambda)
                                       : summareranker_pool_loss(t, model, pool, metrics);
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

        const double hl = heldout_mean_loss(model, heldout, metrics, lambda);
        const bool improved = heldout.empty() || !have_best || hl < best_heldout_loss;
        if (!heldout.empty() && (!have_best || hl < best_heldout_loss)) {
            best_heldout_loss = hl;
            have_best = true;
        }
        if (improved && !checkpoint_path.empty()) save_pointwise(checkpoint_path, model);
    }
    result.steps = step;
    if (!log_path.empty()) write_train_log(log_path, result.log);
    return result;
}

} // namespace pairrank
