#include "pairrank/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "pairrank/errors.hpp"

namespace pairrank {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json params_to_json(const std::vector<nn::Parameter*>& params) {
    json out = json::object();
    for (const nn::Parameter* p : params) {
        if (out.contains(p->name)) throw RuntimeFailure("duplicate parameter name " + p->name);
        out[p->name] = {{"rows", p->value.rows}, {"cols", p->value.cols}, {"data", p->value.w}};
    }
    return out;
}

void params_from_json(const json& j, const std::vector<nn::Parameter*>& params,
                      const std::string& path) {
    for (nn::Parameter* p : params) {
        if (!j.contains(p->name)) {
            throw DataError(path + ": checkpoint missing parameter \"" + p->name + "\"");
        }
        const json& pj = j[p->name];
        if (pj["rows"].get<int>() != p->value.rows || pj["cols"].get<int>() != p->value.cols) {
            throw DataError(path + ": shape mismatch for parameter \"" + p->name + "\"");
        }
        p->value.w = pj["data"].get<std::vector<double>>();
        p->zero_grad();
    }
    if (j.size() != params.size()) {
        throw DataError(path + ": checkpoint has " + std::to_string(j.size()) +
                        " parameters, model expects " + std::to_string(params.size()));
    }
}

void atomic_write(const std::string& path, const json& j) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("cannot write checkpoint: " + tmp);
        out << j.dump();
        if (!out) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw DataError("cannot move checkpoint into place: " + path);
    }
}

json read_checkpoint(const std::string& path, const std::string& expected_kind) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": checkpoint parse error: " + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion) {
        throw DataError(path + ": unsupported checkpoint format version");
    }
    if (!expected_kind.empty() && j["kind"].get<std::string>() != expected_kind) {
        throw DataError(path + ": checkpoint kind \"" + j["kind"].get<std::string>() +
                        "\", expected \"" + expected_kind + "\"");
    }
    return j;
}

json encoder_config_to_json(const nn::EncoderConfig& e) {
    return {{"width", e.width},         {"layers", e.layers},
            {"heads", e.heads},         {"ffn_mult", e.ffn_mult},
            {"max_positions", e.max_positions}, {"use_positions", e.use_positions},
            {"segment_kinds", e.segment_kinds}};
}

nn::EncoderConfig encoder_config_from_json(const json& j) {
    nn::EncoderConfig e;
    e.width = j["width"].get<int>();
    e.layers = j["layers"].get<int>();
    e.heads = j["heads"].get<int>();
    e.ffn_mult = j["ffn_mult"].get<int>();
    e.max_positions = j["max_positions"].get<int>();
    e.use_positions = j["use_positions"].get<bool>();
    e.segment_kinds = j["segment_kinds"].get<int>();
    return e;
}

} // namespace

void save_pair_reranker(const std::string& path, PairRerankerModel& model) {
    const auto& cfg = model.config();
    json j{{"format_version", kFormatVersion},
           {"kind", "pairreranker"},
           {"metrics", cfg.metrics},
           {"encoder", encoder_config_to_json(cfg.encoder)},
           {"limits", {{"source_max", cfg.limits.source_max}, {"cand_max", cfg.limits.cand_max}}},
           {"head_depth", cfg.head_depth},
           {"init_seed", cfg.init_seed},
           {"vocab_words", model.vocabulary().words()},
           {"params", params_to_json(model.parameters())}};
    atomic_write(path, j);
}

std::unique_ptr<PairRerankerModel> load_pair_reranker(const std::string& path) {
    const json j = read_checkpoint(path, "pairreranker");
    PairRerankerConfig cfg;
    cfg.metrics = j["metrics"].get<std::vector<std::string>>();
    cfg.encoder = encoder_config_from_json(j["encoder"]);
    cfg.limits.source_max = j["limits"]["source_max"].get<int>();
    cfg.limits.cand_max = j["limits"]["cand_max"].get<int>();
    cfg.head_depth = j["head_depth"].get<int>();
    cfg.init_seed = j["init_seed"].get<uint64_t>();
    Vocabulary vocab = Vocabulary::from_words(j["vocab_words"].get<std::vector<std::string>>());
    auto model = std::make_unique<PairRerankerModel>(std::move(vocab), cfg);
    params_from_json(j["params"], model->parameters(), path);
    return model;
}

void save_pointwise(const std::string& path, PointwiseModel& model) {
    const auto& cfg = model.config();
    json j{{"format_version", kFormatVersion},
           {"kind", pointwise_variant_name(cfg.variant)},
           {"metrics", cfg.metrics},
           {"encoder", encoder_config_to_json(cfg.encoder)},
           {"limits", {{"source_max", cfg.limits.source_max}, {"cand_max", cfg.limits.cand_max}}},
           {"head_depth", cfg.head_depth},
           {"lambda", cfg.lambda},
           {"init_seed", cfg.init_seed},
           {"vocab_words", model.vocabulary().words()},
           {"params", params_to_json(model.parameters())}};
    atomic_write(path, j);
}

std::unique_ptr<PointwiseModel> load_pointwise(const std::string& path) {
    const json j = read_checkpoint(path, "");
    const std::string kind = j["kind"].get<std::string>();
    PointwiseConfig cfg;
    cfg.variant = pointwise_variant_from_string(kind);
    cfg.metrics = j["metrics"].get<std::vector<std::string>>();
    cfg.encoder = encoder_config_from_json(j["encoder"]);
    cfg.limits.source_max = j["limits"]["source_max"].get<int>();
    cfg.limits.cand_max = j["limits"]["cand_max"].get<int>();
    cfg.head_depth = j["head_depth"].get<int>();
    cfg.lambda = j["lambda"].get<double>();
    cfg.init_seed = j["init_seed"].get<uint64_t>();
    Vocabulary vocab = Vocabulary::from_words(j["vocab_words"].get<std::vector<std::string>>());
    auto model = std::make_unique<PointwiseModel>(std::move(vocab), cfg);
    params_from_json(j["params"], model->parameters(), path);
    return model;
}

std::string checkpoint_kind(const std::string& path) {
    const json j = read_checkpoint(path, "");
    return j["kind"].get<std::string>();
}

void require_checkpoint_metrics(const std::vector<std::string>& checkpoint_metrics,
                                const std::vector<std::string>& expected,
                                const std::string& path) {
    if (checkpoint_metrics != expected) {
        std::string got, want;
        for (const auto& m : checkpoint_metrics) got += m + " ";
        for (const auto& m : expected) want += m + " ";
        throw ConfigError(path + ": checkpoint metric list [ " + got +
                          "] does not match requested [ " + want + "]");
    }
}

} // namespace pairrank
