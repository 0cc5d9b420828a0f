#include "pairrank/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "pairrank/checkpoint.hpp"
#include "pairrank/dataset.hpp"
#include "pairrank/errors.hpp"
#include "pairrank/report.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing ----

class ErrorCollector {
public:
    void add(const std::string& msg) { errors_.push_back(msg); }
    template <class Fn>
    void guard(Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errors_.push_back(e.what());
        }
    }
    void raise_if_any(const std::string& context) const {
        if (errors_.empty()) return;
        std::string msg = context + ":";
        for (const auto& e : errors_) msg += "\n  - " + e;
        throw ConfigError(msg);
    }

private:
    std::vector<std::string> errors_;
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where,
                ErrorCollector& errors) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) errors.add(where + ": unknown key \"" + key + "\"");
    }
}

DecodingConfig decoding_from_json(const json& j, const std::string& where,
                                  ErrorCollector& errors) {
    DecodingConfig cfg;
    check_keys(j,
               {"method", "num_candidates", "beam_width", "diversity_groups", "diversity_penalty",
                "k", "p", "temperature", "seed", "max_len"},
               where, errors);
    errors.guard([&] {
        if (!j.contains("method")) throw ConfigError(where + ": missing \"method\"");
        cfg.method = decoding_method_from_string(j["method"].get<std::string>());
    });
    if (j.contains("num_candidates")) cfg.num_candidates = j["num_candidates"].get<int>();
    if (j.contains("beam_width")) cfg.beam_width = j["beam_width"].get<int>();
    if (j.contains("diversity_groups")) cfg.diversity_groups = j["diversity_groups"].get<int>();
    if (j.contains("diversity_penalty")) cfg.diversity_penalty = j["diversity_penalty"].get<double>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("p")) cfg.p = j["p"].get<double>();
    if (j.contains("temperature")) cfg.temperature = j["temperature"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<int64_t>();
    if (j.contains("max_len")) cfg.max_len = j["max_len"].get<int>();
    errors.guard([&] { cfg.validate(); });
    return cfg;
}

json decoding_to_json(const DecodingConfig& cfg) {
    json j{{"method", decoding_method_name(cfg.method)},
           {"num_candidates", cfg.num_candidates},
           {"beam_width", cfg.beam_width},
           {"diversity_groups", cfg.diversity_groups},
           {"diversity_penalty", cfg.diversity_penalty},
           {"k", cfg.k},
           {"p", cfg.p},
           {"temperature", cfg.temperature},
           {"max_len", cfg.max_len}};
    if (cfg.seed) j["seed"] = *cfg.seed;
    return j;
}

nn::EncoderConfig encoder_from_json(const json& j, const std::string& where,
                                    ErrorCollector& errors) {
    nn::EncoderConfig e;
    check_keys(j,
               {"width", "layers", "heads", "ffn_mult", "max_positions", "use_positions",
                "segment_kinds"},
               where, errors);
    if (j.contains("width")) e.width = j["width"].get<int>();
    if (j.contains("layers")) e.layers = j["layers"].get<int>();
    if (j.contains("heads")) e.heads = j["heads"].get<int>();
    if (j.contains("ffn_mult")) e.ffn_mult = j["ffn_mult"].get<int>();
    if (j.contains("max_positions")) e.max_positions = j["max_positions"].get<int>();
    if (j.contains("use_positions")) e.use_positions = j["use_positions"].get<bool>();
    if (j.contains("segment_kinds")) e.segment_kinds = j["segment_kinds"].get<int>();
    if (e.width < 1 || e.layers < 1 || e.heads < 1 || e.max_positions < 16) {
        errors.add(where + ": width/layers/heads must be >= 1 and max_positions >= 16");
    } else if (e.width % e.heads != 0) {
        errors.add(where + ": width must be divisible by heads");
    }
    return e;
}

json encoder_to_json(const nn::EncoderConfig& e) {
    return {{"width", e.width},
            {"layers", e.layers},
            {"heads", e.heads},
            {"ffn_mult", e.ffn_mult},
            {"max_positions", e.max_positions},
            {"use_positions", e.use_positions},
            {"segment_kinds", e.segment_kinds}};
}

// ---- output directory management ----

void ensure_out_dirs(const RunConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("output directory not set (use \"out\" or --out)");
    for (const char* sub : {"", "pools", "checkpoints", "selections", "reports"}) {
        fs::create_directories(fs::path(config.out_dir) / sub);
    }
}

/// One writer per output directory.
class DirLock {
public:
    explicit DirLock(const std::string& out_dir) : path_(fs::path(out_dir) / ".lock") {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw RuntimeFailure("output directory is locked by another command (remove " +
                                 path_.string() + " if stale)");
        }
        ::close(fd);
    }
    ~DirLock() { ::unlink(path_.c_str()); }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
};

void write_effective_config(const RunConfig& config) {
    std::ofstream out(fs::path(config.out_dir) / "config.effective.json");
    if (!out) throw DataError("cannot write effective config");
    out << render_run_config(config);
}

std::string pool_path(const RunConfig& config, const std::string& name) {
    return (fs::path(config.out_dir) / "pools" / (name + ".jsonl")).string();
}

GeneratorFactory make_factory(const RunConfig& config, const std::vector<Example>& all_examples) {
    if (config.generator.kind == "stub") {
        auto opts = config.generator.stub;
        return [all_examples, opts](const std::vector<Example>& half, uint64_t seed) {
            // The stub does not train; the half's ids only flavor its seed so
            // the two half-generators differ like two fine-tunes would.
            uint64_t half_tag = 0;
            for (const auto& ex : half) half_tag ^= hash_text(ex.id);
            return std::unique_ptr<TextGenerator>(
                new StubGenerator(all_examples, opts, mix_seed(seed, half_tag)));
        };
    }
    auto tiny_cfg = config.generator.tiny;
    return [tiny_cfg](const std::vector<Example>& half, uint64_t seed) {
        std::vector<std::string> texts;
        for (const auto& ex : half) {
            texts.push_back(ex.source);
            texts.push_back(ex.target);
        }
        auto model = std::make_shared<TinySeq2Seq>(Vocabulary::build(texts, tiny_cfg.vocab_cap),
                                                   tiny_cfg, mix_seed(seed, 0x7419ULL));
        model->train(half, mix_seed(seed, 0x7442ULL));
        return std::unique_ptr<TextGenerator>(new TinyGenerator(std::move(model)));
    };
}

Vocabulary vocabulary_from_pools(const std::vector<ScoredPool>& pools, size_t cap) {
    std::vector<std::string> texts;
    for (const auto& pool : pools) {
        texts.push_back(pool.source);
        if (!pool.target.empty()) texts.push_back(pool.target);
        for (const auto& c : pool.candidates) texts.push_back(c.text);
    }
    return Vocabulary::build(texts, cap);
}

} // namespace

WinnerRule RunConfig::winner_rule() const {
    if (inference.winner_rule == "mean") return {};
    const auto names = metric_names(metrics);
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == inference.winner_rule) return {static_cast<int>(i)};
    }
    throw ConfigError("inference.winner_rule \"" + inference.winner_rule +
                      "\" is neither \"mean\" nor a configured metric");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": config parse error: " + std::string(e.what()));
    }

    ErrorCollector errors;
    RunConfig config;
    check_keys(j,
               {"dataset", "generator", "decoding", "oracle_decoding", "metrics", "model",
                "train", "inference", "seeds", "out"},
               "config", errors);

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        check_keys(d, {"train", "val", "test"}, "dataset", errors);
        if (d.contains("train")) config.train_path = d["train"].get<std::string>();
        if (d.contains("val")) config.val_path = d["val"].get<std::string>();
        if (d.contains("test")) config.test_path = d["test"].get<std::string>();
    }

    if (j.contains("generator")) {
        const json& g = j["generator"];
        check_keys(g, {"kind", "stub", "tiny"}, "generator", errors);
        if (g.contains("kind")) config.generator.kind = g["kind"].get<std::string>();
        if (config.generator.kind != "stub" && config.generator.kind != "tiny") {
            errors.add("generator.kind must be \"stub\" or \"tiny\"");
        }
        if (g.contains("stub")) {
            const json& s = g["stub"];
            check_keys(s, {"base_noise", "noise_step", "shuffle_quality"}, "generator.stub",
                       errors);
            if (s.contains("base_noise")) config.generator.stub.base_noise = s["base_noise"].get<double>();
            if (s.contains("noise_step")) config.generator.stub.noise_step = s["noise_step"].get<double>();
            if (s.contains("shuffle_quality")) {
                config.generator.stub.shuffle_quality = s["shuffle_quality"].get<bool>();
            }
        }
        if (g.contains("tiny")) {
            const json& t = g["tiny"];
            check_keys(t,
                       {"arch", "vocab_cap", "max_source_len", "max_target_len", "epochs",
                        "learning_rate", "batch_size"},
                       "generator.tiny", errors);
            if (t.contains("arch")) {
                config.generator.tiny.arch = encoder_from_json(t["arch"], "generator.tiny.arch",
                                                               errors);
            }
            if (t.contains("vocab_cap")) config.generator.tiny.vocab_cap = t["vocab_cap"].get<size_t>();
            if (t.contains("max_source_len")) {
                config.generator.tiny.max_source_len = t["max_source_len"].get<int>();
            }
            if (t.contains("max_target_len")) {
                config.generator.tiny.max_target_len = t["max_target_len"].get<int>();
            }
            if (t.contains("epochs")) config.generator.tiny.epochs = t["epochs"].get<int>();
            if (t.contains("learning_rate")) {
                config.generator.tiny.learning_rate = t["learning_rate"].get<double>();
            }
            if (t.contains("batch_size")) config.generator.tiny.batch_size = t["batch_size"].get<int>();
        }
    }

    auto parse_decoding_list = [&](const char* key, std::vector<DecodingConfig>& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) {
            errors.add(std::string(key) + " must be an array of decoding configs");
            return;
        }
        int idx = 0;
        for (const auto& dj : j[key]) {
            out.push_back(
                decoding_from_json(dj, std::string(key) + "[" + std::to_string(idx++) + "]", errors));
        }
    };
    parse_decoding_list("decoding", config.decoding);
    parse_decoding_list("oracle_decoding", config.oracle_decoding);

    if (j.contains("metrics")) {
        errors.guard([&] {
            config.metrics = parse_metric_list(j["metrics"].get<std::vector<std::string>>());
        });
    }

    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m,
                   {"encoder", "head_depth", "source_max", "cand_max", "vocab_cap", "lambda"},
                   "model", errors);
        if (m.contains("encoder")) {
            config.model.encoder = encoder_from_json(m["encoder"], "model.encoder", errors);
        }
        if (m.contains("head_depth")) config.model.head_depth = m["head_depth"].get<int>();
        if (m.contains("source_max")) config.model.limits.source_max = m["source_max"].get<int>();
        if (m.contains("cand_max")) config.model.limits.cand_max = m["cand_max"].get<int>();
        if (m.contains("vocab_cap")) config.model.vocab_cap = m["vocab_cap"].get<size_t>();
        if (m.contains("lambda")) config.model.lambda = m["lambda"].get<double>();
        if (config.model.head_depth < 1) errors.add("model.head_depth must be >= 1");
    }

    if (j.contains("train")) {
        const json& t = j["train"];
        check_keys(t,
                   {"k_pairs", "epochs", "batch_size", "max_learning_rate", "warmup_ratio",
                    "loss_variant", "heldout_fraction"},
                   "train", errors);
        if (t.contains("k_pairs")) config.train.k_pairs = t["k_pairs"].get<int>();
        if (t.contains("epochs")) config.train.epochs = t["epochs"].get<int>();
        if (t.contains("batch_size")) config.train.batch_size = t["batch_size"].get<int>();
        if (t.contains("max_learning_rate")) {
            config.train.max_learning_rate = t["max_learning_rate"].get<double>();
        }
        if (t.contains("warmup_ratio")) config.train.warmup_ratio = t["warmup_ratio"].get<double>();
        if (t.contains("loss_variant")) {
            errors.guard([&] {
                config.train.loss_variant =
                    pair_loss_variant_from_string(t["loss_variant"].get<std::string>());
            });
        }
        if (t.contains("heldout_fraction")) {
            config.train.heldout_fraction = t["heldout_fraction"].get<double>();
        }
        errors.guard([&] { config.train.validate(); });
    }

    if (j.contains("inference")) {
        const json& i = j["inference"];
        check_keys(i, {"mode", "winner_rule", "trace", "consistency_pairs"}, "inference", errors);
        if (i.contains("mode")) config.inference.mode = i["mode"].get<std::string>();
        if (i.contains("winner_rule")) config.inference.winner_rule = i["winner_rule"].get<std::string>();
        if (i.contains("trace")) config.inference.trace = i["trace"].get<bool>();
        if (i.contains("consistency_pairs")) {
            config.inference.consistency_pairs = i["consistency_pairs"].get<int>();
        }
        if (config.inference.mode != "bubble" && config.inference.mode != "round_robin" &&
            config.inference.mode != "pointwise") {
            errors.add("inference.mode \"" + config.inference.mode +
                       "\" must be bubble, round_robin, or pointwise");
        }
        if (config.inference.consistency_pairs < 1) {
            errors.add("inference.consistency_pairs must be >= 1");
        }
    }

    if (j.contains("seeds")) {
        const json& s = j["seeds"];
        check_keys(s, {"data", "model", "shuffle"}, "seeds", errors);
        if (s.contains("data")) config.seed_data = s["data"].get<int64_t>();
        if (s.contains("model")) config.seed_model = s["model"].get<int64_t>();
        if (s.contains("shuffle")) config.seed_shuffle = s["shuffle"].get<int64_t>();
    }

    if (j.contains("out")) config.out_dir = j["out"].get<std::string>();

    errors.raise_if_any("invalid config " + path);
    return config;
}

void validate_run_config(const RunConfig& config) {
    ErrorCollector errors;
    if (config.seed_data < 0) errors.add("seeds.data must be set explicitly (>= 0)");
    if (config.seed_model < 0) errors.add("seeds.model must be set explicitly (>= 0)");
    if (config.seed_shuffle < 0) errors.add("seeds.shuffle must be set explicitly (>= 0)");
    if (config.metrics.empty()) errors.add("metrics list must be nonempty");
    if (config.out_dir.empty()) errors.add("output directory must be set (\"out\" or --out)");
    errors.guard([&] {
        if (!config.metrics.empty()) (void)config.winner_rule();
    });
    errors.raise_if_any("invalid run configuration");
}

std::string render_run_config(const RunConfig& config) {
    json j;
    j["dataset"] = {{"train", config.train_path}, {"val", config.val_path},
                    {"test", config.test_path}};
    j["generator"] = {{"kind", config.generator.kind},
                      {"stub",
                       {{"base_noise", config.generator.stub.base_noise},
                        {"noise_step", config.generator.stub.noise_step},
                        {"shuffle_quality", config.generator.stub.shuffle_quality}}},
                      {"tiny",
                       {{"arch", encoder_to_json(config.generator.tiny.arch)},
                        {"vocab_cap", config.generator.tiny.vocab_cap},
                        {"max_source_len", config.generator.tiny.max_source_len},
                        {"max_target_len", config.generator.tiny.max_target_len},
                        {"epochs", config.generator.tiny.epochs},
                        {"learning_rate", config.generator.tiny.learning_rate},
                        {"batch_size", config.generator.tiny.batch_size}}}};
    j["decoding"] = json::array();
    for (const auto& d : config.decoding) j["decoding"].push_back(decoding_to_json(d));
    j["oracle_decoding"] = json::array();
    for (const auto& d : config.oracle_decoding) j["oracle_decoding"].push_back(decoding_to_json(d));
    j["metrics"] = metric_names(config.metrics);
    j["model"] = {{"encoder", encoder_to_json(config.model.encoder)},
                  {"head_depth", config.model.head_depth},
                  {"source_max", config.model.limits.source_max},
                  {"cand_max", config.model.limits.cand_max},
                  {"vocab_cap", config.model.vocab_cap},
                  {"lambda", config.model.lambda}};
    j["train"] = {{"k_pairs", config.train.k_pairs},
                  {"epochs", config.train.epochs},
                  {"batch_size", config.train.batch_size},
                  {"max_learning_rate", config.train.max_learning_rate},
                  {"warmup_ratio", config.train.warmup_ratio},
                  {"loss_variant", pair_loss_variant_name(config.train.loss_variant)},
                  {"heldout_fraction", config.train.heldout_fraction}};
    j["inference"] = {{"mode", config.inference.mode},
                      {"winner_rule", config.inference.winner_rule},
                      {"trace", config.inference.trace},
                      {"consistency_pairs", config.inference.consistency_pairs}};
    j["seeds"] = {{"data", config.seed_data}, {"model", config.seed_model},
                  {"shuffle", config.seed_shuffle}};
    j["out"] = config.out_dir;
    return j.dump(2) + "\n";
}

void write_selections(const std::string& path, const std::vector<SelectionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write selections: " + path);
    for (const auto& r : records) {
        json j{{"example_id", r.example_id},
               {"selected_index", r.selected_index},
               {"selected_text", r.selected_text}};
        out << j.dump() << '\n';
    }
}

std::vector<SelectionRecord> read_selections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open selections: " + path);
    std::vector<SelectionRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
        }
        SelectionRecord r;
        r.example_id = j.at("example_id").get<std::string>();
        r.selected_index = j.at("selected_index").get<int>();
        r.selected_text = j.value("selected_text", std::string());
        out.push_back(std::move(r));
    }
    return out;
}

// ---- commands ----

void run_generate(const RunConfig& config) {
    validate_run_config(config);
    ErrorCollector errors;
    if (config.train_path.empty()) errors.add("dataset.train is required for generate");
    if (config.decoding.empty()) errors.add("decoding list is required for generate");
    if (!config.train_path.empty() && !fs::exists(config.train_path)) {
        errors.add("dataset.train does not exist: " + config.train_path);
    }
    if (!config.val_path.empty() && !fs::exists(config.val_path)) {
        errors.add("dataset.val does not exist: " + config.val_path);
    }
    if (!config.test_path.empty() && !fs::exists(config.test_path)) {
        errors.add("dataset.test does not exist: " + config.test_path);
    }
    errors.raise_if_any("generate: invalid configuration");

    const std::vector<Example> train = load_dataset(config.train_path);
    const std::vector<Example> val =
        config.val_path.empty() ? std::vector<Example>{} : load_dataset(config.val_path);
    const std::vector<Example> test =
        config.test_path.empty() ? std::vector<Example>{} : load_dataset(config.test_path);

    std::vector<Example> all = train;
    all.insert(all.end(), val.begin(), val.end());
    all.insert(all.end(), test.begin(), test.end());

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);

    const GeneratorFactory factory = make_factory(config, all);
    const HalfSplitPlan plan = make_half_split(train, config.seed_data);
    const TrainingPools training =
        build_training_pools(factory, train, plan, config.decoding,
                             static_cast<uint64_t>(config.seed_model));
    write_pools(pool_path(config, "train"), training.pools);

    // Validation and test candidates come from the generator trained on the
    // full training set (inference-style candidates).
    const auto full_gen = factory(train, mix_seed(static_cast<uint64_t>(config.seed_model),
                                                  0xF0F0ULL));
    auto generate_split = [&](const std::vector<Example>& examples, const std::string& name) {
        if (examples.empty()) return;
        std::vector<ScoredPool> pools;
        pools.reserve(examples.size());
        for (const auto& ex : examples) {
            std::vector<ScoredPool> per_config;
            for (const auto& cfg : config.decoding) {
                per_config.push_back(generate_candidates(*full_gen, ex, cfg));
            }
            pools.push_back(merge_pools(per_config));
        }
        write_pools(pool_path(config, name), pools);
    };
    generate_split(val, "val");
    generate_split(test, "test");

    write_half_split((fs::path(config.out_dir) / "half_split.json").string(), plan);
    json manifest{{"seeds",
                   {{"data", config.seed_data}, {"model", config.seed_model},
                    {"shuffle", config.seed_shuffle}}},
                  {"generator", config.generator.kind},
                  {"decoding", json::array()},
                  {"provenance", training.generator_half}};
    for (const auto& d : config.decoding) manifest["decoding"].push_back(decoding_to_json(d));
    std::ofstream mout(fs::path(config.out_dir) / "manifest.json");
    if (!mout) throw DataError("cannot write manifest");
    mout << manifest.dump(2) << '\n';

    std::cout << "generated pools: train=" << training.pools.size() << " val=" << val.size()
              << " test=" << test.size() << " (candidates per pool: "
              << (training.pools.empty() ? 0 : training.pools.front().size()) << ")\n";
}

void run_score(const RunConfig& config, const std::vector<std::string>& pool_files) {
    validate_run_config(config);
    std::vector<std::string> files = pool_files;
    if (files.empty()) {
        for (const char* name : {"train", "val", "test"}) {
            const std::string p = pool_path(config, name);
            if (fs::exists(p)) files.push_back(p);
        }
        if (files.empty()) {
            throw DataError("score: no pool files found under " + config.out_dir +
                            "/pools (run generate first or pass --pools)");
        }
    }
    for (const auto& f : files) {
        if (!fs::exists(f)) throw DataError("score: pool file does not exist: " + f);
    }
    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);
    // Score everything first so a failure on a later file leaves no file
    // half-updated.
    std::vector<std::vector<ScoredPool>> scored;
    scored.reserve(files.size());
    for (const auto& f : files) {
        std::vector<ScoredPool> pools = read_pools(f);
        score_pools(pools, config.metrics);
        scored.push_back(std::move(pools));
    }
    for (size_t i = 0; i < files.size(); ++i) {
        write_pools(files[i], scored[i]);
        std::cout << "scored " << scored[i].size() << " pools in " << files[i] << " on "
                  << config.metrics.size() << " metrics\n";
    }
}

void run_train(const RunConfig& config, const std::string& method, bool resume) {
    validate_run_config(config);
    if (method != "pairreranker" && method != "simcls" && method != "summareranker") {
        throw ConfigError("unknown training method \"" + method +
                          "\" (expected pairreranker, simcls, summareranker)");
    }
    const std::string train_file = pool_path(config, "train");
    if (!fs::exists(train_file)) {
        throw DataError("train: " + train_file + " not found (run generate and score first)");
    }
    std::vector<ScoredPool> pools = read_pools(train_file);
    if (pools.empty()) throw DataError("train: no pools in " + train_file);

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);

    const std::string ckpt = (fs::path(config.out_dir) / "checkpoints" / (method + ".json")).string();
    const std::string log_file =
        (fs::path(config.out_dir) / "checkpoints" / (method + ".log.jsonl")).string();

    TrainConfig tc = config.train;
    tc.seed = mix_seed(static_cast<uint64_t>(config.seed_shuffle), hash_text(method));
    if (resume && fs::exists(log_file)) {
        std::ifstream in(log_file);
        std::string line, last;
        while (std::getline(in, line)) {
            if (!line.empty()) last = line;
        }
        if (!last.empty()) tc.step_offset = json::parse(last)["step"].get<int64_t>();
    }

    const Vocabulary vocab = vocabulary_from_pools(pools, config.model.vocab_cap);
    if (method == "pairreranker") {
        PairRerankerConfig mc;
        mc.encoder = config.model.encoder;
        mc.limits = config.model.limits;
        mc.head_depth = config.model.head_depth;
        mc.metrics = metric_names(config.metrics);
        mc.init_seed = static_cast<uint64_t>(config.seed_model);
        PairRerankerModel model(vocab, mc);
        const TrainResult r = train_pair_reranker(model, pools, config.metrics, tc, ckpt, log_file);
        std::cout << "trained pairreranker: steps=" << r.steps
                  << " final_loss=" << r.final_loss
                  << " best_heldout_pair_acc=" << r.best_heldout_acc << "\ncheckpoint: " << ckpt
                  << "\n";
    } else {
        PointwiseConfig mc;
        mc.variant = pointwise_variant_from_string(method);
        mc.encoder = config.model.encoder;
        mc.limits = config.model.limits;
        mc.head_depth = config.model.head_depth;
        mc.metrics = metric_names(config.metrics);
        mc.lambda = config.model.lambda;
        mc.init_seed = static_cast<uint64_t>(config.seed_model);
        PointwiseModel model(vocab, mc);
        const TrainResult r = train_pointwise(model, pools, config.metrics, tc, ckpt, log_file);
        std::cout << "trained " << method << ": steps=" << r.steps
                  << " final_loss=" << r.final_loss << "\ncheckpoint: " << ckpt << "\n";
    }
}

void run_rerank(const RunConfig& config, const std::string& checkpoint_path,
                const std::string& pools_file, const std::string& selection_name) {
    validate_run_config(config);
    if (!fs::exists(checkpoint_path)) throw DataError("rerank: checkpoint not found: " + checkpoint_path);
    const std::string pf = pools_file.empty() ? pool_path(config, "test") : pools_file;
    if (!fs::exists(pf)) throw DataError("rerank: pool file not found: " + pf);
    const std::vector<ScoredPool> pools = read_pools(pf);

    const std::string kind = checkpoint_kind(checkpoint_path);
    const std::string mode = config.inference.mode;
    if ((mode == "pointwise") != (kind != "pairreranker")) {
        throw ConfigError("rerank: checkpoint kind \"" + kind + "\" does not fit mode \"" + mode +
                          "\" (bubble/round_robin need pairreranker, pointwise needs a baseline)");
    }

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);

    const std::string name = selection_name.empty() ? kind + "-" + mode : selection_name;
    const std::string out_file =
        (fs::path(config.out_dir) / "selections" / (name + ".jsonl")).string();
    std::ofstream out(out_file);
    if (!out) throw DataError("cannot write selections: " + out_file);

    int64_t truncated_examples = 0;
    if (kind == "pairreranker") {
        auto model = load_pair_reranker(checkpoint_path);
        require_checkpoint_metrics(model->metrics(), metric_names(config.metrics),
                                   checkpoint_path);
        const WinnerRule rule = config.winner_rule();
        const PairJudge judge = make_model_judge(*model, rule);
        const TruncationLimits limits = model->effective_limits();
        for (const auto& pool : pools) {
            if (pool.candidates.empty()) throw DataError("rerank: empty pool \"" + pool.example_id + "\"");
            // Long external inputs truncate per example instead of failing.
            bool truncated = static_cast<int>(tokenize(pool.source).size()) > limits.source_max;
            for (const auto& c : pool.candidates) {
                truncated = truncated ||
                            static_cast<int>(tokenize(c.text).size()) > limits.cand_max;
            }
            if (truncated) {
                ++truncated_examples;
                std::fprintf(stderr, "warning: truncating long segments for example \"%s\"\n",
                             pool.example_id.c_str());
            }

            json record;
            if (mode == "bubble") {
                std::mt19937_64 rng(mix_seed(static_cast<uint64_t>(config.seed_shuffle),
                                             hash_text(pool.example_id)));
                const BubbleResult r = pool.size() == 1 ? BubbleResult{0, {}}
                                                        : bubble_select(pool, judge, rng);
                record = {{"example_id", pool.example_id},
                          {"selected_index", r.selected},
                          {"selected_text", pool.candidates[r.selected].text}};
                if (config.inference.trace) {
                    json trace = json::array();
                    for (const auto& c : r.trace) {
                        trace.push_back({{"a", c.index_a},
                                         {"b", c.index_b},
                                         {"winner", c.winner},
                                         {"margins", c.confidence}});
                    }
                    record["trace"] = std::move(trace);
                }
            } else {  // round_robin
                const auto ranking = pool.size() == 1
                                         ? std::vector<RankedCandidate>{{0, 0, 0.0}}
                                         : round_robin_rank(pool, judge);
                record = {{"example_id", pool.example_id},
                          {"selected_index", ranking.front().index},
                          {"selected_text", pool.candidates[ranking.front().index].text}};
                if (config.inference.trace) {
                    json order = json::array();
                    for (const auto& rc : ranking) {
                        order.push_back({{"index", rc.index}, {"wins", rc.wins},
                                         {"mean_margin", rc.mean_margin}});
                    }
                    record["ranking"] = std::move(order);
                }
            }
            out << record.dump() << '\n';
        }
    } else {
        auto model = load_pointwise(checkpoint_path);
        if (model->variant() == PointwiseVariant::summareranker) {
            require_checkpoint_metrics(model->config().metrics, metric_names(config.metrics),
                                       checkpoint_path);
        }
        for (const auto& pool : pools) {
            const int idx = rank_pointwise(*model, pool);
            json record{{"example_id", pool.example_id},
                        {"selected_index", idx},
                        {"selected_text", pool.candidates[idx].text}};
            out << record.dump() << '\n';
        }
    }
    std::cout << "reranked " << pools.size() << " pools (" << mode << ") -> " << out_file;
    if (truncated_examples > 0) std::cout << " [" << truncated_examples << " truncated]";
    std::cout << "\n";
}

void run_evaluate(const RunConfig& config, const std::string& selections_file,
                  const std::string& pools_file, const std::string& report_name) {
    validate_run_config(config);
    if (!fs::exists(selections_file)) throw DataError("evaluate: selections not found: " + selections_file);
    const std::string pf = pools_file.empty() ? pool_path(config, "test") : pools_file;
    if (!fs::exists(pf)) throw DataError("evaluate: pool file not found: " + pf);

    const std::vector<ScoredPool> pools = read_pools(pf);
    for (const auto& pool : pools) {
        if (pool.transfer_mode()) {
            throw DataError("evaluate: pool \"" + pool.example_id +
                            "\" has no reference target; supply references before evaluating");
        }
    }
    const auto records = read_selections(selections_file);
    SelectionSet sel;
    sel.label = report_name.empty() ? fs::path(selections_file).stem().string() : report_name;
    for (const auto& r : records) sel.selected[r.example_id] = r.selected_index;

    const MetricTable table = build_selection_report(pools, config.metrics, {sel});

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);
    const std::string prefix =
        (fs::path(config.out_dir) / "reports" / (sel.label.empty() ? "evaluate" : sel.label))
            .string();
    write_report(prefix, table);
    std::cout << render_text(table);
    if (std::find(config.metrics.begin(), config.metrics.end(), Metric::bleu) !=
        config.metrics.end()) {
        std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
        for (const auto& pool : pools) {
            const auto it = sel.selected.find(pool.example_id);
            pairs.push_back({pool.candidates.at(it->second).text, {pool.target}});
        }
        std::cout << "# corpus_bleu (unsmoothed, x100): " << 100.0 * corpus_bleu(pairs) << "\n";
    }
    std::cout << "report: " << prefix << ".txt / .csv\n";
}

void run_oracle_analysis(const RunConfig& config) {
    validate_run_config(config);
    ErrorCollector errors;
    if (config.test_path.empty()) errors.add("dataset.test is required for oracle-analysis");
    if (config.oracle_decoding.empty()) {
        errors.add("oracle_decoding list is required for oracle-analysis");
    }
    if (config.train_path.empty()) {
        errors.add("dataset.train is required for oracle-analysis (generator construction)");
    }
    if (!config.test_path.empty() && !fs::exists(config.test_path)) {
        errors.add("dataset.test does not exist: " + config.test_path);
    }
    if (!config.train_path.empty() && !fs::exists(config.train_path)) {
        errors.add("dataset.train does not exist: " + config.train_path);
    }
    errors.raise_if_any("oracle-analysis: invalid configuration");

    const std::vector<Example> train = load_dataset(config.train_path);
    const std::vector<Example> test = load_dataset(config.test_path);
    std::vector<Example> all = train;
    all.insert(all.end(), test.begin(), test.end());

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);

    const GeneratorFactory factory = make_factory(config, all);
    const auto gen = factory(train, mix_seed(static_cast<uint64_t>(config.seed_model), 0xF0F0ULL));

    std::map<std::string, std::vector<ScoredPool>> by_method;
    for (const auto& cfg : config.oracle_decoding) {
        const std::string mname = decoding_method_name(cfg.method);
        if (by_method.count(mname)) {
            throw ConfigError("oracle-analysis: method \"" + mname + "\" listed twice");
        }
        std::vector<ScoredPool> pools;
        pools.reserve(test.size());
        for (const auto& ex : test) pools.push_back(generate_candidates(*gen, ex, cfg));
        score_pools(pools, config.metrics);
        write_pools(pool_path(config, "oracle_" + mname), pools);
        by_method.emplace(mname, std::move(pools));
    }

    const MetricTable table = build_oracle_analysis(by_method, config.metrics);
    const std::string prefix = (fs::path(config.out_dir) / "reports" / "oracle_analysis").string();
    write_report(prefix, table);
    std::cout << render_text(table) << "report: " << prefix << ".txt / .csv\n";
}

void run_consistency(const RunConfig& config, const std::string& checkpoint_path,
                     const std::string& pools_file) {
    validate_run_config(config);
    if (!fs::exists(checkpoint_path)) {
        throw DataError("consistency: checkpoint not found: " + checkpoint_path);
    }
    const std::string pf = pools_file.empty() ? pool_path(config, "test") : pools_file;
    if (!fs::exists(pf)) throw DataError("consistency: pool file not found: " + pf);
    if (checkpoint_kind(checkpoint_path) != "pairreranker") {
        throw ConfigError("consistency: needs a pairreranker checkpoint");
    }
    const std::vector<ScoredPool> pools = read_pools(pf);

    auto model = load_pair_reranker(checkpoint_path);
    const PairJudge judge = make_model_judge(*model, config.winner_rule());
    std::mt19937_64 rng(mix_seed(static_cast<uint64_t>(config.seed_shuffle), 0xC0C0ULL));
    const ConsistencyReport report =
        consistency_rate(pools, judge, config.inference.consistency_pairs, rng);

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);
    json j{{"pairs_evaluated", report.pairs_evaluated},
           {"agreements", report.agreements},
           {"skipped_pools", report.skipped_pools},
           {"rate", report.rate()}};
    std::ofstream out(fs::path(config.out_dir) / "reports" / "consistency.json");
    out << j.dump(2) << '\n';
    std::cout << "consistency rate: " << report.rate() << " over " << report.pairs_evaluated
              << " sampled pairs (" << report.skipped_pools << " pools skipped)\n";
}

void run_import_external(const RunConfig& config, const std::string& input_path) {
    validate_run_config(config);
    if (!fs::exists(input_path)) throw DataError("import-external: file not found: " + input_path);
    const std::vector<ScoredPool> pools = import_external_candidates(input_path);
    int64_t transfer = 0;
    for (const auto& p : pools) transfer += p.transfer_mode() ? 1 : 0;

    ensure_out_dirs(config);
    DirLock lock(config.out_dir);
    write_effective_config(config);
    write_pools(pool_path(config, "external"), pools);
    std::cout << "imported " << pools.size() << " pools (" << transfer
              << " in transfer mode) -> " << pool_path(config, "external") << "\n";
}

} // namespace pairrank
