#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pairrank/errors.hpp"
#include "pairrank/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
    int64_t seed_data = -1;
    int64_t seed_model = -1;
    int64_t seed_shuffle = -1;
    std::string metrics;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run config file (JSON)")->required();
    cmd->add_option("--out", args.out, "Output directory (overrides config)");
    cmd->add_option("--seed-data", args.seed_data, "Data seed (overrides config)");
    cmd->add_option("--seed-model", args.seed_model, "Model seed (overrides config)");
    cmd->add_option("--seed-shuffle", args.seed_shuffle, "Shuffle seed (overrides config)");
    cmd->add_option("--metrics", args.metrics, "Comma-separated metric list (overrides config)");
    cmd->add_option("--mode", args.mode, "Inference mode: bubble, round_robin, pointwise");
}

pairrank::RunConfig resolve_config(const CommonArgs& args) {
    pairrank::RunConfig config = pairrank::load_run_config(args.config_path);
    if (!args.out.empty()) config.out_dir = args.out;
    if (args.seed_data >= 0) config.seed_data = args.seed_data;
    if (args.seed_model >= 0) config.seed_model = args.seed_model;
    if (args.seed_shuffle >= 0) config.seed_shuffle = args.seed_shuffle;
    if (!args.metrics.empty()) {
        std::vector<std::string> names;
        std::stringstream ss(args.metrics);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) names.push_back(item);
        }
        config.metrics = pairrank::parse_metric_list(names);
    }
    if (!args.mode.empty()) config.inference.mode = args.mode;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pairrank: pairwise candidate reranking for text generation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> score_pools;
    std::string train_method;
    bool train_resume = false;
    std::string checkpoint, pools_file, name, selections_file, import_path;
    bool trace = false;

    CLI::App* generate = app.add_subcommand(
        "generate", "Generate candidate pools (half-split train, full-model val/test)");
    add_common(generate, args);

    CLI::App* score = app.add_subcommand("score", "Score candidate pools on the metric list");
    add_common(score, args);
    score->add_option("--pools", score_pools, "Pool files to score (default: out/pools/*.jsonl)");

    CLI::App* train = app.add_subcommand("train", "Train a reranker on the scored train pools");
    add_common(train, args);
    train->add_option("--method", train_method,
                      "pairreranker | simcls | summareranker")->required();
    train->add_flag("--resume", train_resume, "Continue the step count of an existing log");

    CLI::App* rerank = app.add_subcommand("rerank", "Select candidates with a trained reranker");
    add_common(rerank, args);
    rerank->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    rerank->add_option("--pools", pools_file, "Pool file (default: out/pools/test.jsonl)");
    rerank->add_option("--name", name, "Selection file name (default: <kind>-<mode>)");
    rerank->add_flag("--trace", trace, "Record the comparison trace per example");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Report mean metrics of a selection vs top-beam and oracle");
    add_common(evaluate, args);
    evaluate->add_option("--selections", selections_file, "Selections file")->required();
    evaluate->add_option("--pools", pools_file, "Scored pool file (default: out/pools/test.jsonl)");
    evaluate->add_option("--name", name, "Report name (default: selections file stem)");

    CLI::App* oracle = app.add_subcommand(
        "oracle-analysis", "Oracle gap per decoding method plus merged pools");
    add_common(oracle, args);

    CLI::App* consistency = app.add_subcommand(
        "consistency", "Self-consistency rate of a pairreranker under slot swapping");
    add_common(consistency, args);
    consistency->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    consistency->add_option("--pools", pools_file, "Pool file (default: out/pools/test.jsonl)");

    CLI::App* import_cmd = app.add_subcommand(
        "import-external", "Validate and import externally generated candidate pools");
    add_common(import_cmd, args);
    import_cmd->add_option("--input", import_path, "External pool JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage problems are config errors
    }

    try {
        pairrank::RunConfig config = resolve_config(args);
        if (trace) config.inference.trace = true;
        if (generate->parsed()) {
            pairrank::run_generate(config);
        } else if (score->parsed()) {
            pairrank::run_score(config, score_pools);
        } else if (train->parsed()) {
            pairrank::run_train(config, train_method, train_resume);
        } else if (rerank->parsed()) {
            pairrank::run_rerank(config, checkpoint, pools_file, name);
        } else if (evaluate->parsed()) {
            pairrank::run_evaluate(config, selections_file, pools_file, name);
        } else if (oracle->parsed()) {
            pairrank::run_oracle_analysis(config);
        } else if (consistency->parsed()) {
            pairrank::run_consistency(config, checkpoint, pools_file);
        } else if (import_cmd->parsed()) {
            pairrank::run_import_external(config, import_path);
        }
    } catch (const pairrank::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pairrank::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
