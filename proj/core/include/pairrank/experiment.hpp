#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairrank/baselines.hpp"
#include "pairrank/generator.hpp"
#include "pairrank/metrics.hpp"
#include "pairrank/pair_trainer.hpp"
#include "pairrank/rank_inference.hpp"
#include "pairrank/seq2seq.hpp"

namespace pairrank {

struct GeneratorSpec {
    std::string kind = "stub";  // stub | tiny
    StubGeneratorOptions stub;
    Seq2SeqConfig tiny;
};

struct ModelSpec {
    nn::EncoderConfig encoder;
    int head_depth = 5;
    TruncationLimits limits;  // zeros = derived from capacity
    size_t vocab_cap = 8000;
    double lambda = 0.01;  // SimCLS margin scale
};

struct InferenceSpec {
    std::string mode = "bubble";       // bubble | round_robin | pointwise
    std::string winner_rule = "mean";  // mean | <metric name>
    bool trace = false;
    int consistency_pairs = 10;
};

/// The declarative run configuration. All randomness flows from the three
/// named seeds; every command revalidates what it needs before side effects.
struct RunConfig {
    std::string train_path, val_path, test_path;
    GeneratorSpec generator;
    std::vector<DecodingConfig> decoding;         // reranker train/inference methods
    std::vector<DecodingConfig> oracle_decoding;  // oracle-analysis methods
    std::vector<Metric> metrics;
    ModelSpec model;
    TrainConfig train;
    InferenceSpec inference;
    int64_t seed_data = -1;
    int64_t seed_model = -1;
    int64_t seed_shuffle = -1;
    std::string out_dir;

    WinnerRule winner_rule() const;
};

/// Parses and structurally validates a config file, reporting every problem
/// at once. CLI overrides are applied by the caller afterwards.
RunConfig load_run_config(const std::string& path);

/// Re-validates invariants that overrides could have broken (seeds explicit,
/// metrics nonempty, out dir set). Throws ConfigError listing all failures.
void validate_run_config(const RunConfig& config);

/// Serialized form of the effective config, written next to outputs.
std::string render_run_config(const RunConfig& config);

void run_generate(const RunConfig& config);
void run_score(const RunConfig& config, const std::vector<std::string>& pool_files);
void run_train(const RunConfig& config, const std::string& method, bool resume);
void run_rerank(const RunConfig& config, const std::string& checkpoint_path,
                const std::string& pools_file, const std::string& selection_name);
void run_evaluate(const RunConfig& config, const std::string& selections_file,
                  const std::string& pools_file, const std::string& report_name);
void run_oracle_analysis(const RunConfig& config);
void run_consistency(const RunConfig& config, const std::string& checkpoint_path,
                     const std::string& pools_file);
void run_import_external(const RunConfig& config, const std::string& input_path);

/// Selection file IO (JSONL: example_id, selected_index, selected_text,
/// optional trace).
struct SelectionRecord {
    std::string example_id;
    int selected_index = 0;
    std::string selected_text;
};
void write_selections(const std::string& path, const std::vector<SelectionRecord>& records);
std::vector<SelectionRecord> read_selections(const std::string& path);

} // namespace pairrank
