#pragma once

#include <map>
#include <string>
#include <vector>

#include "pairrank/metrics.hpp"
#include "pairrank/types.hpp"

namespace pairrank {

/// A named selection over a pool collection: example_id -> candidate index.
struct SelectionSet {
    std::string label;
    std::map<std::string, int> selected;
};

/// Method rows x metric columns, values stored as fractions and displayed
/// x100 like the published tables. `gain_column` appends a per-row gain on
/// the first metric against the baseline row; `gain_row` appends a per-metric
/// gain row comparing the last row against the baseline row.
struct MetricTable {
    std::string title;
    std::vector<std::string> notes;
    std::vector<Metric> metrics;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> values;  // rows x metrics
    int baseline_row = 0;
    bool gain_column = false;
    bool gain_row = false;
};

std::string render_text(const MetricTable& table);
std::string render_csv(const MetricTable& table);
void write_report(const std::string& path_prefix, const MetricTable& table);

/// Per-metric mean quality of each selection set, with a top-beam baseline
/// row first and a per-metric oracle row last. All pools must be scored on
/// every requested metric and every selection must cover exactly the pools.
MetricTable build_selection_report(const std::vector<ScoredPool>& pools,
                                   const std::vector<Metric>& metrics,
                                   const std::vector<SelectionSet>& selections);

/// Oracle-gap analysis: rows are top-beam, one oracle row per decoding
/// method, and the oracle over all methods merged, with a final gain row
/// (merged vs top-beam, per metric). Every method must cover the same
/// example ids.
MetricTable build_oracle_analysis(const std::map<std::string, std::vector<ScoredPool>>& pools_by_method,
                                  const std::vector<Metric>& metrics);

} // namespace pairrank
