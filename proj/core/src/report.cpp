#include "pairrank/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pairrank/dataset.hpp"
#include "pairrank/errors.hpp"

namespace pairrank {

namespace {

std::string fmt(double v, int prec) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

double metric_of(const ScoredPool& pool, int candidate, Metric m) {
    const auto& scores = pool.candidates.at(candidate).scores;
    auto it = scores.find(metric_name(m));
    if (it == scores.end()) {
        throw DataError("pool \"" + pool.example_id + "\" candidate " +
                        std::to_string(candidate) + " not scored for \"" + metric_name(m) + "\"");
    }
    return it->second;
}

// Gain cells are recomputed from the table's own cells through gain(), so a
// report can never disagree with its inputs.
std::vector<double> gain_row_values(const MetricTable& t) {
    std::vector<double> out;
    const auto& base = t.values.at(t.baseline_row);
    const auto& last = t.values.back();
    for (size_t m = 0; m < t.metrics.size(); ++m) out.push_back(gain(last[m], base[m]));
    return out;
}

std::vector<double> gain_column_values(const MetricTable& t) {
    std::vector<double> out;
    const double base = t.values.at(t.baseline_row).at(0);
    for (const auto& row : t.values) out.push_back(gain(row.at(0), base));
    return out;
}

} // namespace

std::string render_text(const MetricTable& table) {
    if (table.values.size() != table.row_labels.size()) {
        throw RuntimeFailure("report: row label/value count mismatch");
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"method"};
    for (Metric m : table.metrics) header.push_back(metric_name(m));
    if (table.gain_column) header.push_back("gain%");

    std::vector<double> gcol;
    if (table.gain_column) gcol = gain_column_values(table);
    for (size_t r = 0; r < table.values.size(); ++r) {
        std::vector<std::string> row{table.row_labels[r]};
        for (double v : table.values[r]) row.push_back(fmt(v * 100.0, 2));
        if (table.gain_column) {
            row.push_back(static_cast<int>(r) == table.baseline_row ? "-" : fmt(gcol[r], 2));
        }
        cells.push_back(std::move(row));
    }
    if (table.gain_row) {
        std::vector<std::string> row{"gain%"};
        for (double g : gain_row_values(table)) row.push_back(fmt(g, 1));
        if (table.gain_column) row.push_back("-");
        cells.push_back(std::move(row));
    }

    std::vector<size_t> widths(header.size(), 0);
    for (size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : cells) {
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }

    std::ostringstream os;
    if (!table.title.empty()) os << "# " << table.title << '\n';
    for (const auto& note : table.notes) os << "# " << note << '\n';
    os << "# metric values displayed x100\n";
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size(); ++c) {
            os << std::left << std::setw(static_cast<int>(widths[c]) + 2) << row[c];
        }
        os << '\n';
    };
    emit(header);
    for (const auto& row : cells) emit(row);
    return os.str();
}

std::string render_csv(const MetricTable& table) {
    std::ostringstream os;
    os << "method";
    for (Metric m : table.metrics) os << ',' << metric_name(m);
    if (table.gain_column) os << ",gain_percent";
    os << '\n';
    std::vector<double> gcol;
    if (table.gain_column) gcol = gain_column_values(table);
    for (size_t r = 0; r < table.values.size(); ++r) {
        os << table.row_labels[r];
        for (double v : table.values[r]) os << ',' << fmt(v * 100.0, 4);
        if (table.gain_column) {
            os << ',' << (static_cast<int>(r) == table.baseline_row ? "" : fmt(gcol[r], 4));
        }
        os << '\n';
    }
    if (table.gain_row) {
        os << "gain_percent";
        for (double g : gain_row_values(table)) os << ',' << fmt(g, 4);
        if (table.gain_column) os << ',';
        os << '\n';
    }
    return os.str();
}

void write_report(const std::string& path_prefix, const MetricTable& table) {
    {
        std::ofstream out(path_prefix + ".txt");
        if (!out) throw DataError("cannot write report: " + path_prefix + ".txt");
        out << render_text(table);
    }
    std::ofstream out(path_prefix + ".csv");
    if (!out) throw DataError("cannot write report: " + path_prefix + ".csv");
    out << render_csv(table);
}

MetricTable build_selection_report(const std::vector<ScoredPool>& pools,
                                   const std::vector<Metric>& metrics,
                                   const std::vector<SelectionSet>& selections) {
    if (pools.empty()) throw DataError("selection report: no pools");
    MetricTable t;
    t.title = "selection quality";
    t.metrics = metrics;
    t.gain_column = true;
    t.baseline_row = 0;
    if (std::find(metrics.begin(), metrics.end(), Metric::cider) != metrics.end()) {
        t.notes.push_back("cider idf corpus: references of this pool set");
    }
    t.notes.push_back("gain%: first metric vs top-beam row");

    const double n = static_cast<double>(pools.size());

    std::vector<double> top(metrics.size(), 0.0);
    for (const auto& pool : pools) {
        for (size_t m = 0; m < metrics.size(); ++m) top[m] += metric_of(pool, 0, metrics[m]);
    }
    for (auto& v : top) v /= n;
    t.row_labels.push_back("top-beam");
    t.values.push_back(top);

    for (const auto& sel : selections) {
        std::vector<double> row(metrics.size(), 0.0);
        for (const auto& pool : pools) {
            auto it = sel.selected.find(pool.example_id);
            if (it == sel.selected.end()) {
                throw DataError("selection \"" + sel.label + "\" missing example \"" +
                                pool.example_id + "\"");
            }
            if (it->second < 0 || it->second >= pool.size()) {
                throw DataError("selection \"" + sel.label + "\" has out-of-range index for \"" +
                                pool.example_id + "\"");
            }
            for (size_t m = 0; m < metrics.size(); ++m) {
                row[m] += metric_of(pool, it->second, metrics[m]);
            }
        }
        for (auto& v : row) v /= n;
        t.row_labels.push_back(sel.label);
        t.values.push_back(std::move(row));
    }

    std::vector<double> oracle(metrics.size(), 0.0);
    for (const auto& pool : pools) {
        for (size_t m = 0; m < metrics.size(); ++m) {
            oracle[m] += metric_of(pool, oracle_select(pool, metrics[m]), metrics[m]);
        }
    }
    for (auto& v : oracle) v /= n;
    t.row_labels.push_back("oracle");
    t.values.push_back(oracle);
    return t;
}

MetricTable build_oracle_analysis(const std::map<std::string, std::vector<ScoredPool>>& pools_by_method,
                                  const std::vector<Metric>& metrics) {
    if (pools_by_method.empty()) throw DataError("oracle analysis: no methods");

    // Every method must cover the same examples, in any order.
    std::set<std::string> reference_ids;
    for (const auto& p : pools_by_method.begin()->second) reference_ids.insert(p.example_id);
    for (const auto& [method, pools] : pools_by_method) {
        std::set<std::string> ids;
        for (const auto& p : pools) ids.insert(p.example_id);
        if (ids != reference_ids || ids.size() != pools.size()) {
            throw DataError("oracle analysis: method \"" + method +
                            "\" covers a different example set");
        }
    }

    MetricTable t;
    t.title = "oracle gap by decoding method";
    t.metrics = metrics;
    t.gain_row = true;
    t.baseline_row = 0;
    if (std::find(metrics.begin(), metrics.end(), Metric::cider) != metrics.end()) {
        t.notes.push_back("cider idf corpus: references of this pool set");
    }
    t.notes.push_back("gain%: merged-all oracle vs top-beam, per metric");

    const double n = static_cast<double>(reference_ids.size());

    // The top-beam row reads candidate 0 of the beam pools; without a beam
    // method it falls back to the first method listed.
    const std::string top_method = pools_by_method.count("beam") ? "beam"
                                                                 : pools_by_method.begin()->first;
    std::vector<double> top(metrics.size(), 0.0);
    for (const auto& pool : pools_by_method.at(top_method)) {
        if (pool.candidates.empty()) throw DataError("oracle analysis: empty pool");
        for (size_t m = 0; m < metrics.size(); ++m) top[m] += metric_of(pool, 0, metrics[m]);
    }
    for (auto& v : top) v /= n;
    t.row_labels.push_back("top-beam (" + top_method + ")");
    t.values.push_back(top);

    for (const auto& [method, pools] : pools_by_method) {
        std::vector<double> row(metrics.size(), 0.0);
        for (const auto& pool : pools) {
            for (size_t m = 0; m < metrics.size(); ++m) {
                row[m] += metric_of(pool, oracle_select(pool, metrics[m]), metrics[m]);
            }
        }
        for (auto& v : row) v /= n;
        t.row_labels.push_back(method + " oracle");
        t.values.push_back(std::move(row));
    }

    // Merge per example across methods, preserving method order.
    std::map<std::string, std::vector<ScoredPool>> by_example;
    for (const auto& [method, pools] : pools_by_method) {
        for (const auto& pool : pools) by_example[pool.example_id].push_back(pool);
    }
    std::vector<double> merged_row(metrics.size(), 0.0);
    for (auto& [id, pools] : by_example) {
        const ScoredPool merged = merge_pools(pools);
        for (size_t m = 0; m < metrics.size(); ++m) {
            merged_row[m] += metric_of(merged, oracle_select(merged, metrics[m]), metrics[m]);
        }
    }
    for (auto& v : merged_row) v /= n;
    t.row_labels.push_back("all-methods oracle");
    t.values.push_back(std::move(merged_row));
    return t;
}

} // namespace pairrank
