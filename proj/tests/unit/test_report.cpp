#include <doctest.h>

#include <sstream>

#include "pairrank/errors.hpp"
#include "pairrank/report.hpp"
#include "test_support.hpp"

using namespace pairrank;

namespace {

std::vector<ScoredPool> make_pools(std::mt19937_64& rng, int n, int m,
                                   const std::vector<Metric>& metrics) {
    std::vector<ScoredPool> pools;
    for (int i = 0; i < n; ++i) {
        pools.push_back(test_support::random_scored_pool(rng, m, metrics, "r" + std::to_string(i)));
    }
    return pools;
}

} // namespace

TEST_CASE("selection report: top-beam selection gains exactly zero") {
    auto rng = test_support::make_rng(17);
    const std::vector<Metric> metrics{Metric::rouge1, Metric::rouge2};
    const auto pools = make_pools(rng, 12, 5, metrics);

    SelectionSet top{"copy-top-beam", {}};
    for (const auto& pool : pools) top.selected[pool.example_id] = 0;
    const MetricTable t = build_selection_report(pools, metrics, {top});

    REQUIRE(t.row_labels.size() == 3);  // top-beam, selection, oracle
    CHECK(t.row_labels[0] == "top-beam");
    CHECK(t.row_labels[2] == "oracle");
    for (size_t m = 0; m < metrics.size(); ++m) {
        CHECK(t.values[1][m] == doctest::Approx(t.values[0][m]));
        CHECK(t.values[2][m] >= t.values[0][m] - 1e-12);  // oracle dominance
    }
    CHECK(gain(t.values[1][0], t.values[0][0]) == doctest::Approx(0.0));

    SUBCASE("missing example in a selection is an error") {
        SelectionSet incomplete{"partial", {}};
        CHECK_THROWS_AS(build_selection_report(pools, metrics, {incomplete}), DataError);
    }
}

TEST_CASE("report gain cells equal the gain formula applied to the same table") {
    auto rng = test_support::make_rng(18);
    const std::vector<Metric> metrics{Metric::rouge1};
    const auto pools = make_pools(rng, 10, 6, metrics);
    SelectionSet sel{"pick-last", {}};
    for (const auto& pool : pools) sel.selected[pool.example_id] = pool.size() - 1;
    const MetricTable t = build_selection_report(pools, metrics, {sel});

    const std::string csv = render_csv(t);
    std::istringstream lines(csv);
    std::string header, top_row, sel_row;
    std::getline(lines, header);
    std::getline(lines, top_row);
    std::getline(lines, sel_row);
    const double top_val = std::stod(top_row.substr(top_row.find(',') + 1));
    const auto second_comma = sel_row.find(',', sel_row.find(',') + 1);
    const double sel_val = std::stod(sel_row.substr(sel_row.find(',') + 1));
    const double sel_gain = std::stod(sel_row.substr(second_comma + 1));
    CHECK(sel_gain == doctest::Approx(gain(sel_val, top_val)).epsilon(1e-4));
}

TEST_CASE("oracle analysis: rows, dominance, gain row, coverage checks") {
    auto rng = test_support::make_rng(19);
    const std::vector<Metric> metrics{Metric::rouge1, Metric::bleu};

    std::map<std::string, std::vector<ScoredPool>> by_method;
    for (const std::string method : {"beam", "top_k", "top_p"}) {
        std::vector<ScoredPool> pools;
        for (int i = 0; i < 8; ++i) {
            auto pool = test_support::random_scored_pool(rng, 5, metrics, "e" + std::to_string(i));
            pool.source = "s" + std::to_string(i);
            pool.target = "t" + std::to_string(i);
            for (auto& c : pool.candidates) c.method = method;
            pools.push_back(std::move(pool));
        }
        by_method[method] = std::move(pools);
    }

    const MetricTable t = build_oracle_analysis(by_method, metrics);
    REQUIRE(t.row_labels.size() == 5);  // top-beam + 3 methods + merged
    CHECK(t.row_labels.front() == "top-beam (beam)");
    CHECK(t.row_labels.back() == "all-methods oracle");
    CHECK(t.gain_row);

    // Merged-pool oracle dominates every per-method oracle, per metric.
    for (size_t m = 0; m < metrics.size(); ++m) {
        for (size_t r = 1; r + 1 < t.row_labels.size(); ++r) {
            CHECK(t.values.back()[m] >= t.values[r][m] - 1e-12);
        }
    }

    SUBCASE("single method yields three rows") {
        std::map<std::string, std::vector<ScoredPool>> one{{"beam", by_method["beam"]}};
        const MetricTable single = build_oracle_analysis(one, metrics);
        CHECK(single.row_labels.size() == 3);
    }
    SUBCASE("methods with differing coverage are rejected") {
        auto broken = by_method;
        broken["top_k"].pop_back();
        CHECK_THROWS_AS(build_oracle_analysis(broken, metrics), DataError);
    }
    SUBCASE("gain row reproduces the formula on the table's own cells") {
        const std::string text = render_text(t);
        CHECK(text.find("gain%") != std::string::npos);
        std::ostringstream expected;
        expected.setf(std::ios::fixed);
        expected.precision(1);
        expected << gain(t.values.back()[0], t.values.front()[0]);
        CHECK(text.find(expected.str()) != std::string::npos);
    }
}
