#include "pairrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "pairrank/errors.hpp"
#include "pairrank/text.hpp"

namespace pairrank {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, const std::string& path, size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    }
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw DataError(where + ": missing or non-string field \"" + key + "\"");
    }
    return j[key].get<std::string>();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open for reading: " + path);
    return in;
}

// Fisher-Yates with an explicit rejection sampler, so shuffles do not depend
// on the standard library's distribution implementation.
uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

} // namespace

bool HalfSplitPlan::contains_a(const std::string& id) const {
    return std::find(half_a.begin(), half_a.end(), id) != half_a.end();
}

bool HalfSplitPlan::contains_b(const std::string& id) const {
    return std::find(half_b.begin(), half_b.end(), id) != half_b.end();
}

std::vector<Example> load_dataset(const std::string& path) {
    auto in = open_in(path);
    std::vector<Example> out;
    std::unordered_map<std::string, size_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, path, line_no);
        const std::string where = path + ":" + std::to_string(line_no);
        Example ex;
        ex.id = require_string(j, "id", where);
        ex.source = require_string(j, "source", where);
        ex.target = require_string(j, "target", where);
        if (ex.source.empty()) throw DataError(where + ": empty source for id \"" + ex.id + "\"");
        auto [it, fresh] = seen.emplace(ex.id, line_no);
        if (!fresh) {
            throw DataError(where + ": duplicate id \"" + ex.id + "\" (first seen on line " +
                            std::to_string(it->second) + ")");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void write_dataset(const std::string& path, const std::vector<Example>& examples) {
    auto out = open_out(path);
    for (const auto& ex : examples) {
        json j{{"id", ex.id}, {"source", ex.source}, {"target", ex.target}};
        out << j.dump() << '\n';
    }
}

HalfSplitPlan make_half_split(const std::vector<Example>& examples, int64_t seed) {
    if (examples.size() < 2) {
        throw DataError("half split needs at least 2 examples, got " +
                        std::to_string(examples.size()));
    }
    std::vector<std::string> ids;
    ids.reserve(examples.size());
    for (const auto& ex : examples) ids.push_back(ex.id);

    std::mt19937_64 rng(mix_seed(static_cast<uint64_t>(seed), 0x534c4954ULL));
    for (size_t i = ids.size() - 1; i > 0; --i) {
        std::swap(ids[i], ids[uniform_below(rng, i + 1)]);
    }

    HalfSplitPlan plan;
    plan.seed = seed;
    const size_t cut = (ids.size() + 1) / 2;
    plan.half_a.assign(ids.begin(), ids.begin() + cut);
    plan.half_b.assign(ids.begin() + cut, ids.end());
    return plan;
}

void write_half_split(const std::string& path, const HalfSplitPlan& plan) {
    auto out = open_out(path);
    json j{{"seed", plan.seed}, {"half_a", plan.half_a}, {"half_b", plan.half_b}};
    out << j.dump(2) << '\n';
}

HalfSplitPlan read_half_split(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": parse error: " + std::string(e.what()));
    }
    HalfSplitPlan plan;
    if (!j.contains("seed") || !j.contains("half_a") || !j.contains("half_b")) {
        throw DataError(path + ": half-split plan needs seed, half_a, half_b");
    }
    plan.seed = j["seed"].get<int64_t>();
    plan.half_a = j["half_a"].get<std::vector<std::string>>();
    plan.half_b = j["half_b"].get<std::vector<std::string>>();
    return plan;
}

ScoredPool merge_pools(const std::vector<ScoredPool>& pools) {
    if (pools.empty()) throw DataError("merge_pools: no pools given");
    ScoredPool merged = pools.front();
    for (size_t i = 1; i < pools.size(); ++i) {
        const auto& p = pools[i];
        if (p.example_id != merged.example_id) {
            throw DataError("merge_pools: example_id mismatch: \"" + merged.example_id +
                            "\" vs \"" + p.example_id + "\"");
        }
        if (p.source != merged.source || p.target != merged.target) {
            throw DataError("merge_pools: source/target mismatch for example \"" +
                            merged.example_id + "\"");
        }
        merged.candidates.insert(merged.candidates.end(), p.candidates.begin(),
                                 p.candidates.end());
    }
    return merged;
}

void validate_pool(const ScoredPool& pool, const std::string& context) {
    if (pool.example_id.empty()) throw DataError(context + ": empty example_id");
    if (pool.source.empty()) throw DataError(context + ": empty source");
    for (size_t i = 0; i < pool.candidates.size(); ++i) {
        for (const auto& [metric, value] : pool.candidates[i].scores) {
            if (!std::isfinite(value) || value < 0.0) {
                throw DataError(context + ": candidate " + std::to_string(i) +
                                " has invalid score for metric \"" + metric + "\"");
            }
        }
    }
}

void write_pools(const std::string& path, const std::vector<ScoredPool>& pools) {
    auto out = open_out(path);
    for (const auto& pool : pools) {
        json cands = json::array();
        for (const auto& c : pool.candidates) {
            json jc{{"text", c.text}, {"method", c.method}};
            if (c.scored()) jc["scores"] = c.scores;
            cands.push_back(std::move(jc));
        }
        json j{{"example_id", pool.example_id},
               {"source", pool.source},
               {"target", pool.target},
               {"candidates", std::move(cands)}};
        out << j.dump() << '\n';
    }
}

std::vector<ScoredPool> read_pools(const std::string& path) {
    auto in = open_in(path);
    std::vector<ScoredPool> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, path, line_no);
        const std::string where = path + ":" + std::to_string(line_no);
        ScoredPool pool;
        pool.example_id = require_string(j, "example_id", where);
        pool.source = require_string(j, "source", where);
        pool.target = require_string(j, "target", where);
        if (!j.contains("candidates") || !j["candidates"].is_array()) {
            throw DataError(where + ": missing candidates array");
        }
        size_t idx = 0;
        for (const auto& jc : j["candidates"]) {
            const std::string cwhere = where + " candidate " + std::to_string(idx++);
            CandidateRecord c;
            c.text = require_string(jc, "text", cwhere);
            c.method = require_string(jc, "method", cwhere);
            if (jc.contains("scores")) {
                if (!jc["scores"].is_object()) throw DataError(cwhere + ": scores must be an object");
                for (const auto& [k, v] : jc["scores"].items()) {
                    if (!v.is_number()) throw DataError(cwhere + ": non-numeric score for \"" + k + "\"");
                    c.scores[k] = v.get<double>();
                }
            }
            pool.candidates.push_back(std::move(c));
        }
        validate_pool(pool, where);
        out.push_back(std::move(pool));
    }
    return out;
}

} // namespace pairrank
