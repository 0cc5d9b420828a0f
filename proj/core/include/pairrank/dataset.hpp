#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairrank/types.hpp"

namespace pairrank {

/// Reads a dataset file (one JSON record per line: {"id","source","target"}).
/// Records come back in file order. Throws DataError on malformed lines
/// (naming the line number) or duplicate ids.
std::vector<Example> load_dataset(const std::string& path);

/// Writes examples in the dataset JSONL layout.
void write_dataset(const std::string& path, const std::vector<Example>& examples);

/// Splits the examples into two disjoint halves of near-equal size
/// (|len(a) - len(b)| <= 1), deterministically for a fixed seed.
/// Throws DataError when fewer than 2 examples are given.
HalfSplitPlan make_half_split(const std::vector<Example>& examples, int64_t seed);

void write_half_split(const std::string& path, const HalfSplitPlan& plan);
HalfSplitPlan read_half_split(const std::string& path);

/// Concatenates pools for the same example in input order. Duplicate
/// candidate texts are retained, so merging four 15-candidate pools yields
/// exactly 60 candidates. Throws DataError on example_id/source/target
/// mismatch or an empty pool list.
ScoredPool merge_pools(const std::vector<ScoredPool>& pools);

/// Pool persistence: one JSON record per line. read_pools(write_pools(p))
/// is the identity, including candidate order and score values.
void write_pools(const std::string& path, const std::vector<ScoredPool>& pools);
std::vector<ScoredPool> read_pools(const std::string& path);

/// Validates pool invariants (nonempty source, finite scores >= 0).
/// Throws DataError with context on violation.
void validate_pool(const ScoredPool& pool, const std::string& context);

} // namespace pairrank
