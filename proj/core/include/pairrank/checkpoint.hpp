#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pairrank/baselines.hpp"
#include "pairrank/pair_encoder.hpp"

namespace pairrank {

/// Versioned JSON checkpoints: config + vocabulary + named parameter
/// tensors. Writes are atomic (temp file then rename). Loads fail loudly on
/// version, kind, shape, or metric-list mismatches.

void save_pair_reranker(const std::string& path, PairRerankerModel& model);
std::unique_ptr<PairRerankerModel> load_pair_reranker(const std::string& path);

void save_pointwise(const std::string& path, PointwiseModel& model);
std::unique_ptr<PointwiseModel> load_pointwise(const std::string& path);

/// Peeks at the checkpoint "kind" field: pairreranker, simcls, summareranker.
std::string checkpoint_kind(const std::string& path);

/// Throws ConfigError unless the checkpoint's metric list equals `expected`.
void require_checkpoint_metrics(const std::vector<std::string>& checkpoint_metrics,
                                const std::vector<std::string>& expected,
                                const std::string& path);

} // namespace pairrank
