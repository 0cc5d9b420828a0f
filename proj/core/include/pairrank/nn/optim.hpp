#pragma once

#include <cstdint>
#include <vector>

#include "pairrank/nn/tape.hpp"

namespace pairrank::nn {

/// Linear warmup to max_lr over warmup_ratio of the run, then linear decay
/// to zero at total_steps.
struct LrSchedule {
    double max_lr = 1e-5;
    int64_t total_steps = 0;
    double warmup_ratio = 0.05;

    double at(int64_t step) const;  // step in [1, total_steps]
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg = {});

    void zero_grad();
    /// One update from the gradients currently accumulated in the parameters.
    void step(double lr);

private:
    std::vector<Parameter*> params_;
    std::vector<Mat> m_, v_;
    AdamConfig cfg_;
    int64_t t_ = 0;
};

} // namespace pairrank::nn
