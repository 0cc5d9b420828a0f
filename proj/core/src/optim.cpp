#include "pairrank/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace pairrank::nn {

double LrSchedule::at(int64_t step) const {
    if (total_steps <= 0) return 0.0;
    const int64_t warmup = std::max<int64_t>(1, static_cast<int64_t>(
                                                    std::llround(warmup_ratio * total_steps)));
    if (step <= warmup) {
        return max_lr * static_cast<double>(step) / static_cast<double>(warmup);
    }
    if (total_steps <= warmup) return max_lr;
    const double frac = static_cast<double>(total_steps - step) /
                        static_cast<double>(total_steps - warmup);
    return max_lr * std::max(frac, 0.0);
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.push_back(Mat::zeros_like(p->value));
        v_.push_back(Mat::zeros_like(p->value));
    }
}

void AdamOptimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void AdamOptimizer::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        for (size_t j = 0; j < p.value.w.size(); ++j) {
            const double g = p.grad.w[j];
            m_[i].w[j] = cfg_.beta1 * m_[i].w[j] + (1.0 - cfg_.beta1) * g;
            v_[i].w[j] = cfg_.beta2 * v_[i].w[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i].w[j] / bc1;
            const double vhat = v_[i].w[j] / bc2;
            p.value.w[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace pairrank::nn
