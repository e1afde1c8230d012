#include "medaug/optimizer.hpp"

#include <cmath>

#include "medaug/errors.hpp"

namespace medaug {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    first_moment_.reserve(params_.size());
    second_moment_.reserve(params_.size());
    for (const Tensor& p : params_) {
        p.set_requires_grad(true);
        first_moment_.emplace_back(p.size(), 0.0);
        second_moment_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        const auto& g = p.grad();
        if (g.size() != first_moment_[pi].size()) {
            throw DimensionError("adam: gradient size " + std::to_string(g.size()) +
                                 " vs state size " + std::to_string(first_moment_[pi].size()));
        }
        auto& m = first_moment_[pi];
        auto& v = second_moment_[pi];
        auto& w = p.value();
        for (std::size_t i = 0; i < g.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace medaug
