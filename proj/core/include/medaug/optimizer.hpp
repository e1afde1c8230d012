// Bias-corrected adaptive-moment gradient descent over a parameter list.
#pragma once

#include <cstddef>
#include <vector>

#include "medaug/tensor.hpp"

namespace medaug {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    // One update from the gradients currently stored on the parameters.
    void step();
    void zero_grad();

    std::size_t step_count() const noexcept { return step_; }
    AdamConfig& config() noexcept { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    AdamConfig cfg_;
    std::size_t step_ = 0;
};

}  // namespace medaug
