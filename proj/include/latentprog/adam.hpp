#pragma once

#include "latentprog/autodiff.hpp"

#include <span>
#include <vector>

namespace lp {

// Bias-corrected Adam over a list of tensors.
struct AdamState {
    std::vector<ad::Tensor> first_moment;
    std::vector<ad::Tensor> second_moment;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    AdamState(std::span<const ad::Tensor> like, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8);
};

// Updates params in place. Throws ShapeMismatch if params, grads and the
// moment buffers disagree.
void adam_step(AdamState& state, std::span<ad::Tensor> params, std::span<const ad::Tensor> grads, double lr);

} // namespace lp
