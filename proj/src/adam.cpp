#include "latentprog/adam.hpp"

#include "latentprog/error.hpp"

#include <cmath>

namespace lp {

AdamState::AdamState(std::span<const ad::Tensor> like, double b1, double b2, double eps)
    : beta1(b1), beta2(b2), epsilon(eps) {
    require(b1 >= 0.0 && b1 < 1.0 && b2 > 0.0 && b2 < 1.0, ErrorKind::InvalidArgument, "Adam betas must lie in [0,1)");
    for (const ad::Tensor& t : like) {
        first_moment.emplace_back(t.shape, 0.0);
        second_moment.emplace_back(t.shape, 0.0);
    }
}

void adam_step(AdamState& state, std::span<ad::Tensor> params, std::span<const ad::Tensor> grads, double lr) {
    require(params.size() == grads.size() && params.size() == state.first_moment.size(), ErrorKind::ShapeMismatch,
            "adam_step: parameter, gradient and state counts differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].size() == grads[i].size() && params[i].size() == state.first_moment[i].size(),
                ErrorKind::ShapeMismatch, "adam_step: tensor sizes differ");
    }
    ++state.step_count;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].data;
        const auto& g = grads[i].data;
        auto& m = state.first_moment[i].data;
        auto& v = state.second_moment[i].data;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

} // namespace lp
