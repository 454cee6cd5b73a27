#include <cmath>
#include <string>

#include "neumatc/errors.hpp"
#include "neumatc/mlp.hpp"

namespace neumatc {

void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads) {
    if (params.size() != grads.size())
        throw DimensionError("adam_step: parameter/gradient block count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b)
        if (params[b].size() != grads[b].size())
            throw DimensionError("adam_step: block " + std::to_string(b) + " size mismatch");
    if (state.m.empty() && state.t == 0) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw DimensionError("adam_step: block count differs from the optimizer state");
    for (std::size_t b = 0; b < params.size(); ++b)
        if (state.m[b].size() != params[b].size())
            throw DimensionError("adam_step: block " + std::to_string(b) +
                                 " differs from the optimizer state");

    const auto& c = state.cfg;
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = state.m[b];
        auto& v = state.v[b];
        const auto g = grads[b];
        auto p = params[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

}  // namespace neumatc
