#include "fgln/adam.hpp"

#include <cmath>

namespace fgln {

void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        if (!is_trainable_name(name)) continue;
        auto git = grads.find(name);
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor(p.shape)).first;
            state.v.emplace(name, Tensor(p.shape));
        }
        Tensor& m = mit->second;
        Tensor& v = state.v.at(name);
        if (!m.same_shape(p))
            throw DimError("adam state shape " + m.shape_str() + " vs parameter " + p.shape_str() +
                           " for " + name);
        for (size_t i = 0; i < p.data.size(); ++i) {
            const double g = git == grads.end() ? 0.0 : git->second.data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace fgln
