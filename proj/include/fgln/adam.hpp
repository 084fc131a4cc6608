#pragma once

#include <map>
#include <string>

#include "fgln/tensor.hpp"

namespace fgln {

// Per-parameter Adam moments. Step counter t is shared across parameters and
// advances once per adam_step call.
struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
};

// Standard Adam recurrence with bias correction. Updates every trainable
// entry of params that has a gradient in grads; missing gradients are treated
// as zero. Deterministic: parameters are visited in name order.
void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state);

}  // namespace fgln
