#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fgln/tensor.hpp"

namespace fgln {

struct FiniteDiffEntry {
    std::string name;
    double worst_rel_error = 0.0;
    std::int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    bool pass = true;
};

struct FiniteDiffReport {
    std::vector<FiniteDiffEntry> entries;  // one per parameter, name order
    double tol = 0.0;
    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
};

// Central-difference verification of analytic gradients: perturbs every
// element of every trainable parameter by +/-h and compares
// (f(p+h)-f(p-h))/2h against the supplied analytic gradient. The loss
// functional must be deterministic and side-effect free in params.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-4) so that
// near-zero gradients are compared at absolute scale.
FiniteDiffReport finite_diff_check(
    const std::function<double(const ParamStore&)>& loss_fn, ParamStore params,
    const std::map<std::string, Tensor>& analytic_grads, double h, double tol);

}  // namespace fgln
