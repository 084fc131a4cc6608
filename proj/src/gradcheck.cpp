#include "fgln/gradcheck.hpp"

#include <cmath>

namespace fgln {

FiniteDiffReport finite_diff_check(const std::function<double(const ParamStore&)>& loss_fn,
                                   ParamStore params,
                                   const std::map<std::string, Tensor>& analytic_grads,
                                   double h, double tol) {
    FiniteDiffReport report;
    report.tol = tol;
    for (auto& [name, p] : params) {
        if (!is_trainable_name(name)) continue;
        FiniteDiffEntry entry;
        entry.name = name;
        auto git = analytic_grads.find(name);
        for (std::int64_t i = 0; i < p.numel(); ++i) {
            const double orig = p.data[static_cast<size_t>(i)];
            p.data[static_cast<size_t>(i)] = orig + h;
            const double fp = loss_fn(params);
            p.data[static_cast<size_t>(i)] = orig - h;
            const double fm = loss_fn(params);
            p.data[static_cast<size_t>(i)] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic =
                git == analytic_grads.end() ? 0.0 : git->second.data[static_cast<size_t>(i)];
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
            const double rel = std::fabs(analytic - numeric) / denom;
            if (rel > entry.worst_rel_error) {
                entry.worst_rel_error = rel;
                entry.worst_index = i;
                entry.analytic = analytic;
                entry.numeric = numeric;
            }
        }
        entry.pass = entry.worst_rel_error < tol;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace fgln
