// Central finite-difference gradient checker. The model function must be
// deterministic (fixed inputs, dropout off); it is re-evaluated with each
// parameter entry displaced by +-step.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stgnn/matrix.hpp"

namespace stgnn {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    double max_abs_grad = 0.0;  // largest analytic gradient magnitude seen
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
};

/// `model_fn(compute_grad)` returns the scalar loss at the current parameter
/// values; when compute_grad is true it must also leave exact gradients in
/// every parameter's grad field (zeroing them first).
inline GradCheckReport gradient_check(const std::function<double(bool)>& model_fn,
                                      const std::vector<Parameter*>& params,
                                      double step = 1e-5) {
    GradCheckReport report;
    if (params.empty()) return report;

    model_fn(true);
    std::vector<DenseMatrix> analytic;
    analytic.reserve(params.size());
    for (const Parameter* p : params) analytic.push_back(p->grad);

    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        GradCheckEntry entry{p.name, 0.0, 0.0};
        for (double g : analytic[pi].data)
            entry.max_abs_grad = std::max(entry.max_abs_grad, std::abs(g));
        for (size_t i = 0; i < p.value.size(); ++i) {
            const double original = p.value.data[i];
            p.value.data[i] = original + step;
            const double up = model_fn(false);
            p.value.data[i] = original - step;
            const double down = model_fn(false);
            p.value.data[i] = original;
            const double fd = (up - down) / (2.0 * step);
            const double ad = analytic[pi].data[i];
            const double denom = std::max({std::abs(ad), std::abs(fd), 1e-8});
            entry.max_rel_err = std::max(entry.max_rel_err, std::abs(ad - fd) / denom);
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace stgnn
