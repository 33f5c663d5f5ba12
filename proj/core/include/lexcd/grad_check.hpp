#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lexcd/tensor.hpp"

namespace lexcd {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    long long worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    long long checked = 0;
};

// Central-difference oracle against the reverse-mode gradients. `f` must
// rebuild its graph from the given leaf parameters on every call and return
// a scalar. 64-bit only: single precision has no headroom for h = 1e-4.
// Error metric per element: |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           const std::vector<std::pair<std::string, Tensor<double>>>& params,
                           double step);

// Convenience overload for unnamed parameter lists.
GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           const std::vector<Tensor<double>>& params, double step);

}  // namespace lexcd
