#pragma once

#include <cmath>
#include <vector>

#include "lexcd/param_store.hpp"
#include "lexcd/rng.hpp"
#include "lexcd/tensor.hpp"

namespace lexcd::testing {

// Uniform values in [lo, hi]; |v| >= margin keeps inputs away from the relu
// kink so finite differences stay valid.
template <typename T>
Tensor<T> random_tensor(const Shape4& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = false, double margin = 0.0) {
    std::vector<T> data(static_cast<size_t>(shape.numel()));
    for (auto& v : data) {
        double x = rng.uniform(lo, hi);
        if (margin > 0.0 && std::abs(x) < margin) x = x < 0 ? -margin : margin;
        v = static_cast<T>(x);
    }
    return Tensor<T>::from_vector(shape, std::move(data), requires_grad);
}

// Move every parameter (biases included) to a generic point: zero-init
// biases leave conv outputs sitting exactly on the relu kink, where central
// differences straddle the non-differentiable point.
template <typename T>
void randomize_params(ParamStore<T>& store, Rng& rng, double lo = -0.3, double hi = 0.3) {
    for (auto& e : store.entries()) {
        for (auto& v : e.tensor.raw_value()) v = static_cast<T>(rng.uniform(lo, hi));
    }
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    double worst = 0.0;
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.size() != bv.size()) return 1e30;
    for (size_t i = 0; i < av.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(av[i]) - bv[i]));
    }
    return worst;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
    return a.shape() == b.shape() && a.value() == b.value();
}

}  // namespace lexcd::testing
