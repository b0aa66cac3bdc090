#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "reso/tensor.hpp"

namespace reso {

// Central finite-difference check of reverse-mode gradients.
//
// `forward` maps the given tensors to a scalar tensor. Every input with
// requires_grad set is perturbed elementwise; returns the max relative
// error  |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
// Run with S = double for tight tolerances.
template <typename S, typename Fn>
double grad_check(Fn&& forward, std::vector<TensorT<S>>& inputs, double eps = 1e-3) {
    for (auto& t : inputs) t.zero_grad();
    TensorT<S> loss = forward(inputs);
    backward(loss);

    double max_err = 0.0;
    for (auto& t : inputs) {
        if (!t.requires_grad()) continue;
        t.node()->ensure_grad();
        for (long i = 0; i < t.size(); ++i) {
            const S saved = t.data()[i];
            t.data()[i] = saved + static_cast<S>(eps);
            double fp;
            {
                NoGradGuard ng;
                fp = static_cast<double>(forward(inputs).item());
            }
            t.data()[i] = saved - static_cast<S>(eps);
            double fm;
            {
                NoGradGuard ng;
                fm = static_cast<double>(forward(inputs).item());
            }
            t.data()[i] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = static_cast<double>(t.grad()[i]);
            const double err =
                std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

} // namespace reso
