#pragma once

#include "fairsvt/optim.hpp"
#include "fairsvt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

namespace fairsvt::nn {

/// Central-difference gradient check. `loss` rebuilds the graph from the
/// current parameter values and returns a scalar. Returns the largest
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over all entries.
template <typename Scalar>
Scalar grad_check(const std::function<BasicTensor<Scalar>()>& loss, std::span<BasicTensor<Scalar>> params,
                  Scalar h = Scalar(1e-5)) {
    if (!(h > 0)) throw std::invalid_argument("grad_check: step must be positive");
    zero_grad(params);
    auto root = loss();
    if (!std::isfinite(root.item())) throw NonFiniteError("grad_check: loss is not finite");
    backward(root);

    Scalar worst = 0;
    for (auto& p : params) {
        const Mat<Scalar> analytic = p.grad();
        auto& value = p.mutable_value();
        for (Eigen::Index i = 0; i < value.rows(); ++i) {
            for (Eigen::Index j = 0; j < value.cols(); ++j) {
                const Scalar saved = value(i, j);
                value(i, j) = saved + h;
                const Scalar up = loss().item();
                value(i, j) = saved - h;
                const Scalar down = loss().item();
                value(i, j) = saved;
                if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError("grad_check: loss is not finite");
                const Scalar numeric = (up - down) / (Scalar(2) * h);
                const Scalar a = analytic(i, j);
                const Scalar err = std::abs(a - numeric) / std::max(Scalar(1e-8), std::abs(a) + std::abs(numeric));
                worst = std::max(worst, err);
            }
        }
    }
    zero_grad(params);
    return worst;
}

}  // namespace fairsvt::nn
