#pragma once

#include "fairsvt/tensor.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fairsvt::nn {

/// Adam moments for one parameter group. Each group carries its own
/// learning rate, which is how the encoder / note head / attribute head get
/// separate rates.
template <typename Scalar>
struct BasicOptimState {
    Scalar lr = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar eps = Scalar(1e-8);
    long step = 0;
    std::vector<Mat<Scalar>> m;
    std::vector<Mat<Scalar>> v;
};

using OptimState = BasicOptimState<double>;

template <typename Scalar>
BasicOptimState<Scalar> make_adam_state(std::span<const BasicTensor<Scalar>> params, Scalar lr) {
    BasicOptimState<Scalar> s;
    s.lr = lr;
    for (const auto& p : params) {
        s.m.push_back(Mat<Scalar>::Zero(p.rows(), p.cols()));
        s.v.push_back(Mat<Scalar>::Zero(p.rows(), p.cols()));
    }
    return s;
}

/// Bias-corrected Adam update using each parameter's accumulated gradient.
/// A parameter no gradient reached is treated as having a zero gradient.
template <typename Scalar>
void adam_step(std::span<BasicTensor<Scalar>> params, BasicOptimState<Scalar>& state) {
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("adam_step: optimizer state does not match parameter list");
    ++state.step;
    const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
    const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.rows() != p.rows() || m.cols() != p.cols()) throw ShapeError("adam_step: moment shape mismatch");
        if (p.has_grad()) {
            const auto& g = p.node()->grad;
            m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
            v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseAbs2();
        } else {
            m *= state.beta1;
            v *= state.beta2;
        }
        p.mutable_value().array() -=
            state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
    }
}

template <typename Scalar>
void sgd_step(std::span<BasicTensor<Scalar>> params, Scalar lr) {
    for (auto& p : params) {
        if (p.has_grad()) p.mutable_value() -= lr * p.node()->grad;
    }
}

template <typename Scalar>
void zero_grad(std::span<BasicTensor<Scalar>> params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace fairsvt::nn
