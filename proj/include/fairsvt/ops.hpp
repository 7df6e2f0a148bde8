#pragma once

#include "fairsvt/tensor.hpp"

#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

// The fixed operator set. Each op computes its forward value eagerly and,
// when any input requires a gradient, records an exact analytic backward.

namespace fairsvt::nn {

namespace detail {

template <typename Scalar>
Mat<Scalar>& parent_grad(Node<Scalar>& self, std::size_t i) {
    return self.parents[i]->grad_buffer();
}

template <typename Scalar>
bool parent_needs(const Node<Scalar>& self, std::size_t i) {
    return self.parents[i]->requires_grad;
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

// log(1 + exp(-|x|)) + max(x, 0)
template <typename Scalar>
Scalar softplus(Scalar x) {
    return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace detail

/// x (N x in) * W (in x out) + b (1 x out).
template <typename Scalar>
BasicTensor<Scalar> linear(const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& w,
                           const BasicTensor<Scalar>& b) {
    if (x.cols() != w.rows()) throw ShapeError("linear: input width does not match weight rows");
    if (b.rows() != 1 || b.cols() != w.cols()) throw ShapeError("linear: bias must be 1 x out");
    Mat<Scalar> out = x.value() * w.value();
    out.rowwise() += b.value().row(0);
    detail::check_finite(out, "linear");
    return detail::make_result<Scalar>(
        std::move(out), {x.node(), w.node(), b.node()}, [](Node<Scalar>& self) {
            const auto& xv = self.parents[0]->value;
            const auto& wv = self.parents[1]->value;
            if (detail::parent_needs(self, 0)) detail::parent_grad(self, 0).noalias() += self.grad * wv.transpose();
            if (detail::parent_needs(self, 1)) detail::parent_grad(self, 1).noalias() += xv.transpose() * self.grad;
            if (detail::parent_needs(self, 2)) detail::parent_grad(self, 2) += self.grad.colwise().sum();
        });
}

namespace detail {

// Rows are stacked sequences of length seq_len; taps that fall outside the
// owning sequence read zero (same-padding per sequence).
template <typename Scalar>
Mat<Scalar> im2col(const Mat<Scalar>& x, int kernel, Eigen::Index seq_len) {
    const Eigen::Index n = x.rows();
    const Eigen::Index c = x.cols();
    const int pad = kernel / 2;
    Mat<Scalar> cols = Mat<Scalar>::Zero(n, c * kernel);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index base = (t / seq_len) * seq_len;
        const Eigen::Index local = t - base;
        for (int j = 0; j < kernel; ++j) {
            const Eigen::Index src = local + j - pad;
            if (src < 0 || src >= seq_len) continue;
            cols.block(t, j * c, 1, c) = x.row(base + src);
        }
    }
    return cols;
}

template <typename Scalar>
void col2im_add(const Mat<Scalar>& dcols, int kernel, Eigen::Index seq_len, Mat<Scalar>& dx) {
    const Eigen::Index n = dx.rows();
    const Eigen::Index c = dx.cols();
    const int pad = kernel / 2;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index base = (t / seq_len) * seq_len;
        const Eigen::Index local = t - base;
        for (int j = 0; j < kernel; ++j) {
            const Eigen::Index src = local + j - pad;
            if (src < 0 || src >= seq_len) continue;
            dx.row(base + src) += dcols.block(t, j * c, 1, c);
        }
    }
}

}  // namespace detail

/// Stride-1 "same" convolution along the frame axis. `w` is (kernel*in) x out,
/// tap-major. `seq_len` splits the rows into independent sequences; 0 means
/// one sequence spanning all rows.
template <typename Scalar>
BasicTensor<Scalar> conv1d(const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& w,
                           const BasicTensor<Scalar>& b, int kernel, Eigen::Index seq_len = 0) {
    if (kernel < 1 || kernel % 2 == 0) throw ShapeError("conv1d: kernel must be odd and positive");
    if (w.rows() != x.cols() * kernel) throw ShapeError("conv1d: weight rows must be kernel * in_channels");
    if (b.rows() != 1 || b.cols() != w.cols()) throw ShapeError("conv1d: bias must be 1 x out");
    if (seq_len == 0) seq_len = x.rows();
    if (seq_len <= 0 || x.rows() % seq_len != 0) throw ShapeError("conv1d: rows must be a multiple of seq_len");

    Mat<Scalar> cols = detail::im2col(x.value(), kernel, seq_len);
    Mat<Scalar> out = cols * w.value();
    out.rowwise() += b.value().row(0);
    detail::check_finite(out, "conv1d");
    return detail::make_result<Scalar>(
        std::move(out), {x.node(), w.node(), b.node()},
        [cols = std::move(cols), kernel, seq_len](Node<Scalar>& self) {
            const auto& wv = self.parents[1]->value;
            if (detail::parent_needs(self, 0)) {
                Mat<Scalar> dcols = self.grad * wv.transpose();
                detail::col2im_add(dcols, kernel, seq_len, detail::parent_grad(self, 0));
            }
            if (detail::parent_needs(self, 1)) detail::parent_grad(self, 1).noalias() += cols.transpose() * self.grad;
            if (detail::parent_needs(self, 2)) detail::parent_grad(self, 2) += self.grad.colwise().sum();
        });
}

/// max(x, 0); the derivative at 0 is taken as 0.
template <typename Scalar>
BasicTensor<Scalar> relu(const BasicTensor<Scalar>& x) {
    Mat<Scalar> out = x.value().cwiseMax(Scalar(0));
    return detail::make_result<Scalar>(std::move(out), {x.node()}, [](Node<Scalar>& self) {
        const auto& xv = self.parents[0]->value;
        detail::parent_grad(self, 0) += (xv.array() > Scalar(0)).select(self.grad, Scalar(0)).matrix();
    });
}

template <typename Scalar>
BasicTensor<Scalar> sigmoid(const BasicTensor<Scalar>& x) {
    Mat<Scalar> out = x.value().unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); });
    return detail::make_result<Scalar>(out, {x.node()}, [s = out](Node<Scalar>& self) {
        detail::parent_grad(self, 0).array() += self.grad.array() * s.array() * (Scalar(1) - s.array());
    });
}

namespace detail {

template <typename Scalar>
Mat<Scalar> row_softmax(const Mat<Scalar>& x) {
    Mat<Scalar> out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar m = x.row(r).maxCoeff();
        out.row(r) = (x.row(r).array() - m).exp().matrix();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

}  // namespace detail

/// Row-wise softmax.
template <typename Scalar>
BasicTensor<Scalar> softmax(const BasicTensor<Scalar>& x) {
    Mat<Scalar> out = detail::row_softmax(x.value());
    return detail::make_result<Scalar>(out, {x.node()}, [s = out](Node<Scalar>& self) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots = (self.grad.array() * s.array()).rowwise().sum();
        Mat<Scalar> g = self.grad;
        g.colwise() -= dots;
        detail::parent_grad(self, 0).array() += s.array() * g.array();
    });
}

/// Concatenation along the last (feature) dimension.
template <typename Scalar>
BasicTensor<Scalar> concat(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
    if (a.rows() != b.rows()) throw ShapeError("concat: row counts differ");
    Mat<Scalar> out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const Eigen::Index wa = a.cols();
    const Eigen::Index wb = b.cols();
    return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()}, [wa, wb](Node<Scalar>& self) {
        if (detail::parent_needs(self, 0)) detail::parent_grad(self, 0) += self.grad.leftCols(wa);
        if (detail::parent_needs(self, 1)) detail::parent_grad(self, 1) += self.grad.rightCols(wb);
    });
}

/// Mean over frames: N x D -> 1 x D.
template <typename Scalar>
BasicTensor<Scalar> temporal_mean(const BasicTensor<Scalar>& x) {
    if (x.rows() == 0) throw ShapeError("temporal_mean: empty input");
    Mat<Scalar> out = x.value().colwise().mean();
    const Eigen::Index n = x.rows();
    return detail::make_result<Scalar>(std::move(out), {x.node()}, [n](Node<Scalar>& self) {
        detail::parent_grad(self, 0).rowwise() += self.grad.row(0) / static_cast<Scalar>(n);
    });
}

template <typename Scalar>
BasicTensor<Scalar> slice_cols(const BasicTensor<Scalar>& x, Eigen::Index start, Eigen::Index width) {
    if (start < 0 || width < 0 || start + width > x.cols()) throw ShapeError("slice_cols: out of range");
    Mat<Scalar> out = x.value().middleCols(start, width);
    return detail::make_result<Scalar>(std::move(out), {x.node()}, [start, width](Node<Scalar>& self) {
        detail::parent_grad(self, 0).middleCols(start, width) += self.grad;
    });
}

template <typename Scalar>
BasicTensor<Scalar> slice_rows(const BasicTensor<Scalar>& x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > x.rows()) throw ShapeError("slice_rows: out of range");
    Mat<Scalar> out = x.value().middleRows(start, count);
    return detail::make_result<Scalar>(std::move(out), {x.node()}, [start, count](Node<Scalar>& self) {
        detail::parent_grad(self, 0).middleRows(start, count) += self.grad;
    });
}

template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add: shapes differ");
    Mat<Scalar> out = a.value() + b.value();
    return detail::make_result<Scalar>(std::move(out), {a.node(), b.node()}, [](Node<Scalar>& self) {
        if (detail::parent_needs(self, 0)) detail::parent_grad(self, 0) += self.grad;
        if (detail::parent_needs(self, 1)) detail::parent_grad(self, 1) += self.grad;
    });
}

template <typename Scalar>
BasicTensor<Scalar> scale(const BasicTensor<Scalar>& a, Scalar factor) {
    Mat<Scalar> out = a.value() * factor;
    return detail::make_result<Scalar>(std::move(out), {a.node()}, [factor](Node<Scalar>& self) {
        detail::parent_grad(self, 0) += self.grad * factor;
    });
}

/// Identity forward; multiplies the incoming gradient by -lambda.
template <typename Scalar>
BasicTensor<Scalar> grad_reverse(const BasicTensor<Scalar>& x, Scalar lambda) {
    if (!(lambda >= Scalar(0))) throw std::invalid_argument("grad_reverse: lambda must be >= 0");
    return detail::make_result<Scalar>(x.value(), {x.node()}, [lambda](Node<Scalar>& self) {
        detail::parent_grad(self, 0) -= lambda * self.grad;
    });
}

/// Same value, cut from the graph.
template <typename Scalar>
BasicTensor<Scalar> detach(const BasicTensor<Scalar>& x) {
    return BasicTensor<Scalar>::constant(x.value());
}

/// Mean binary cross-entropy over all entries, computed from logits.
template <typename Scalar>
BasicTensor<Scalar> bce_with_logits(const BasicTensor<Scalar>& logits, const std::type_identity_t<Mat<Scalar>>& targets) {
    if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
        throw ShapeError("bce_with_logits: target shape mismatch");
    if (logits.value().size() == 0) throw ShapeError("bce_with_logits: empty input");
    const auto& x = logits.value();
    const Scalar n = static_cast<Scalar>(x.size());
    Scalar total = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            total += detail::softplus(x(i, j)) - x(i, j) * targets(i, j);
    Mat<Scalar> out(1, 1);
    out(0, 0) = total / n;
    detail::check_finite(out, "bce_with_logits");
    return detail::make_result<Scalar>(std::move(out), {logits.node()}, [targets, n](Node<Scalar>& self) {
        const auto& xv = self.parents[0]->value;
        const Scalar g = self.grad(0, 0) / n;
        auto& dst = detail::parent_grad(self, 0);
        for (Eigen::Index i = 0; i < xv.rows(); ++i)
            for (Eigen::Index j = 0; j < xv.cols(); ++j)
                dst(i, j) += g * (detail::stable_sigmoid(xv(i, j)) - targets(i, j));
    });
}

/// Mean categorical cross-entropy over rows; targets are class indices.
template <typename Scalar>
BasicTensor<Scalar> ce_with_logits(const BasicTensor<Scalar>& logits, std::span<const int> targets) {
    const auto& x = logits.value();
    if (static_cast<Eigen::Index>(targets.size()) != x.rows()) throw ShapeError("ce_with_logits: one target per row");
    if (x.rows() == 0) throw ShapeError("ce_with_logits: empty input");
    for (int t : targets)
        if (t < 0 || t >= x.cols()) throw std::out_of_range("ce_with_logits: class index out of range");

    Mat<Scalar> probs = detail::row_softmax(x);
    Scalar total = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Scalar m = x.row(r).maxCoeff();
        const Scalar lse = m + std::log((x.row(r).array() - m).exp().sum());
        total += lse - x(r, targets[r]);
    }
    const Scalar n = static_cast<Scalar>(x.rows());
    Mat<Scalar> out(1, 1);
    out(0, 0) = total / n;
    detail::check_finite(out, "ce_with_logits");
    std::vector<int> tgt(targets.begin(), targets.end());
    return detail::make_result<Scalar>(
        std::move(out), {logits.node()}, [probs = std::move(probs), tgt = std::move(tgt), n](Node<Scalar>& self) {
            const Scalar g = self.grad(0, 0) / n;
            auto& dst = detail::parent_grad(self, 0);
            dst += g * probs;
            for (std::size_t r = 0; r < tgt.size(); ++r) dst(static_cast<Eigen::Index>(r), tgt[r]) -= g;
        });
}

}  // namespace fairsvt::nn
