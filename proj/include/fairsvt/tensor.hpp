#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace fairsvt::nn {

/// Dense row-major matrix; every tensor in the core is two-dimensional
/// (frames x features). Scalars are 1x1.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Mat<double>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Node {
    Mat<Scalar> value;
    Mat<Scalar> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    // Pushes this->grad into the parents' grad buffers.
    std::function<void(Node&)> backward_fn;

    Mat<Scalar>& grad_buffer() {
        if (grad.size() == 0) {
            grad = Mat<Scalar>::Zero(value.rows(), value.cols());
        }
        return grad;
    }
};

/// Handle to a node in a reverse-mode graph. Copies share the node.
template <typename Scalar>
class BasicTensor {
public:
    using NodeT = Node<Scalar>;
    using MatT = Mat<Scalar>;

    BasicTensor() = default;
    explicit BasicTensor(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

    static BasicTensor constant(MatT value) {
        auto n = std::make_shared<NodeT>();
        n->value = std::move(value);
        return BasicTensor(std::move(n));
    }

    static BasicTensor parameter(MatT value) {
        auto n = std::make_shared<NodeT>();
        n->value = std::move(value);
        n->requires_grad = true;
        return BasicTensor(std::move(n));
    }

    bool defined() const { return static_cast<bool>(node_); }
    const MatT& value() const { return node_->value; }
    MatT& mutable_value() { return node_->value; }
    bool has_grad() const { return node_->grad.size() != 0; }

    // Zero-filled when no gradient reached this node.
    MatT grad() const {
        if (has_grad()) return node_->grad;
        return MatT::Zero(rows(), cols());
    }

    void zero_grad() { node_->grad.resize(0, 0); }
    bool requires_grad() const { return node_->requires_grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }

    Scalar item() const {
        if (rows() != 1 || cols() != 1) throw ShapeError("item() on a non-scalar tensor");
        return node_->value(0, 0);
    }

    const std::shared_ptr<NodeT>& node() const { return node_; }

private:
    std::shared_ptr<NodeT> node_;
};

using Tensor = BasicTensor<double>;

namespace detail {

template <typename Scalar>
BasicTensor<Scalar> make_result(Mat<Scalar> value,
                                std::vector<std::shared_ptr<Node<Scalar>>> parents,
                                std::function<void(Node<Scalar>&)> backward_fn) {
    auto n = std::make_shared<Node<Scalar>>();
    n->value = std::move(value);
    for (const auto& p : parents) {
        if (p->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return BasicTensor<Scalar>(std::move(n));
}

template <typename Scalar>
void check_finite(const Mat<Scalar>& m, const char* op) {
    if (!m.allFinite()) throw NonFiniteError(std::string("non-finite value produced by ") + op);
}

}  // namespace detail

/// Runs reverse-mode accumulation from a scalar root. Gradients are added
/// into the existing buffers of leaf parameters; call zero_grad between steps.
template <typename Scalar>
void backward(const BasicTensor<Scalar>& root) {
    if (root.rows() != 1 || root.cols() != 1) throw ShapeError("backward() needs a scalar root");
    if (!root.requires_grad()) return;

    std::vector<Node<Scalar>*> order;
    std::unordered_set<Node<Scalar>*> seen;
    // Iterative post-order DFS.
    std::vector<std::pair<Node<Scalar>*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node<Scalar>* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    // Interior buffers are reset so a graph can be differentiated more than
    // once (e.g. L_y and L_A separately); leaves keep accumulating.
    for (Node<Scalar>* n : order) {
        if (n->backward_fn) n->grad.resize(0, 0);
    }
    root.node()->grad_buffer().setConstant(Scalar(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<Scalar>* n = *it;
        if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
    }
}

}  // namespace fairsvt::nn
