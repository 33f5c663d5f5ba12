#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lexcd/shape.hpp"

namespace lexcd {

namespace detail {

// One node of the recorded computation graph. Holds the forward value and,
// once backward() has run, the accumulated gradient. backward_fn scatters
// the node's gradient into its parents.
template <typename T>
struct Node {
    Shape4 shape;
    std::vector<T> val;
    std::vector<T> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.empty()) grad.assign(val.size(), T(0));
    }
};

template <typename T>
std::shared_ptr<Node<T>> make_node(const Shape4& shape,
                                   std::vector<std::shared_ptr<Node<T>>> parents) {
    auto node = std::make_shared<Node<T>>();
    node->shape = shape;
    node->val.resize(static_cast<size_t>(shape.numel()));
    for (const auto& p : parents) {
        if (p->requires_grad) node->requires_grad = true;
    }
    node->parents = std::move(parents);
    return node;
}

}  // namespace detail

// Value-semantics handle to a graph node. Copies share the node; tensors are
// immutable after construction except for explicit in-place parameter updates
// through raw_value().
template <typename T>
class Tensor {
  public:
    using Node = detail::Node<T>;

    Tensor() = default;

    static Tensor zeros(const Shape4& shape, bool requires_grad = false);
    static Tensor full(const Shape4& shape, T value, bool requires_grad = false);
    static Tensor from_vector(const Shape4& shape, std::vector<T> values,
                              bool requires_grad = false);
    static Tensor scalar_value(T value) { return full(Shape4{1, 1, 1, 1}, value); }
    static Tensor from_node(std::shared_ptr<Node> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape4& shape() const { return node_->shape; }
    long long numel() const { return node_->shape.numel(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<T>& value() const { return node_->val; }
    // In-place access for initialization and optimizer steps only.
    std::vector<T>& raw_value() { return node_->val; }

    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<T>& grad() const {
        if (node_->grad.empty()) throw std::runtime_error("tensor has no gradient");
        return node_->grad;
    }
    void zero_grad() { node_->grad.clear(); }

    T item() const {
        if (numel() != 1) {
            throw std::runtime_error("item() on non-scalar tensor " + shape().str());
        }
        return node_->val[0];
    }
    T at(int n, int c, int h, int w) const {
        return node_->val[static_cast<size_t>(flat_index(shape(), n, c, h, w))];
    }

    // Reverse-mode sweep from a scalar root. Gradients accumulate into every
    // reachable node that requires grad (parameters keep theirs until
    // zero_grad()).
    void backward();

    std::shared_ptr<Node> node_ptr() const { return node_; }
    Node* node() const { return node_.get(); }

  private:
    std::shared_ptr<Node> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lexcd
