#include "lexcd/tensor.hpp"

#include <unordered_set>

namespace lexcd {

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape4& shape, bool requires_grad) {
    return full(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape4& shape, T value, bool requires_grad) {
    if (!shape.valid()) {
        throw std::invalid_argument("invalid tensor shape " + shape.str());
    }
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->val.assign(static_cast<size_t>(shape.numel()), value);
    node->requires_grad = requires_grad;
    return from_node(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(const Shape4& shape, std::vector<T> values,
                                 bool requires_grad) {
    if (!shape.valid()) {
        throw std::invalid_argument("invalid tensor shape " + shape.str());
    }
    if (static_cast<long long>(values.size()) != shape.numel()) {
        throw std::invalid_argument("data length " + std::to_string(values.size()) +
                                    " does not match shape " + shape.str());
    }
    auto node = std::make_shared<Node>();
    node->shape = shape;
    node->val = std::move(values);
    node->requires_grad = requires_grad;
    return from_node(std::move(node));
}

template <typename T>
void Tensor<T>::backward() {
    if (!defined()) throw std::runtime_error("backward() on undefined tensor");
    if (numel() != 1) {
        throw std::runtime_error("backward() requires a scalar root, got " + shape().str());
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS; parents-before-node in `order`, so the
    // reverse visits each node after all of its consumers.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace lexcd
