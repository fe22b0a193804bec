#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ivc/common/error.hpp"

namespace ivc::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in the computation graph. Data is immutable once the producing
/// op returns; only the grad slot is written afterwards.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backward_fn;
    const char* op = "leaf";

    bool is_leaf() const { return parents.empty(); }

    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

/// Handle to a graph node. Copies share the node (reference semantics, like
/// a tensor in most autograd libraries).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (numel(shape) != data.size())
            throw DimensionError("tensor: shape " + shape_str(shape) + " does not match " +
                                 std::to_string(data.size()) + " values");
        node_ = std::make_shared<Node>();
        node_->shape = std::move(shape);
        node_->data = std::move(data);
        node_->requires_grad = requires_grad;
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        const auto n = numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
    }
    static Tensor scalar(double v, bool requires_grad = false) {
        return Tensor({1, 1}, {v}, requires_grad);
    }
    /// rows x cols matrix from row-major values.
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                         bool requires_grad = false) {
        return Tensor({rows, cols}, std::move(values), requires_grad);
    }

    bool defined() const { return static_cast<bool>(node_); }
    const NodePtr& node() const { return node_; }

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->data.size(); }
    std::size_t rows() const { return rank() >= 1 ? node_->shape[0] : 1; }
    std::size_t cols() const { return rank() >= 2 ? node_->shape[1] : 1; }

    const std::vector<double>& data() const { return node_->data; }
    /// Mutable access is for parameters and freshly created leaves only.
    std::vector<double>& mutable_data() { return node_->data; }
    double item() const {
        if (size() != 1) throw ContractError("item: tensor " + shape_str(shape()) + " is not scalar");
        return node_->data[0];
    }
    double operator()(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    bool has_grad() const { return !node_->grad.empty(); }
    /// Gradient buffer; all zeros if nothing has been accumulated yet.
    std::vector<double> grad() const {
        return node_->grad.empty() ? std::vector<double>(size(), 0.0) : node_->grad;
    }
    void zero_grad() { node_->grad.clear(); }

    /// Same values, no history.
    Tensor detach() const { return Tensor(shape(), data(), false); }

private:
    NodePtr node_;
};

/// Create an op output. `requires_grad` is inherited from the parents; the
/// backward closure is dropped when no parent needs gradients.
inline Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                          std::vector<NodePtr> parents, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->shape = std::move(shape);
    node->data = std::move(data);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    node->requires_grad = needs;
    if (needs) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
/// interior gradients are reset first so a repeated call adds exactly one
/// more copy of d(loss)/d(leaf).
inline void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ContractError("backward: loss must be a scalar, got " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS gives a topological order with each node once.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
    loss.node()->grad_buffer()[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace ivc::ad
