#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hydrodeep/tensor.hpp"

namespace hydrodeep {

/// One recorded step of a forward pass. `backprop` reads this node's grad and
/// accumulates into the parents' grads; `parents` exists for topological
/// ordering and keeps the execution record alive.
struct Node {
    Tensor value;
    Tensor grad;  // allocated only when requires_grad
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Node&)> backprop;
    bool requires_grad = false;
};

using NodePtr = std::shared_ptr<Node>;

/// Handle to a node of the execution record. Copying a Var shares the node.
class Var {
  public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    /// Leaf with no gradient (plain data).
    static Var constant(Tensor t);

    /// Leaf that accumulates gradient (a trainable value).
    static Var parameter(Tensor t);

    bool defined() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    Tensor& grad() { return node_->grad; }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const NodePtr& node() const { return node_; }

    /// Reverse-mode sweep from this node. The no-argument form seeds a scalar
    /// output with 1. Throws StateError when no forward pass is recorded.
    void backward() const;
    void backward(const Tensor& seed) const;

    void zero_grad();

  private:
    NodePtr node_;
};

/// Builds an op node: value plus how to push gradient back to parents. When no
/// parent requires grad the record is pruned to a constant.
Var make_op(Tensor value, std::vector<NodePtr> parents, std::function<void(const Node&)> backprop);

// Elementwise and small linear-algebra primitives.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);

/// W [m x n] times x [n] -> [m].
Var matvec(const Var& w, const Var& x);

/// Concatenation of 1-D vars.
Var concat(const std::vector<Var>& parts);

/// Row t of a [T x C] var -> [C].
Var row(const Var& m, std::size_t t);

/// Stack T vars of shape [C] into [T x C].
Var stack_rows(const std::vector<Var>& rows);

/// Flatten any shape to 1-D.
Var flatten(const Var& a);

Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var relu(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace hydrodeep
