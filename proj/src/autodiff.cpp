#include "hydrodeep/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

Var Var::constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = false;
    return Var(std::move(n));
}

Var Var::parameter(Tensor t) {
    auto n = std::make_shared<Node>();
    n->grad = Tensor(t.shape);
    n->value = std::move(t);
    n->requires_grad = true;
    return Var(std::move(n));
}

void Var::zero_grad() {
    if (node_ && node_->requires_grad) node_->grad.fill(0.0);
}

void Var::backward() const {
    if (!node_) throw StateError("backward: no recorded forward pass");
    if (node_->value.size() != 1) {
        throw DimensionError("backward without seed requires a scalar output");
    }
    backward(Tensor::scalar(1.0));
}

void Var::backward(const Tensor& seed) const {
    if (!node_) throw StateError("backward: no recorded forward pass");
    if (!node_->requires_grad) return;  // nothing reaches a trainable leaf
    require_same_shape(seed, node_->value, "backward seed");

    // Iterative topological order over the recorded graph.
    std::vector<Node*> order;
    std::unordered_set<Node*> done;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    while (!stack.empty()) {
        auto& [n, next_child] = stack.back();
        if (done.count(n)) {
            stack.pop_back();
            continue;
        }
        if (next_child < n->parents.size()) {
            Node* child = n->parents[next_child].get();
            ++next_child;
            if (child->requires_grad && !done.count(child)) stack.emplace_back(child, 0);
        } else {
            done.insert(n);
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (std::size_t i = 0; i < seed.size(); ++i) node_->grad[i] += seed[i];
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

Var make_op(Tensor value, std::vector<NodePtr> parents, std::function<void(const Node&)> backprop) {
    bool needs = false;
    for (const auto& p : parents) {
        if (p->requires_grad) {
            needs = true;
            break;
        }
    }
    if (!needs) return Var::constant(std::move(value));
    auto n = std::make_shared<Node>();
    n->grad = Tensor(value.shape);
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    n->requires_grad = true;
    return Var(std::move(n));
}

namespace {

void accum(const NodePtr& p, const std::vector<double>& g) {
    if (!p->requires_grad) return;
    for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(std::move(out), {pa, pb}, [pa, pb](const Node& n) {
        accum(pa, n.grad.data);
        accum(pb, n.grad.data);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(std::move(out), {pa, pb}, [pa, pb](const Node& n) {
        accum(pa, n.grad.data);
        if (pb->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] -= n.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(std::move(out), {pa, pb}, [pa, pb](const Node& n) {
        if (pa->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) pb->grad[i] += n.grad[i] * pa->value[i];
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a.value();
    for (double& v : out.data) v *= c;
    auto pa = a.node();
    return make_op(std::move(out), {pa}, [pa, c](const Node& n) {
        if (pa->requires_grad) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += c * n.grad[i];
        }
    });
}

Var matvec(const Var& w, const Var& x) {
    const Tensor& W = w.value();
    const Tensor& X = x.value();
    if (W.rank() != 2 || X.rank() != 1 || W.shape[1] != X.shape[0]) {
        throw DimensionError("matvec: incompatible shapes " + W.shape_string() + " x " + X.shape_string());
    }
    const std::size_t m = W.shape[0];
    const std::size_t n = W.shape[1];
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        const double* wrow = W.data.data() + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * X[j];
        out[i] = acc;
    }
    auto pw = w.node();
    auto px = x.node();
    return make_op(std::move(out), {pw, px}, [pw, px, m, n](const Node& node) {
        if (pw->requires_grad) {
            for (std::size_t i = 0; i < m; ++i) {
                const double g = node.grad[i];
                if (g == 0.0) continue;
                double* grow = pw->grad.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) grow[j] += g * px->value[j];
            }
        }
        if (px->requires_grad) {
            for (std::size_t i = 0; i < m; ++i) {
                const double g = node.grad[i];
                if (g == 0.0) continue;
                const double* wrow = pw->value.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) px->grad[j] += g * wrow[j];
            }
        }
    });
}

Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ParameterError("concat: empty input");
    std::size_t total = 0;
    std::vector<NodePtr> parents;
    parents.reserve(parts.size());
    for (const Var& p : parts) {
        if (p.value().rank() != 1) throw DimensionError("concat expects 1-D inputs");
        total += p.value().size();
        parents.push_back(p.node());
    }
    Tensor out({total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        for (std::size_t i = 0; i < p.value().size(); ++i) out[off + i] = p.value()[i];
        off += p.value().size();
    }
    auto ps = parents;
    return make_op(std::move(out), std::move(parents), [ps](const Node& n) {
        std::size_t off2 = 0;
        for (const auto& p : ps) {
            const std::size_t len = p->value.size();
            if (p->requires_grad) {
                for (std::size_t i = 0; i < len; ++i) p->grad[i] += n.grad[off2 + i];
            }
            off2 += len;
        }
    });
}

Var row(const Var& m, std::size_t t) {
    const Tensor& M = m.value();
    if (M.rank() != 2) throw DimensionError("row expects a rank-2 input");
    const std::size_t rows = M.shape[0];
    const std::size_t cols = M.shape[1];
    if (t >= rows) throw DimensionError("row index out of range");
    Tensor out({cols});
    for (std::size_t j = 0; j < cols; ++j) out[j] = M.at(t, j);
    auto pm = m.node();
    return make_op(std::move(out), {pm}, [pm, t, cols](const Node& n) {
        if (!pm->requires_grad) return;
        for (std::size_t j = 0; j < cols; ++j) pm->grad[t * cols + j] += n.grad[j];
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw WindowError("stack_rows: empty sequence");
    const std::size_t cols = rows.front().value().size();
    std::vector<NodePtr> parents;
    parents.reserve(rows.size());
    Tensor out({rows.size(), cols});
    for (std::size_t t = 0; t < rows.size(); ++t) {
        const Tensor& r = rows[t].value();
        if (r.rank() != 1 || r.size() != cols) throw DimensionError("stack_rows: ragged rows");
        for (std::size_t j = 0; j < cols; ++j) out.at(t, j) = r[j];
        parents.push_back(rows[t].node());
    }
    auto ps = parents;
    return make_op(std::move(out), std::move(parents), [ps, cols](const Node& n) {
        for (std::size_t t = 0; t < ps.size(); ++t) {
            if (!ps[t]->requires_grad) continue;
            for (std::size_t j = 0; j < cols; ++j) ps[t]->grad[j] += n.grad[t * cols + j];
        }
    });
}

Var flatten(const Var& a) {
    Tensor out({a.value().size()}, a.value().data);
    auto pa = a.node();
    return make_op(std::move(out), {pa}, [pa](const Node& n) { accum(pa, n.grad.data); });
}

Var sigmoid(const Var& x) {
    Tensor out = x.value();
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    auto px = x.node();
    auto out_copy = out.data;  // y values for the derivative y*(1-y)
    return make_op(std::move(out), {px}, [px, y = std::move(out_copy)](const Node& n) {
        if (!px->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad[i] += n.grad[i] * y[i] * (1.0 - y[i]);
    });
}

Var tanh(const Var& x) {
    Tensor out = x.value();
    for (double& v : out.data) v = std::tanh(v);
    auto px = x.node();
    auto y = out.data;
    return make_op(std::move(out), {px}, [px, y = std::move(y)](const Node& n) {
        if (!px->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad[i] += n.grad[i] * (1.0 - y[i] * y[i]);
    });
}

Var relu(const Var& x) {
    Tensor out = x.value();
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    auto px = x.node();
    return make_op(std::move(out), {px}, [px](const Node& n) {
        if (!px->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            if (px->value[i] > 0.0) px->grad[i] += n.grad[i];
        }
    });
}

Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value().data) s += v;
    auto px = x.node();
    return make_op(Tensor::scalar(s), {px}, [px](const Node& n) {
        if (!px->requires_grad) return;
        const double g = n.grad[0];
        for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    });
}

Var mean(const Var& x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw DimensionError("mean of empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

}  // namespace hydrodeep
