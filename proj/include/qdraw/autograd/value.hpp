#pragma once

#include "qdraw/autograd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qdraw::autograd {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One node of the (acyclic) computation graph. `backward_fn` reads this
/// node's grad and accumulates into the parents' grads.
struct Node {
    Tensor data;
    Tensor grad; // allocated lazily on first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node &)> backward_fn;

    Tensor &ensure_grad() {
        if (grad.numel() == 0)
            grad = Tensor::zeros(data.shape);
        return grad;
    }
};

/// Handle to a graph node. Copies share the node (autodiff fan-out works
/// through shared gradient accumulation).
class Value {
  public:
    Value() = default;

    static Value param(Tensor t) {
        Value v;
        v.node_ = std::make_shared<Node>();
        v.node_->data = std::move(t);
        v.node_->requires_grad = true;
        return v;
    }

    static Value constant(Tensor t) {
        Value v;
        v.node_ = std::make_shared<Node>();
        v.node_->data = std::move(t);
        return v;
    }

    /// Node with caller-supplied backward. Gradient flows to every parent the
    /// closure writes to; requires_grad is inherited from the parents.
    static Value custom(Tensor out, std::vector<Value> parents,
                        std::function<void(Node &)> backward) {
        Value v;
        v.node_ = std::make_shared<Node>();
        v.node_->data = std::move(out);
        v.node_->parents.reserve(parents.size());
        for (Value &p : parents) {
            v.node_->requires_grad = v.node_->requires_grad || p.requires_grad();
            v.node_->parents.push_back(p.node_);
        }
        if (v.node_->requires_grad)
            v.node_->backward_fn = std::move(backward);
        return v;
    }

    bool defined() const { return node_ != nullptr; }
    const Tensor &data() const { return node_->data; }
    Tensor &mutable_data() { return node_->data; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool r) { node_->requires_grad = r; }

    bool has_grad() const { return node_ && node_->grad.numel() > 0; }
    const Tensor &grad() const { return node_->ensure_grad(); }
    Tensor &mutable_grad() { return node_->ensure_grad(); }
    void zero_grad() { node_->ensure_grad().fill(0.0); }

    NodePtr node() const { return node_; }

    /// Reverse pass from a scalar root. Visits each reachable node exactly
    /// once, in reverse topological order.
    void backward(double seed = 1.0) const {
        if (node_->data.numel() != 1)
            throw std::invalid_argument("backward: root must be a scalar, got shape " +
                                        node_->data.shape.str());
        std::vector<Node *> order = topo_order();
        node_->ensure_grad().v[0] = seed;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node *n = *it;
            if (n->backward_fn && n->requires_grad)
                n->backward_fn(*n);
        }
    }

  private:
    std::vector<Node *> topo_order() const {
        std::vector<Node *> order;
        std::unordered_set<Node *> visited;
        // Iterative DFS; sequences make chains deep enough to distrust recursion.
        std::vector<std::pair<Node *, std::size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        visited.insert(node_.get());
        while (!stack.empty()) {
            auto &[n, next] = stack.back();
            if (next < n->parents.size()) {
                Node *p = n->parents[next++].get();
                if (p->requires_grad && visited.insert(p).second)
                    stack.emplace_back(p, 0);
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
        return order;
    }

    NodePtr node_;
};

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

inline Value add(const Value &a, const Value &b) {
    check_same_shape(a.data(), b.data(), "add");
    Tensor out = a.data();
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.v[i] += b.data().v[i];
    return Value::custom(std::move(out), {a, b}, [](Node &self) {
        for (int p = 0; p < 2; ++p) {
            Node &parent = *self.parents[static_cast<std::size_t>(p)];
            if (!parent.requires_grad)
                continue;
            Tensor &g = parent.ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i)
                g.v[i] += self.grad.v[i];
        }
    });
}

/// Elementwise (Hadamard) product.
inline Value mul(const Value &a, const Value &b) {
    check_same_shape(a.data(), b.data(), "mul");
    Tensor out = a.data();
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.v[i] *= b.data().v[i];
    return Value::custom(std::move(out), {a, b}, [](Node &self) {
        Node &pa = *self.parents[0];
        Node &pb = *self.parents[1];
        if (pa.requires_grad) {
            Tensor &g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i)
                g.v[i] += self.grad.v[i] * pb.data.v[i];
        }
        if (pb.requires_grad) {
            Tensor &g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i)
                g.v[i] += self.grad.v[i] * pa.data.v[i];
        }
    });
}

inline Value scale(const Value &a, double c) {
    Tensor out = a.data();
    for (double &x : out.v)
        x *= c;
    return Value::custom(std::move(out), {a}, [c](Node &self) {
        Node &p = *self.parents[0];
        if (!p.requires_grad)
            return;
        Tensor &g = p.ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i)
            g.v[i] += c * self.grad.v[i];
    });
}

/// matrix [m x n] * vector [n] -> [m], or matrix [m x n] * matrix [n x p] -> [m x p].
inline Value matmul(const Value &a, const Value &b) {
    const Tensor &A = a.data();
    const Tensor &B = b.data();
    if (A.shape.rank != 2)
        throw std::invalid_argument("matmul: lhs must be rank 2, got " + A.shape.str() + " * " +
                                    B.shape.str());
    const std::size_t m = A.rows(), n = A.cols();
    if (B.shape.rank == 1) {
        if (B.numel() != n)
            throw std::invalid_argument("matmul: shape mismatch " + A.shape.str() + " * " +
                                        B.shape.str());
        Tensor out(Shape{m});
        for (std::size_t i = 0; i < m; ++i) {
            // sixteen independent accumulators so the reduction vectorizes
            // (two fma chains) while keeping a fixed, run-to-run-identical
            // summation order
            const double *row = &A.v[i * n];
            const double *x = B.v.data();
            double acc[16] = {0};
            std::size_t k = 0;
            for (; k + 16 <= n; k += 16)
                for (std::size_t u = 0; u < 16; ++u)
                    acc[u] += row[k + u] * x[k + u];
            for (std::size_t u = 8; u < 16; ++u)
                acc[u - 8] += acc[u];
            double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                       ((acc[4] + acc[5]) + (acc[6] + acc[7]));
            for (; k < n; ++k)
                s += row[k] * x[k];
            out.v[i] = s;
        }
        return Value::custom(std::move(out), {a, b}, [m, n](Node &self) {
            Node &pa = *self.parents[0];
            Node &pb = *self.parents[1];
            const double *g = self.grad.v.data();
            if (pa.requires_grad) {
                Tensor &ga = pa.ensure_grad();
                const double *x = pb.data.v.data();
                for (std::size_t i = 0; i < m; ++i) {
                    double *row = &ga.v[i * n];
                    const double gi = g[i];
                    for (std::size_t k = 0; k < n; ++k)
                        row[k] += gi * x[k];
                }
            }
            if (pb.requires_grad) {
                Tensor &gb = pb.ensure_grad();
                const double *w = pa.data.v.data();
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = g[i];
                    const double *row = &w[i * n];
                    for (std::size_t k = 0; k < n; ++k)
                        gb.v[k] += row[k] * gi;
                }
            }
        });
    }
    if (B.shape.rank == 2) {
        if (B.rows() != n)
            throw std::invalid_argument("matmul: shape mismatch " + A.shape.str() + " * " +
                                        B.shape.str());
        const std::size_t p = B.cols();
        Tensor out(Shape{m, p});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const double aik = A.v[i * n + k];
                for (std::size_t j = 0; j < p; ++j)
                    out.v[i * p + j] += aik * B.v[k * p + j];
            }
        return Value::custom(std::move(out), {a, b}, [m, n, p](Node &self) {
            Node &pa = *self.parents[0];
            Node &pb = *self.parents[1];
            const double *g = self.grad.v.data();
            if (pa.requires_grad) {
                Tensor &ga = pa.ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t k = 0; k < n; ++k) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < p; ++j)
                            s += g[i * p + j] * pb.data.v[k * p + j];
                        ga.v[i * n + k] += s;
                    }
            }
            if (pb.requires_grad) {
                Tensor &gb = pb.ensure_grad();
                for (std::size_t k = 0; k < n; ++k)
                    for (std::size_t i = 0; i < m; ++i) {
                        const double aik = pa.data.v[i * n + k];
                        for (std::size_t j = 0; j < p; ++j)
                            gb.v[k * p + j] += aik * g[i * p + j];
                    }
            }
        });
    }
    throw std::invalid_argument("matmul: rhs must be rank 1 or 2, got " + B.shape.str());
}

namespace detail {

template <typename Fwd, typename Dfn>
Value unary_elementwise(const Value &a, Fwd fwd, Dfn dfn) {
    Tensor out = a.data();
    for (double &x : out.v)
        x = fwd(x);
    return Value::custom(std::move(out), {a}, [dfn](Node &self) {
        Node &p = *self.parents[0];
        if (!p.requires_grad)
            return;
        Tensor &g = p.ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i)
            g.v[i] += self.grad.v[i] * dfn(p.data.v[i], self.data.v[i]);
    });
}

} // namespace detail

inline Value tanh(const Value &a) {
    return detail::unary_elementwise(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

inline Value sigmoid(const Value &a) {
    return detail::unary_elementwise(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Value relu(const Value &a) {
    return detail::unary_elementwise(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// Concatenation of rank-1 values.
inline Value concat(const std::vector<Value> &parts) {
    if (parts.empty())
        throw std::invalid_argument("concat: no inputs");
    std::size_t total = 0;
    for (const Value &p : parts) {
        if (p.data().shape.rank != 1)
            throw std::invalid_argument("concat: inputs must be rank 1, got " +
                                        p.data().shape.str());
        total += p.data().numel();
    }
    Tensor out(Shape{total});
    std::size_t off = 0;
    for (const Value &p : parts) {
        std::copy(p.data().v.begin(), p.data().v.end(), out.v.begin() + static_cast<long>(off));
        off += p.data().numel();
    }
    return Value::custom(std::move(out), parts, [](Node &self) {
        std::size_t off = 0;
        for (NodePtr &parent : self.parents) {
            const std::size_t n = parent->data.numel();
            if (parent->requires_grad) {
                Tensor &g = parent->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    g.v[i] += self.grad.v[off + i];
            }
            off += n;
        }
    });
}

/// Contiguous rank-1 slice [offset, offset + length).
inline Value slice(const Value &a, std::size_t offset, std::size_t length) {
    if (a.data().shape.rank != 1)
        throw std::invalid_argument("slice: input must be rank 1, got " + a.data().shape.str());
    if (offset + length > a.data().numel())
        throw std::invalid_argument("slice: range [" + std::to_string(offset) + ", " +
                                    std::to_string(offset + length) + ") exceeds length " +
                                    std::to_string(a.data().numel()));
    Tensor out(Shape{length});
    std::copy(a.data().v.begin() + static_cast<long>(offset),
              a.data().v.begin() + static_cast<long>(offset + length), out.v.begin());
    return Value::custom(std::move(out), {a}, [offset, length](Node &self) {
        Node &p = *self.parents[0];
        if (!p.requires_grad)
            return;
        Tensor &g = p.ensure_grad();
        for (std::size_t i = 0; i < length; ++i)
            g.v[offset + i] += self.grad.v[i];
    });
}

inline Value sum(const Value &a) {
    double s = 0.0;
    for (double x : a.data().v)
        s += x;
    return Value::custom(Tensor::scalar(s), {a}, [](Node &self) {
        Node &p = *self.parents[0];
        if (!p.requires_grad)
            return;
        Tensor &g = p.ensure_grad();
        const double gs = self.grad.v[0];
        for (double &x : g.v)
            x += gs;
    });
}

/// Window-2 stride-2 max pooling over a rank-1 value; an odd trailing element
/// passes through. Backward routes to the argmax, first index on ties.
inline Value max_pool1d(const Value &a) {
    if (a.data().shape.rank != 1 || a.data().numel() == 0)
        throw std::invalid_argument("max_pool1d: input must be a nonempty rank-1 value");
    const std::size_t m = a.data().numel();
    const std::size_t out_len = (m + 1) / 2;
    Tensor out(Shape{out_len});
    std::vector<std::size_t> argmax(out_len);
    for (std::size_t j = 0; j < out_len; ++j) {
        const std::size_t i0 = 2 * j;
        if (i0 + 1 < m && a.data().v[i0 + 1] > a.data().v[i0]) {
            out.v[j] = a.data().v[i0 + 1];
            argmax[j] = i0 + 1;
        } else {
            out.v[j] = a.data().v[i0];
            argmax[j] = i0;
        }
    }
    return Value::custom(std::move(out), {a}, [argmax = std::move(argmax)](Node &self) {
        Node &p = *self.parents[0];
        if (!p.requires_grad)
            return;
        Tensor &g = p.ensure_grad();
        for (std::size_t j = 0; j < argmax.size(); ++j)
            g.v[argmax[j]] += self.grad.v[j];
    });
}

/// -log softmax(logits)[label], computed in the log-sum-exp stable form.
inline Value softmax_cross_entropy(const Value &logits, std::size_t label) {
    const Tensor &z = logits.data();
    if (z.shape.rank != 1)
        throw std::invalid_argument("softmax_cross_entropy: logits must be rank 1");
    if (label >= z.numel())
        throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(z.numel()) + " classes");
    const double zmax = *std::max_element(z.v.begin(), z.v.end());
    double denom = 0.0;
    std::vector<double> softmax(z.numel());
    for (std::size_t i = 0; i < z.numel(); ++i) {
        softmax[i] = std::exp(z.v[i] - zmax);
        denom += softmax[i];
    }
    for (double &s : softmax)
        s /= denom;
    const double loss = std::log(denom) + zmax - z.v[label];
    return Value::custom(Tensor::scalar(loss), {logits},
                         [softmax = std::move(softmax), label](Node &self) {
                             Node &p = *self.parents[0];
                             if (!p.requires_grad)
                                 return;
                             Tensor &g = p.ensure_grad();
                             const double gs = self.grad.v[0];
                             for (std::size_t i = 0; i < g.numel(); ++i)
                                 g.v[i] += gs * (softmax[i] - (i == label ? 1.0 : 0.0));
                         });
}

inline Value operator+(const Value &a, const Value &b) { return add(a, b); }
inline Value operator*(const Value &a, const Value &b) { return mul(a, b); }

/// W * x + b.
inline Value linear(const Value &W, const Value &x, const Value &b) {
    return add(matmul(W, x), b);
}

} // namespace qdraw::autograd
