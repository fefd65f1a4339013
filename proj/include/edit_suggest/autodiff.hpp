#pragma once

// Reverse-mode automatic differentiation over a dynamically built graph.
//
// A Graph is rebuilt for every evaluation. Nodes are appended in creation
// order, so the node index is already a topological order and backward()
// simply walks the tape in reverse. Parameters are identified by the address
// of the Tensor that owns their storage; backward() returns gradients keyed by
// that address.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edit_suggest/tensor.hpp"

namespace edit_suggest::ad {

enum class Op {
    constant,
    parameter,
    affine,
    matmul,
    tanh,
    relu,
    exp,
    log,
    softmax,
    log_softmax,
    logsumexp,
    add,
    sub,
    mul,
    scale,
    shift,
    sum,
    row_sums,
    col_sums,
    concat,
    slice,
    clamp,
};

std::string_view op_name(Op op);

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    Graph& graph() const { return *graph_; }
    std::size_t id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    friend class Graph;
    Var(Graph* g, std::size_t id)
        : graph_(g)
        , id_(id)
    {
    }

    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

using Gradients = std::unordered_map<const Tensor*, Tensor>;

class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    Var constant(double value) { return constant(Tensor::scalar(value)); }

    /// Leaf bound to a parameter tensor. Repeated calls with the same tensor
    /// return the same node. The tensor must outlive backward().
    Var parameter(const Tensor& param);

    /// Exact reverse-mode gradients of a scalar root with respect to every
    /// parameter leaf reachable from it.
    Gradients backward(Var root);

    std::size_t size() const { return nodes_.size(); }
    Op op(Var v) const { return nodes_[v.id()].op; }
    std::span<const std::size_t> parents(Var v) const { return nodes_[v.id()].parents; }

    // Used by op implementations.
    Var push(Op op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);
    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    const Tensor& adjoint(std::size_t id) const { return nodes_[id].adjoint; }
    Tensor& adjoint_of(std::size_t id);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

private:
    struct Node {
        Op op = Op::constant;
        Tensor value;
        Tensor adjoint;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        const Tensor* param = nullptr;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Tensor*, std::size_t> param_nodes_;
};

Var matmul(Var a, Var b);
/// x * w + b, with b a 1 x out row broadcast over the rows of x.
Var affine(Var x, Var w, Var b);

/// Elementwise binary ops. Operands must agree on each dimension or have
/// extent 1 there (row or column broadcasting).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double c);
Var shift(Var a, double c);
Var neg(Var a);

Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
/// Values outside [lo, hi] are pinned; their gradient is zero.
Var clamp(Var a, double lo, double hi);

/// Row-wise, max-shifted.
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Row-wise log-sum-exp, [B, C] -> [B, 1].
Var logsumexp_rows(Var a);

Var sum(Var a);
/// [B, C] -> [B, 1]
Var row_sums(Var a);
/// [B, C] -> [1, C]
Var col_sums(Var a);
Var mean(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace edit_suggest::ad
