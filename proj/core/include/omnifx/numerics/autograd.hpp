// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "omnifx/numerics/tensor.hpp"

namespace omnifx::numerics {

/// Square additive attention mask with entries in {0, -inf}.
///
/// Stored as a boolean "attendable" grid; `additive()` yields the value that
/// is added to the attention logits.
class AttentionMask {
public:
    AttentionMask() = default;
    explicit AttentionMask(std::size_t length, bool attendable = false);

    /// Builds from a tensor of {0, -inf}; any other entry is rejected.
    static AttentionMask from_additive(const Tensor& mask);

    std::size_t length() const { return length_; }
    bool attendable(std::size_t row, std::size_t col) const { return allowed_[row * length_ + col] != 0; }
    void set(std::size_t row, std::size_t col, bool attendable) {
        allowed_[row * length_ + col] = attendable ? 1 : 0;
    }
    double additive(std::size_t row, std::size_t col) const;
    Tensor to_additive() const;

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    std::size_t length_ = 0;
    std::vector<std::uint8_t> allowed_;
};

// Tensor-level kernels shared by the differentiable ops below.
Tensor gelu(const Tensor& x);
Tensor masked_softmax_rows(const Tensor& scores, const AttentionMask& mask);
Tensor softmax_rows(const Tensor& logits);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape(); }
    Graph* graph() const { return graph_; }
    std::size_t id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    friend class Graph;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape over an explicit acyclic op graph.
///
/// Nodes are appended in evaluation order, so the tape order is already a
/// topological order and `backward` walks it in reverse. A graph instance
/// is single-threaded; separate graphs may share read-only inputs.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Leaf that never receives a gradient.
    Var constant(Tensor value);
    /// Leaf whose gradient is accumulated by `backward`.
    Var variable(Tensor value);

    /// Seeds d(root)/d(root) = 1 and propagates. `root` must hold one value.
    void backward(Var root);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    /// Gradient of a node; zero-filled if nothing flowed into it.
    const Tensor& grad(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Appends an op node. `fn` may be empty when no input needs a gradient.
    Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);
    /// Mutable gradient accumulator of an input node (allocated on demand).
    Tensor& accumulator(std::size_t id);

private:
    struct Node {
        Tensor value;
        mutable Tensor grad;
        BackwardFn backward;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// x + row, where `row` is 1×c and is broadcast over the rows of x.
Var add_row(Var x, Var row);
Var scale(Var x, double factor);
/// Elementwise product with a fixed tensor of the same shape.
Var mul_const(Var x, const Tensor& factor);
/// y(i, j) = x(i, j) * w(i, 0) for an r×1 column w.
Var row_scale(Var x, Var w);
/// Tanh-approximated GELU.
Var gelu(Var x);
Var masked_softmax_rows(Var scores, const AttentionMask& mask);
Var softmax_rows(Var logits);
/// Per-row standardisation without affine parameters.
Var layer_norm_rows(Var x, double eps = 1e-5);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Rows of `table` selected by index, duplicates allowed.
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var sum(Var x);
Var mean(Var x);
/// Column means, 1×c.
Var mean_rows(Var x);
/// Mean of squared differences, 1×1.
Var mse(Var pred, Var target);

} // namespace omnifx::numerics
