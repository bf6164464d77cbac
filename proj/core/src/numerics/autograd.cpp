// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/numerics/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "omnifx/error.hpp"

namespace omnifx::numerics {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) {
    return ConstMap(t.data(), t.rows(), t.cols());
}

MutMap view(Tensor& t) {
    return MutMap(t.data(), t.rows(), t.cols());
}

constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

Graph& same_graph(Var a, Var b, const char* op) {
    if (!a.valid() || a.graph() != b.graph()) {
        throw Error(std::string(op) + ": operands belong to different graphs");
    }
    return *a.graph();
}

void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected a rank-2 operand, got " + to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
    }
}

void accumulate(Tensor& into, const Tensor& delta) {
    double* dst = into.data();
    const double* src = delta.data();
    for (std::size_t i = 0; i < into.size(); ++i) {
        dst[i] += src[i];
    }
}

} // namespace

// ---------------------------------------------------------------------------
// AttentionMask

AttentionMask::AttentionMask(std::size_t length, bool attendable)
    : length_(length), allowed_(length * length, attendable ? 1 : 0) {}

AttentionMask AttentionMask::from_additive(const Tensor& mask) {
    require_matrix(mask, "AttentionMask");
    if (mask.rows() != mask.cols()) {
        throw ShapeError("attention mask must be square, got " + to_string(mask.shape()));
    }
    AttentionMask out(mask.rows());
    for (std::size_t i = 0; i < mask.rows(); ++i) {
        for (std::size_t j = 0; j < mask.cols(); ++j) {
            double v = mask(i, j);
            if (v == 0.0) {
                out.set(i, j, true);
            } else if (!(std::isinf(v) && v < 0)) {
                throw Error("attention mask entries must be 0 or -inf");
            }
        }
    }
    return out;
}

double AttentionMask::additive(std::size_t row, std::size_t col) const {
    return attendable(row, col) ? 0.0 : -std::numeric_limits<double>::infinity();
}

Tensor AttentionMask::to_additive() const {
    Tensor out({length_, length_});
    for (std::size_t i = 0; i < length_; ++i) {
        for (std::size_t j = 0; j < length_; ++j) {
            out(i, j) = additive(i, j);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tensor kernels

Tensor gelu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x[i];
        y[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
    }
    return y;
}

Tensor masked_softmax_rows(const Tensor& scores, const AttentionMask& mask) {
    require_matrix(scores, "masked_softmax_rows");
    std::size_t rows = scores.rows();
    std::size_t cols = scores.cols();
    if (mask.length() != cols || rows != cols) {
        throw ShapeError("masked_softmax_rows: scores " + to_string(scores.shape()) + " vs mask of length " +
                         std::to_string(mask.length()));
    }
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < cols; ++j) {
            if (mask.attendable(i, j)) {
                peak = std::max(peak, scores(i, j));
                any = true;
            }
        }
        if (!any) {
            throw Error("masked_softmax_rows: row " + std::to_string(i) + " has no attendable positions");
        }
        double total = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (mask.attendable(i, j)) {
                double e = std::exp(scores(i, j) - peak);
                out(i, j) = e;
                total += e;
            }
        }
        for (std::size_t j = 0; j < cols; ++j) {
            out(i, j) /= total;
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    require_matrix(logits, "softmax_rows");
    Tensor out(logits.shape());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            peak = std::max(peak, logits(i, j));
        }
        double total = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            out(i, j) = std::exp(logits(i, j) - peak);
            total += out(i, j);
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            out(i, j) /= total;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const {
    return graph_->value(id_);
}

const Tensor& Var::grad() const {
    return graph_->grad(id_);
}

Var Graph::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Graph::variable(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, {}, true});
    return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& in : inputs) {
        if (in.graph() != this) {
            throw Error("graph op received an operand from a different graph");
        }
        needs = needs || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, needs ? std::move(fn) : BackwardFn{}, needs});
    return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::grad(std::size_t id) const {
    const Node& node = nodes_[id];
    if (node.grad.empty()) {
        node.grad = Tensor(node.value.shape(), 0.0);
    }
    return node.grad;
}

Tensor& Graph::accumulator(std::size_t id) {
    Node& node = nodes_[id];
    if (node.grad.empty()) {
        node.grad = Tensor(node.value.shape(), 0.0);
    }
    return node.grad;
}

void Graph::backward(Var root) {
    if (root.graph() != this) {
        throw Error("backward: root belongs to a different graph");
    }
    if (value(root.id()).size() != 1) {
        throw ShapeError("backward: root must be a scalar, got " + to_string(value(root.id()).shape()));
    }
    accumulator(root.id()).fill(1.0);
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.requires_grad && node.backward && !node.grad.empty()) {
            node.backward(*this, i);
        }
    }
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Var a, Var b) {
    Graph& g = same_graph(a, b, "matmul");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner extents disagree for " + to_string(av.shape()) + " and " +
                         to_string(bv.shape()));
    }
    Tensor out = numerics::matmul(av, bv);
    std::size_t ia = a.id();
    std::size_t ib = b.id();
    const Var inputs[] = {a, b};
    return g.record(std::move(out), inputs, [ia, ib](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ia)) {
            view(graph.accumulator(ia)).noalias() += view(dy) * view(graph.value(ib)).transpose();
        }
        if (graph.requires_grad(ib)) {
            view(graph.accumulator(ib)).noalias() += view(graph.value(ia)).transpose() * view(dy);
        }
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    require_matrix(av, "transpose");
    Tensor out({av.cols(), av.rows()});
    view(out) = view(av).transpose();
    std::size_t ia = a.id();
    const Var inputs[] = {a};
    return a.graph()->record(std::move(out), inputs, [ia](Graph& graph, std::size_t self) {
        view(graph.accumulator(ia)) += view(graph.grad(self)).transpose();
    });
}

Var add(Var a, Var b) {
    Graph& g = same_graph(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    accumulate(out, b.value());
    std::size_t ia = a.id();
    std::size_t ib = b.id();
    const Var inputs[] = {a, b};
    return g.record(std::move(out), inputs, [ia, ib](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ia)) {
            accumulate(graph.accumulator(ia), dy);
        }
        if (graph.requires_grad(ib)) {
            accumulate(graph.accumulator(ib), dy);
        }
    });
}

Var sub(Var a, Var b) {
    Graph& g = same_graph(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= b.value()[i];
    }
    std::size_t ia = a.id();
    std::size_t ib = b.id();
    const Var inputs[] = {a, b};
    return g.record(std::move(out), inputs, [ia, ib](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ia)) {
            accumulate(graph.accumulator(ia), dy);
        }
        if (graph.requires_grad(ib)) {
            Tensor& acc = graph.accumulator(ib);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] -= dy[i];
            }
        }
    });
}

Var mul(Var a, Var b) {
    Graph& g = same_graph(a, b, "mul");
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= b.value()[i];
    }
    std::size_t ia = a.id();
    std::size_t ib = b.id();
    const Var inputs[] = {a, b};
    return g.record(std::move(out), inputs, [ia, ib](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ia)) {
            Tensor& acc = graph.accumulator(ia);
            const Tensor& bv = graph.value(ib);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += dy[i] * bv[i];
            }
        }
        if (graph.requires_grad(ib)) {
            Tensor& acc = graph.accumulator(ib);
            const Tensor& av = graph.value(ia);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += dy[i] * av[i];
            }
        }
    });
}

Var add_row(Var x, Var row) {
    Graph& g = same_graph(x, row, "add_row");
    const Tensor& xv = x.value();
    const Tensor& rv = row.value();
    require_matrix(xv, "add_row");
    if (rv.rank() != 2 || rv.rows() != 1 || rv.cols() != xv.cols()) {
        throw ShapeError("add_row: cannot broadcast " + to_string(rv.shape()) + " over " + to_string(xv.shape()));
    }
    Tensor out = xv;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) += rv[j];
        }
    }
    std::size_t ix = x.id();
    std::size_t ir = row.id();
    const Var inputs[] = {x, row};
    return g.record(std::move(out), inputs, [ix, ir](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ix)) {
            accumulate(graph.accumulator(ix), dy);
        }
        if (graph.requires_grad(ir)) {
            Tensor& acc = graph.accumulator(ir);
            for (std::size_t i = 0; i < dy.rows(); ++i) {
                for (std::size_t j = 0; j < dy.cols(); ++j) {
                    acc[j] += dy(i, j);
                }
            }
        }
    });
}

Var scale(Var x, double factor) {
    Tensor out = x.value();
    for (auto& v : out.values()) {
        v *= factor;
    }
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix, factor](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        Tensor& acc = graph.accumulator(ix);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += factor * dy[i];
        }
    });
}

Var mul_const(Var x, const Tensor& factor) {
    require_same_shape(x.value(), factor, "mul_const");
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= factor[i];
    }
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix, factor](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        Tensor& acc = graph.accumulator(ix);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += factor[i] * dy[i];
        }
    });
}

Var row_scale(Var x, Var w) {
    Graph& g = same_graph(x, w, "row_scale");
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    require_matrix(xv, "row_scale");
    if (wv.rank() != 2 || wv.cols() != 1 || wv.rows() != xv.rows()) {
        throw ShapeError("row_scale: weights " + to_string(wv.shape()) + " do not match rows of " +
                         to_string(xv.shape()));
    }
    Tensor out = xv;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) *= wv[i];
        }
    }
    std::size_t ix = x.id();
    std::size_t iw = w.id();
    const Var inputs[] = {x, w};
    return g.record(std::move(out), inputs, [ix, iw](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        if (graph.requires_grad(ix)) {
            Tensor& acc = graph.accumulator(ix);
            const Tensor& wv = graph.value(iw);
            for (std::size_t i = 0; i < acc.rows(); ++i) {
                for (std::size_t j = 0; j < acc.cols(); ++j) {
                    acc(i, j) += dy(i, j) * wv[i];
                }
            }
        }
        if (graph.requires_grad(iw)) {
            Tensor& acc = graph.accumulator(iw);
            const Tensor& xv = graph.value(ix);
            for (std::size_t i = 0; i < xv.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < xv.cols(); ++j) {
                    s += dy(i, j) * xv(i, j);
                }
                acc[i] += s;
            }
        }
    });
}

Var gelu(Var x) {
    Tensor out = gelu(x.value());
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        const Tensor& xv = graph.value(ix);
        Tensor& acc = graph.accumulator(ix);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            double v = xv[i];
            double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            acc[i] += dy[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
        }
    });
}

namespace {

// dS = Y ⊙ (dY - rowsum(Y ⊙ dY)); masked entries have Y = 0 and stay zero.
void softmax_backward(Graph& graph, std::size_t self, std::size_t input) {
    const Tensor& dy = graph.grad(self);
    const Tensor& y = graph.value(self);
    Tensor& acc = graph.accumulator(input);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) {
            dot += y(i, j) * dy(i, j);
        }
        for (std::size_t j = 0; j < y.cols(); ++j) {
            acc(i, j) += y(i, j) * (dy(i, j) - dot);
        }
    }
}

} // namespace

Var masked_softmax_rows(Var scores, const AttentionMask& mask) {
    Tensor out = masked_softmax_rows(scores.value(), mask);
    std::size_t is = scores.id();
    const Var inputs[] = {scores};
    return scores.graph()->record(std::move(out), inputs, [is](Graph& graph, std::size_t self) {
        softmax_backward(graph, self, is);
    });
}

Var softmax_rows(Var logits) {
    Tensor out = softmax_rows(logits.value());
    std::size_t il = logits.id();
    const Var inputs[] = {logits};
    return logits.graph()->record(std::move(out), inputs, [il](Graph& graph, std::size_t self) {
        softmax_backward(graph, self, il);
    });
}

Var layer_norm_rows(Var x, double eps) {
    const Tensor& xv = x.value();
    require_matrix(xv, "layer_norm_rows");
    std::size_t rows = xv.rows();
    std::size_t cols = xv.cols();
    Tensor out({rows, cols});
    std::vector<double> inv_std(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            mu += xv(i, j);
        }
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            double c = xv(i, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(cols);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < cols; ++j) {
            out(i, j) = (xv(i, j) - mu) * inv_std[i];
        }
    }
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs,
                             [ix, inv_std = std::move(inv_std)](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        const Tensor& y = graph.value(self);
        Tensor& acc = graph.accumulator(ix);
        double n = static_cast<double>(y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double mean_dy = 0.0;
            double mean_dy_y = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) {
                mean_dy += dy(i, j);
                mean_dy_y += dy(i, j) * y(i, j);
            }
            mean_dy /= n;
            mean_dy_y /= n;
            for (std::size_t j = 0; j < y.cols(); ++j) {
                acc(i, j) += inv_std[i] * (dy(i, j) - mean_dy - y(i, j) * mean_dy_y);
            }
        }
    });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
    const Tensor& xv = x.value();
    require_matrix(xv, "slice_rows");
    if (begin >= end || end > xv.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + to_string(xv.shape()));
    }
    std::size_t cols = xv.cols();
    Tensor out({end - begin, cols},
               std::vector<double>(xv.data() + begin * cols, xv.data() + end * cols));
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix, begin, cols](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        double* dst = graph.accumulator(ix).data() + begin * cols;
        for (std::size_t i = 0; i < dy.size(); ++i) {
            dst[i] += dy[i];
        }
    });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
    const Tensor& xv = x.value();
    require_matrix(xv, "slice_cols");
    if (begin >= end || end > xv.cols()) {
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + to_string(xv.shape()));
    }
    Tensor out({xv.rows(), end - begin});
    view(out) = view(xv).middleCols(begin, end - begin);
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix, begin, end](Graph& graph, std::size_t self) {
        view(graph.accumulator(ix)).middleCols(begin, end - begin) += view(graph.grad(self));
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ShapeError("concat_rows: no operands");
    }
    Graph* g = parts.front().graph();
    std::size_t cols = parts.front().value().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        if (p.graph() != g) {
            throw Error("concat_rows: operands belong to different graphs");
        }
        if (p.value().cols() != cols) {
            throw ShapeError("concat_rows: column mismatch " + to_string(parts.front().shape()) + " vs " +
                             to_string(p.shape()));
        }
        rows += p.value().rows();
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        data.insert(data.end(), p.value().values().begin(), p.value().values().end());
        ids.push_back(p.id());
    }
    return g->record(Tensor({rows, cols}, std::move(data)), parts, [ids](Graph& graph, std::size_t self) {
        const double* src = graph.grad(self).data();
        for (std::size_t id : ids) {
            std::size_t n = graph.value(id).size();
            if (graph.requires_grad(id)) {
                double* dst = graph.accumulator(id).data();
                for (std::size_t i = 0; i < n; ++i) {
                    dst[i] += src[i];
                }
            }
            src += n;
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: no operands");
    }
    Graph* g = parts.front().graph();
    std::size_t rows = parts.front().value().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.graph() != g) {
            throw Error("concat_cols: operands belong to different graphs");
        }
        if (p.value().rows() != rows) {
            throw ShapeError("concat_cols: row mismatch " + to_string(parts.front().shape()) + " vs " +
                             to_string(p.shape()));
        }
        cols += p.value().cols();
    }
    Tensor out({rows, cols});
    std::vector<std::size_t> ids;
    std::size_t offset = 0;
    for (const Var& p : parts) {
        std::size_t c = p.value().cols();
        view(out).middleCols(offset, c) = view(p.value());
        offset += c;
        ids.push_back(p.id());
    }
    return g->record(std::move(out), parts, [ids](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            std::size_t c = graph.value(id).cols();
            if (graph.requires_grad(id)) {
                view(graph.accumulator(id)) += view(dy).middleCols(offset, c);
            }
            offset += c;
        }
    });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
    const Tensor& tv = table.value();
    require_matrix(tv, "gather_rows");
    if (indices.empty()) {
        throw ShapeError("gather_rows: no indices");
    }
    std::size_t cols = tv.cols();
    Tensor out({indices.size(), cols});
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= tv.rows()) {
            throw Error("gather_rows: index " + std::to_string(indices[r]) + " out of range for " +
                        std::to_string(tv.rows()) + " rows");
        }
        std::copy_n(tv.data() + indices[r] * cols, cols, out.data() + r * cols);
    }
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    std::size_t it = table.id();
    const Var inputs[] = {table};
    return table.graph()->record(std::move(out), inputs, [it, idx, cols](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        Tensor& acc = graph.accumulator(it);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t j = 0; j < cols; ++j) {
                acc(idx[r], j) += dy(r, j);
            }
        }
    });
}

Var sum(Var x) {
    double total = 0.0;
    for (double v : x.value().values()) {
        total += v;
    }
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(Tensor::scalar(total), inputs, [ix](Graph& graph, std::size_t self) {
        double d = graph.grad(self)[0];
        for (auto& v : graph.accumulator(ix).values()) {
            v += d;
        }
    });
}

Var mean(Var x) {
    return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var mean_rows(Var x) {
    const Tensor& xv = x.value();
    require_matrix(xv, "mean_rows");
    Tensor out({1, xv.cols()});
    double inv = 1.0 / static_cast<double>(xv.rows());
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        for (std::size_t j = 0; j < xv.cols(); ++j) {
            out[j] += xv(i, j);
        }
    }
    for (auto& v : out.values()) {
        v *= inv;
    }
    std::size_t ix = x.id();
    const Var inputs[] = {x};
    return x.graph()->record(std::move(out), inputs, [ix, inv](Graph& graph, std::size_t self) {
        const Tensor& dy = graph.grad(self);
        Tensor& acc = graph.accumulator(ix);
        for (std::size_t i = 0; i < acc.rows(); ++i) {
            for (std::size_t j = 0; j < acc.cols(); ++j) {
                acc(i, j) += dy[j] * inv;
            }
        }
    });
}

Var mse(Var pred, Var target) {
    Graph& g = same_graph(pred, target, "mse");
    require_same_shape(pred.value(), target.value(), "mse");
    const Tensor& p = pred.value();
    const Tensor& t = target.value();
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - t[i];
        total += d * d;
    }
    double count = static_cast<double>(p.size());
    std::size_t ip = pred.id();
    std::size_t it = target.id();
    const Var inputs[] = {pred, target};
    return g.record(Tensor::scalar(total / count), inputs, [ip, it, count](Graph& graph, std::size_t self) {
        double d = graph.grad(self)[0];
        const Tensor& p = graph.value(ip);
        const Tensor& t = graph.value(it);
        if (graph.requires_grad(ip)) {
            Tensor& acc = graph.accumulator(ip);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += d * 2.0 * (p[i] - t[i]) / count;
            }
        }
        if (graph.requires_grad(it)) {
            Tensor& acc = graph.accumulator(it);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] -= d * 2.0 * (p[i] - t[i]) / count;
            }
        }
    });
}

} // namespace omnifx::numerics
