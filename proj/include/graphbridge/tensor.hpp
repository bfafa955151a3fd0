#pragma once

// Dense tensors plus a reverse-mode differentiation tape over a fixed
// primitive set. Values are 64-bit floats, row-major. Tensors are immutable
// after construction; recording ops onto a tape never mutates inputs.
//
// Tape contract:
//   - node order on the tape equals insertion order (topological by
//     construction),
//   - backward() visits each node exactly once, in reverse insertion order,
//   - a tape is single-use: a second backward() without a fresh tape throws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "graphbridge/common.hpp"

namespace graphbridge {

class Tape;

class Tensor {
public:
    Tensor() : shape_{0}, data_(std::make_shared<std::vector<double>>()) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(data))) {
        if (numel(shape_) != data_->size())
            throw ShapeError("tensor data length " + std::to_string(data_->size()) +
                             " does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor row(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({1, n}, std::move(v));
    }

    static Tensor column(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n, 1}, std::move(v));
    }

    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v) {
        return Tensor({r, c}, std::move(v));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_->size(); }
    std::size_t rank() const { return shape_.size(); }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const {
        if (rank() == 1) return 1;
        if (rank() == 2) return shape_[1];
        throw ShapeError("cols() on rank-" + std::to_string(rank()) + " tensor");
    }

    const std::vector<double>& data() const { return *data_; }
    double operator[](std::size_t i) const { return (*data_)[i]; }
    double at(std::size_t r, std::size_t c) const { return (*data_)[r * cols() + c]; }
    double item() const {
        if (size() != 1) throw ShapeError("item() on tensor of size " + std::to_string(size()));
        return (*data_)[0];
    }

    bool requires_grad() const { return requires_grad_; }
    int node_id() const { return node_; }
    Tape* tape() const { return tape_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : *data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

private:
    friend class Tape;

    std::vector<std::size_t> shape_;
    std::shared_ptr<std::vector<double>> data_;
    bool requires_grad_ = false;
    int node_ = -1;
    Tape* tape_ = nullptr;
};

enum class Op {
    Leaf,
    MatMul,
    MatMulNT,
    Add,
    Mul,
    Scale,
    Relu,
    Sigmoid,
    LeakyRelu,
    Concat,
    VStack,
    RowSelect,
    MeanRows,
    SumRows,
    LogSoftmax,
    CrossEntropy,
    L2Norm,
    RowNormalize,
    Spmm,
    SegmentSoftmax,
    SegmentMeanRows,
    Blend,
    BceLogits,
};

class Tape {
public:
    struct Node {
        Op kind;
        std::vector<int> inputs;          // node ids, -1 for constants
        std::vector<Tensor> saved;        // input values (+ output where the VJP needs it)
        std::vector<std::int64_t> iattrs; // indices / segments / targets / labels
        std::vector<double> dattrs;       // scale factor, leaky slope, ...
        std::vector<std::size_t> out_shape;
    };

    Tensor watch(const Tensor& t) {
        Tensor bound = t;
        bound.requires_grad_ = true;
        bound.tape_ = this;
        bound.node_ = static_cast<int>(nodes_.size());
        Node n;
        n.kind = Op::Leaf;
        n.out_shape = t.shape();
        nodes_.push_back(std::move(n));
        leaves_.push_back(bound.node_);
        return bound;
    }

    std::size_t num_nodes() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    bool consumed() const { return consumed_; }

    // Records a computed op. `saved` must start with the input value tensors
    // in the same order as `input_ids`.
    Tensor record(Op kind, const std::vector<int>& input_ids, std::vector<Tensor> saved,
                  std::vector<std::int64_t> iattrs, std::vector<double> dattrs, Tensor out) {
        Node n;
        n.kind = kind;
        n.inputs = input_ids;
        n.saved = std::move(saved);
        n.iattrs = std::move(iattrs);
        n.dattrs = std::move(dattrs);
        n.out_shape = out.shape();
        out.tape_ = this;
        out.node_ = static_cast<int>(nodes_.size());
        out.requires_grad_ = true;
        nodes_.push_back(std::move(n));
        return out;
    }

    void backward(const Tensor& loss);

    // Gradient of the loss w.r.t. a watched/bound tensor; zero tensor when the
    // leaf was not reachable from the loss.
    Tensor grad(const Tensor& bound) const {
        if (bound.tape_ != this || bound.node_ < 0)
            throw std::logic_error("grad() of a tensor not bound to this tape");
        const auto& g = grads_[static_cast<std::size_t>(bound.node_)];
        if (g.empty()) return Tensor::zeros(bound.shape());
        return Tensor(bound.shape(), g);
    }

private:
    std::vector<double>& grad_buf(int id, std::size_t size) {
        auto& g = grads_[static_cast<std::size_t>(id)];
        if (g.empty()) g.assign(size, 0.0);
        return g;
    }

    void apply_vjp(int id, const Node& n, const std::vector<double>& g);

    std::vector<Node> nodes_;
    std::vector<int> leaves_;
    std::vector<std::vector<double>> grads_;
    bool consumed_ = false;
};

namespace detail {

inline Tape* tape_of(std::initializer_list<const Tensor*> ts) {
    Tape* tape = nullptr;
    for (const Tensor* t : ts) {
        if (t->tape() == nullptr) continue;
        if (tape == nullptr) tape = t->tape();
        else if (tape != t->tape()) throw std::logic_error("inputs bound to different tapes");
    }
    return tape;
}

inline int id_on(Tape* tape, const Tensor& t) { return t.tape() == tape ? t.node_id() : -1; }

inline Tensor maybe_record(Op kind, std::initializer_list<const Tensor*> inputs,
                           std::vector<std::int64_t> iattrs, std::vector<double> dattrs,
                           Tensor out, const std::vector<Tensor>& extra_saved = {}) {
    Tape* tape = tape_of(inputs);
    if (tape == nullptr) return out;
    std::vector<int> ids;
    std::vector<Tensor> saved;
    for (const Tensor* t : inputs) {
        ids.push_back(id_on(tape, *t));
        saved.push_back(*t);
    }
    for (const Tensor& t : extra_saved) saved.push_back(t);
    return tape->record(kind, ids, std::move(saved), std::move(iattrs), std::move(dattrs), std::move(out));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward ops
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    if (a.cols() != b.rows())
        throw ShapeError("matmul inner dims differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    const auto& A = a.data();
    const auto& B = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = out.data() + i * n;
        const double* arow = A.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = B.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return detail::maybe_record(Op::MatMul, {&a, &b}, {}, {}, Tensor({m, n}, std::move(out)));
}

// a * b^T  (used for pairwise similarity matrices)
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        throw ShapeError("matmul_nt shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            const double* ar = a.data().data() + i * k;
            const double* br = b.data().data() + j * k;
            for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
            out[i * n + j] = s;
        }
    return detail::maybe_record(Op::MatMulNT, {&a, &b}, {}, {}, Tensor({m, n}, std::move(out)));
}

// Elementwise add; also accepts a row vector b ([1xd] or [d]) broadcast over
// the rows of a.
inline Tensor add(const Tensor& a, const Tensor& b) {
    bool broadcast = false;
    if (!a.same_shape(b)) {
        bool b_is_row = (b.rank() == 1 && b.size() == a.cols()) ||
                        (b.rank() == 2 && b.rows() == 1 && b.cols() == a.cols());
        if (a.rank() == 2 && b_is_row) broadcast = true;
        else
            throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    std::vector<double> out(a.data());
    if (broadcast) {
        std::size_t n = a.rows(), d = a.cols();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) out[i * d + j] += b[j];
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    }
    return detail::maybe_record(Op::Add, {&a, &b}, {broadcast ? 1 : 0}, {}, Tensor(a.shape(), std::move(out)));
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("mul shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return detail::maybe_record(Op::Mul, {&a, &b}, {}, {}, Tensor(a.shape(), std::move(out)));
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.data());
    for (double& v : out) v *= c;
    return detail::maybe_record(Op::Scale, {&a}, {}, {c}, Tensor(a.shape(), std::move(out)));
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    return detail::maybe_record(Op::Relu, {&a}, {}, {}, Tensor(a.shape(), std::move(out)));
}

inline Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.data());
    for (double& v : out) {
        if (v >= 0.0) v = 1.0 / (1.0 + std::exp(-v));
        else {
            double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    Tensor res(a.shape(), std::move(out));
    return detail::maybe_record(Op::Sigmoid, {&a}, {}, {}, res, {res});
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
    std::vector<double> out(a.data());
    for (double& v : out) v = v > 0.0 ? v : slope * v;
    return detail::maybe_record(Op::LeakyRelu, {&a}, {}, {slope}, Tensor(a.shape(), std::move(out)));
}

// Column-wise concat of rank-2 tensors with equal row counts.
inline Tensor concat(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    std::size_t n = parts[0].rows(), d = 0;
    for (const Tensor& t : parts) {
        if (t.rank() != 2 || t.rows() != n)
            throw ShapeError("concat row mismatch: " + shape_str(t.shape()));
        d += t.cols();
    }
    std::vector<double> out(n * d);
    std::size_t off = 0;
    for (const Tensor& t : parts) {
        std::size_t c = t.cols();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * d + off + j] = t.at(i, j);
        off += c;
    }
    Tape* tape = nullptr;
    for (const Tensor& t : parts)
        if (t.tape()) {
            if (tape && tape != t.tape()) throw std::logic_error("inputs bound to different tapes");
            tape = t.tape();
        }
    Tensor res({n, d}, std::move(out));
    if (!tape) return res;
    std::vector<int> ids;
    std::vector<Tensor> saved;
    for (const Tensor& t : parts) {
        ids.push_back(detail::id_on(tape, t));
        saved.push_back(t);
    }
    return tape->record(Op::Concat, ids, std::move(saved), {}, {}, std::move(res));
}

inline Tensor concat(const Tensor& a, const Tensor& b) { return concat(std::vector<Tensor>{a, b}); }

// Row-wise stack of rank-2 tensors with equal column counts.
inline Tensor vstack(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("vstack of zero tensors");
    std::size_t d = parts[0].cols(), n = 0;
    for (const Tensor& t : parts) {
        if (t.rank() != 2 || t.cols() != d)
            throw ShapeError("vstack column mismatch: " + shape_str(t.shape()));
        n += t.rows();
    }
    std::vector<double> out;
    out.reserve(n * d);
    for (const Tensor& t : parts) out.insert(out.end(), t.data().begin(), t.data().end());
    Tape* tape = nullptr;
    for (const Tensor& t : parts)
        if (t.tape()) {
            if (tape && tape != t.tape()) throw std::logic_error("inputs bound to different tapes");
            tape = t.tape();
        }
    Tensor res({n, d}, std::move(out));
    if (!tape) return res;
    std::vector<int> ids;
    std::vector<Tensor> saved;
    for (const Tensor& t : parts) {
        ids.push_back(detail::id_on(tape, t));
        saved.push_back(t);
    }
    return tape->record(Op::VStack, ids, std::move(saved), {}, {}, std::move(res));
}

inline Tensor row_select(const Tensor& a, const std::vector<std::int64_t>& idx) {
    if (a.rank() != 2) throw ShapeError("row_select expects a rank-2 tensor");
    std::size_t d = a.cols();
    std::vector<double> out(idx.size() * d);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= a.rows())
            throw ShapeError("row_select index " + std::to_string(idx[i]) + " out of range [0," +
                             std::to_string(a.rows()) + ")");
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a.at(static_cast<std::size_t>(idx[i]), j);
    }
    return detail::maybe_record(Op::RowSelect, {&a}, std::vector<std::int64_t>(idx.begin(), idx.end()), {},
                                Tensor({idx.size(), d}, std::move(out)));
}

inline Tensor mean_rows(const Tensor& a) {
    if (a.rank() != 2 || a.rows() == 0) throw ShapeError("mean_rows expects a non-empty rank-2 tensor");
    std::size_t n = a.rows(), d = a.cols();
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j] += a.at(i, j);
    for (double& v : out) v /= static_cast<double>(n);
    return detail::maybe_record(Op::MeanRows, {&a}, {}, {}, Tensor({1, d}, std::move(out)));
}

inline Tensor sum_rows(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("sum_rows expects a rank-2 tensor");
    std::size_t n = a.rows(), d = a.cols();
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[j] += a.at(i, j);
    return detail::maybe_record(Op::SumRows, {&a}, {}, {}, Tensor({1, d}, std::move(out)));
}

inline Tensor log_softmax(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("log_softmax expects a rank-2 tensor");
    std::size_t n = a.rows(), d = a.cols();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = a.at(i, 0);
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, a.at(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < d; ++j) lse += std::exp(a.at(i, j) - mx);
        lse = mx + std::log(lse);
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a.at(i, j) - lse;
    }
    Tensor res({n, d}, std::move(out));
    return detail::maybe_record(Op::LogSoftmax, {&a}, {}, {}, res, {res});
}

// Mean negative log-likelihood of log-probabilities against integer targets.
inline Tensor cross_entropy(const Tensor& logp, const std::vector<std::int64_t>& targets) {
    if (logp.rank() != 2) throw ShapeError("cross_entropy expects rank-2 log-probabilities");
    if (targets.size() != logp.rows())
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(logp.rows()) + " rows");
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= logp.cols())
            throw ShapeError("cross_entropy target " + std::to_string(targets[i]) + " out of range");
        loss -= logp.at(i, static_cast<std::size_t>(targets[i]));
    }
    loss /= static_cast<double>(targets.size());
    return detail::maybe_record(Op::CrossEntropy, {&logp},
                                std::vector<std::int64_t>(targets.begin(), targets.end()), {},
                                Tensor::scalar(loss));
}

inline Tensor l2_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return detail::maybe_record(Op::L2Norm, {&a}, {}, {}, Tensor::scalar(std::sqrt(s)));
}

// Scales every row to unit Euclidean norm; zero rows are rejected.
inline Tensor row_normalize(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("row_normalize expects a rank-2 tensor");
    std::size_t n = a.rows(), d = a.cols();
    std::vector<double> out(n * d);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += a.at(i, j) * a.at(i, j);
        double r = std::sqrt(s);
        if (r == 0.0) throw NumericError("row_normalize: zero-norm row " + std::to_string(i));
        norms[i] = r;
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a.at(i, j) / r;
    }
    Tensor res({n, d}, std::move(out));
    return detail::maybe_record(Op::RowNormalize, {&a}, {}, std::move(norms), res, {res});
}

// out[dst] += w_e * x[src] over the given edge list. Differentiable in both
// x and the per-edge weights.
inline Tensor spmm_edges(const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                         std::size_t num_nodes, const Tensor& weights, const Tensor& x) {
    if (x.rank() != 2 || x.rows() != num_nodes)
        throw ShapeError("spmm: feature rows " + std::to_string(x.rows()) + " != num_nodes " +
                         std::to_string(num_nodes));
    if (weights.size() != edges.size())
        throw ShapeError("spmm: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(edges.size()) + " edges");
    std::size_t d = x.cols();
    std::vector<double> out(num_nodes * d, 0.0);
    std::vector<std::int64_t> flat;
    flat.reserve(edges.size() * 2);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        auto [src, dst] = edges[e];
        if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= num_nodes ||
            static_cast<std::size_t>(dst) >= num_nodes)
            throw DataError("spmm: edge (" + std::to_string(src) + "," + std::to_string(dst) +
                            ") out of range for " + std::to_string(num_nodes) + " nodes");
        double w = weights[e];
        const double* xr = x.data().data() + static_cast<std::size_t>(src) * d;
        double* orow = out.data() + static_cast<std::size_t>(dst) * d;
        for (std::size_t j = 0; j < d; ++j) orow[j] += w * xr[j];
        flat.push_back(src);
        flat.push_back(dst);
    }
    return detail::maybe_record(Op::Spmm, {&weights, &x}, std::move(flat), {},
                                Tensor({num_nodes, d}, std::move(out)));
}

// Softmax within each segment; `segments` gives the segment id per entry and
// must be grouped (equal ids contiguous). An empty input yields an empty output.
inline Tensor segment_softmax(const Tensor& logits, const std::vector<std::int64_t>& segments) {
    if (logits.size() != segments.size())
        throw ShapeError("segment_softmax: " + std::to_string(segments.size()) + " segment ids for " +
                         std::to_string(logits.size()) + " logits");
    std::size_t n = segments.size();
    std::vector<double> out(n);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start;
        while (end < n && segments[end] == segments[start]) ++end;
        double mx = logits[start];
        for (std::size_t i = start; i < end; ++i) mx = std::max(mx, logits[i]);
        double denom = 0.0;
        for (std::size_t i = start; i < end; ++i) denom += std::exp(logits[i] - mx);
        for (std::size_t i = start; i < end; ++i) out[i] = std::exp(logits[i] - mx) / denom;
        start = end;
    }
    Tensor res(logits.shape(), std::move(out));
    return detail::maybe_record(Op::SegmentSoftmax, {&logits},
                                std::vector<std::int64_t>(segments.begin(), segments.end()), {}, res, {res});
}

// Mean of rows sharing a segment id. Used for per-graph readout of batched
// node representations.
inline Tensor segment_mean_rows(const Tensor& x, const std::vector<std::int64_t>& seg,
                                std::size_t num_segments) {
    if (x.rank() != 2 || x.rows() != seg.size())
        throw ShapeError("segment_mean_rows: segment ids do not match rows");
    std::size_t d = x.cols();
    std::vector<double> out(num_segments * d, 0.0);
    std::vector<double> counts(num_segments, 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || static_cast<std::size_t>(seg[i]) >= num_segments)
            throw DataError("segment_mean_rows: segment id out of range");
        counts[static_cast<std::size_t>(seg[i])] += 1.0;
        for (std::size_t j = 0; j < d; ++j) out[static_cast<std::size_t>(seg[i]) * d + j] += x.at(i, j);
    }
    for (std::size_t s = 0; s < num_segments; ++s) {
        if (counts[s] == 0.0) throw DataError("segment_mean_rows: empty segment " + std::to_string(s));
        for (std::size_t j = 0; j < d; ++j) out[s * d + j] /= counts[s];
    }
    return detail::maybe_record(Op::SegmentMeanRows, {&x}, std::vector<std::int64_t>(seg.begin(), seg.end()),
                                {}, Tensor({num_segments, d}, std::move(out)));
}

// sigmoid(alpha_raw) * a + (1 - sigmoid(alpha_raw)) * b.
// Differentiable in all three arguments; alpha_raw is a 1-element tensor.
inline Tensor blend(const Tensor& alpha_raw, const Tensor& a, const Tensor& b) {
    if (alpha_raw.size() != 1) throw ShapeError("blend: alpha_raw must be a scalar");
    if (!a.same_shape(b))
        throw ShapeError("blend shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    double raw = alpha_raw[0];
    double s = raw >= 0.0 ? 1.0 / (1.0 + std::exp(-raw)) : std::exp(raw) / (1.0 + std::exp(raw));
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a[i] + (1.0 - s) * b[i];
    return detail::maybe_record(Op::Blend, {&alpha_raw, &a, &b}, {}, {s}, Tensor(a.shape(), std::move(out)));
}

// Mean binary cross entropy of logits against 0/1 labels, in the stable
// max(t,0) - t*y + log(1+exp(-|t|)) form.
inline Tensor bce_with_logits(const Tensor& logits, const std::vector<std::int64_t>& labels) {
    if (logits.size() != labels.size())
        throw ShapeError("bce_with_logits: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.size()) + " logits");
    if (labels.empty()) throw ShapeError("bce_with_logits: empty input");
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double t = logits[i];
        double y = labels[i] ? 1.0 : 0.0;
        loss += std::max(t, 0.0) - t * y + std::log1p(std::exp(-std::abs(t)));
    }
    loss /= static_cast<double>(labels.size());
    return detail::maybe_record(Op::BceLogits, {&logits},
                                std::vector<std::int64_t>(labels.begin(), labels.end()), {},
                                Tensor::scalar(loss));
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

inline void Tape::backward(const Tensor& loss) {
    if (consumed_) throw std::logic_error("tape already consumed; tapes are single-use");
    consumed_ = true;
    if (loss.tape_ != this || loss.node_ < 0) throw std::logic_error("loss is not recorded on this tape");
    if (loss.size() != 1)
        throw std::logic_error("backward: loss must be scalar, got " + shape_str(loss.shape()));

    grads_.assign(nodes_.size(), {});
    for (int leaf : leaves_)
        grads_[static_cast<std::size_t>(leaf)].assign(Tensor::numel(nodes_[static_cast<std::size_t>(leaf)].out_shape), 0.0);
    grad_buf(loss.node_, 1)[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        const auto& g = grads_[static_cast<std::size_t>(id)];
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (g.empty() || n.kind == Op::Leaf) continue;
        apply_vjp(id, n, g);
    }
}

inline void Tape::apply_vjp(int /*id*/, const Node& n, const std::vector<double>& g) {
    auto add_to = [&](int slot, std::size_t size, auto&& fn) {
        int input_id = n.inputs[static_cast<std::size_t>(slot)];
        if (input_id < 0) return;  // constant, no gradient needed
        fn(grad_buf(input_id, size));
    };

    switch (n.kind) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const Tensor& a = n.saved[0];
            const Tensor& b = n.saved[1];
            std::size_t m = a.rows(), k = a.cols(), c = b.cols();
            add_to(0, m * k, [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        const double* gr = g.data() + i * c;
                        const double* br = b.data().data() + p * c;
                        for (std::size_t j = 0; j < c; ++j) s += gr[j] * br[j];
                        da[i * k + p] += s;
                    }
            });
            add_to(1, k * c, [&](std::vector<double>& db) {
                for (std::size_t i = 0; i < m; ++i) {
                    const double* ar = a.data().data() + i * k;
                    const double* gr = g.data() + i * c;
                    for (std::size_t p = 0; p < k; ++p) {
                        double av = ar[p];
                        if (av == 0.0) continue;
                        double* dbr = db.data() + p * c;
                        for (std::size_t j = 0; j < c; ++j) dbr[j] += av * gr[j];
                    }
                }
            });
            break;
        }
        case Op::MatMulNT: {
            const Tensor& a = n.saved[0];
            const Tensor& b = n.saved[1];
            std::size_t m = a.rows(), k = a.cols(), c = b.rows();
            add_to(0, m * k, [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        double gv = g[i * c + j];
                        if (gv == 0.0) continue;
                        const double* br = b.data().data() + j * k;
                        double* dar = da.data() + i * k;
                        for (std::size_t p = 0; p < k; ++p) dar[p] += gv * br[p];
                    }
            });
            add_to(1, c * k, [&](std::vector<double>& db) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                        double gv = g[i * c + j];
                        if (gv == 0.0) continue;
                        const double* ar = a.data().data() + i * k;
                        double* dbr = db.data() + j * k;
                        for (std::size_t p = 0; p < k; ++p) dbr[p] += gv * ar[p];
                    }
            });
            break;
        }
        case Op::Add: {
            const Tensor& a = n.saved[0];
            const Tensor& b = n.saved[1];
            bool broadcast = n.iattrs[0] != 0;
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
            });
            add_to(1, b.size(), [&](std::vector<double>& db) {
                if (!broadcast) {
                    for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
                } else {
                    std::size_t rows = a.rows(), d = a.cols();
                    for (std::size_t i = 0; i < rows; ++i)
                        for (std::size_t j = 0; j < d; ++j) db[j] += g[i * d + j];
                }
            });
            break;
        }
        case Op::Mul: {
            const Tensor& a = n.saved[0];
            const Tensor& b = n.saved[1];
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * b[i];
            });
            add_to(1, b.size(), [&](std::vector<double>& db) {
                for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * a[i];
            });
            break;
        }
        case Op::Scale: {
            double c = n.dattrs[0];
            add_to(0, n.saved[0].size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += c * g[i];
            });
            break;
        }
        case Op::Relu: {
            const Tensor& a = n.saved[0];
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a[i] > 0.0) da[i] += g[i];
            });
            break;
        }
        case Op::Sigmoid: {
            const Tensor& y = n.saved[1];
            add_to(0, y.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
            });
            break;
        }
        case Op::LeakyRelu: {
            const Tensor& a = n.saved[0];
            double slope = n.dattrs[0];
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (a[i] > 0.0 ? 1.0 : slope);
            });
            break;
        }
        case Op::Concat: {
            std::size_t rows = n.out_shape[0], d = n.out_shape[1];
            std::size_t off = 0;
            for (std::size_t s = 0; s < n.inputs.size(); ++s) {
                std::size_t c = n.saved[s].cols();
                add_to(static_cast<int>(s), rows * c, [&](std::vector<double>& da) {
                    for (std::size_t i = 0; i < rows; ++i)
                        for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[i * d + off + j];
                });
                off += c;
            }
            break;
        }
        case Op::VStack: {
            std::size_t d = n.out_shape[1];
            std::size_t off = 0;
            for (std::size_t s = 0; s < n.inputs.size(); ++s) {
                std::size_t r = n.saved[s].rows();
                add_to(static_cast<int>(s), r * d, [&](std::vector<double>& da) {
                    for (std::size_t i = 0; i < r * d; ++i) da[i] += g[off + i];
                });
                off += r * d;
            }
            break;
        }
        case Op::RowSelect: {
            const Tensor& a = n.saved[0];
            std::size_t d = a.cols();
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < n.iattrs.size(); ++i) {
                    std::size_t src = static_cast<std::size_t>(n.iattrs[i]);
                    for (std::size_t j = 0; j < d; ++j) da[src * d + j] += g[i * d + j];
                }
            });
            break;
        }
        case Op::MeanRows: {
            const Tensor& a = n.saved[0];
            std::size_t rows = a.rows(), d = a.cols();
            double inv = 1.0 / static_cast<double>(rows);
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < d; ++j) da[i * d + j] += g[j] * inv;
            });
            break;
        }
        case Op::SumRows: {
            const Tensor& a = n.saved[0];
            std::size_t rows = a.rows(), d = a.cols();
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < d; ++j) da[i * d + j] += g[j];
            });
            break;
        }
        case Op::LogSoftmax: {
            const Tensor& y = n.saved[1];
            std::size_t rows = y.rows(), d = y.cols();
            add_to(0, y.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < rows; ++i) {
                    double gsum = 0.0;
                    for (std::size_t j = 0; j < d; ++j) gsum += g[i * d + j];
                    for (std::size_t j = 0; j < d; ++j)
                        da[i * d + j] += g[i * d + j] - std::exp(y.at(i, j)) * gsum;
                }
            });
            break;
        }
        case Op::CrossEntropy: {
            const Tensor& a = n.saved[0];
            std::size_t d = a.cols();
            double inv = 1.0 / static_cast<double>(n.iattrs.size());
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < n.iattrs.size(); ++i)
                    da[i * d + static_cast<std::size_t>(n.iattrs[i])] -= g[0] * inv;
            });
            break;
        }
        case Op::L2Norm: {
            const Tensor& a = n.saved[0];
            double r = 0.0;
            for (double v : a.data()) r += v * v;
            r = std::sqrt(r);
            if (r == 0.0) break;  // subgradient 0 at the origin
            add_to(0, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < a.size(); ++i) da[i] += g[0] * a[i] / r;
            });
            break;
        }
        case Op::RowNormalize: {
            const Tensor& y = n.saved[1];
            std::size_t rows = y.rows(), d = y.cols();
            add_to(0, y.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < rows; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < d; ++j) dot += y.at(i, j) * g[i * d + j];
                    double r = n.dattrs[i];
                    for (std::size_t j = 0; j < d; ++j)
                        da[i * d + j] += (g[i * d + j] - y.at(i, j) * dot) / r;
                }
            });
            break;
        }
        case Op::Spmm: {
            const Tensor& w = n.saved[0];
            const Tensor& x = n.saved[1];
            std::size_t d = x.cols();
            std::size_t e = w.size();
            add_to(0, e, [&](std::vector<double>& dw) {
                for (std::size_t t = 0; t < e; ++t) {
                    std::size_t src = static_cast<std::size_t>(n.iattrs[2 * t]);
                    std::size_t dst = static_cast<std::size_t>(n.iattrs[2 * t + 1]);
                    double s = 0.0;
                    for (std::size_t j = 0; j < d; ++j) s += x.at(src, j) * g[dst * d + j];
                    dw[t] += s;
                }
            });
            add_to(1, x.size(), [&](std::vector<double>& dx) {
                for (std::size_t t = 0; t < e; ++t) {
                    std::size_t src = static_cast<std::size_t>(n.iattrs[2 * t]);
                    std::size_t dst = static_cast<std::size_t>(n.iattrs[2 * t + 1]);
                    double wv = w[t];
                    for (std::size_t j = 0; j < d; ++j) dx[src * d + j] += wv * g[dst * d + j];
                }
            });
            break;
        }
        case Op::SegmentSoftmax: {
            const Tensor& y = n.saved[1];
            std::size_t total = y.size();
            add_to(0, total, [&](std::vector<double>& da) {
                std::size_t start = 0;
                while (start < total) {
                    std::size_t end = start;
                    while (end < total && n.iattrs[end] == n.iattrs[start]) ++end;
                    double dot = 0.0;
                    for (std::size_t i = start; i < end; ++i) dot += g[i] * y[i];
                    for (std::size_t i = start; i < end; ++i) da[i] += y[i] * (g[i] - dot);
                    start = end;
                }
            });
            break;
        }
        case Op::SegmentMeanRows: {
            const Tensor& x = n.saved[0];
            std::size_t d = x.cols();
            std::size_t num_seg = n.out_shape[0];
            std::vector<double> counts(num_seg, 0.0);
            for (std::int64_t s : n.iattrs) counts[static_cast<std::size_t>(s)] += 1.0;
            add_to(0, x.size(), [&](std::vector<double>& dx) {
                for (std::size_t i = 0; i < n.iattrs.size(); ++i) {
                    std::size_t s = static_cast<std::size_t>(n.iattrs[i]);
                    for (std::size_t j = 0; j < d; ++j) dx[i * d + j] += g[s * d + j] / counts[s];
                }
            });
            break;
        }
        case Op::Blend: {
            const Tensor& a = n.saved[1];
            const Tensor& b = n.saved[2];
            double s = n.dattrs[0];
            add_to(0, 1, [&](std::vector<double>& dalpha) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * (a[i] - b[i]);
                dalpha[0] += s * (1.0 - s) * acc;
            });
            add_to(1, a.size(), [&](std::vector<double>& da) {
                for (std::size_t i = 0; i < g.size(); ++i) da[i] += s * g[i];
            });
            add_to(2, b.size(), [&](std::vector<double>& db) {
                for (std::size_t i = 0; i < g.size(); ++i) db[i] += (1.0 - s) * g[i];
            });
            break;
        }
        case Op::BceLogits: {
            const Tensor& t = n.saved[0];
            double inv = 1.0 / static_cast<double>(n.iattrs.size());
            add_to(0, t.size(), [&](std::vector<double>& dt) {
                for (std::size_t i = 0; i < t.size(); ++i) {
                    double v = t[i];
                    double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
                    dt[i] += g[0] * (s - (n.iattrs[i] ? 1.0 : 0.0)) * inv;
                }
            });
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// tensor_eval: string-keyed dispatcher over the public primitive set.
// ---------------------------------------------------------------------------

struct EvalAttrs {
    double slope = 0.01;                  // leaky_relu
    double factor = 1.0;                  // scale
    std::vector<std::int64_t> indices;    // row_select
    std::vector<std::int64_t> targets;    // cross_entropy
};

inline Tensor tensor_eval(const std::string& kind, const std::vector<Tensor>& inputs,
                          const EvalAttrs& attrs = {}) {
    auto need = [&](std::size_t k) {
        if (inputs.size() != k)
            throw ShapeError(kind + " expects " + std::to_string(k) + " inputs, got " +
                             std::to_string(inputs.size()));
    };
    if (kind == "matmul") { need(2); return matmul(inputs[0], inputs[1]); }
    if (kind == "add") { need(2); return add(inputs[0], inputs[1]); }
    if (kind == "mul") { need(2); return mul(inputs[0], inputs[1]); }
    if (kind == "scale") { need(1); return scale(inputs[0], attrs.factor); }
    if (kind == "relu") { need(1); return relu(inputs[0]); }
    if (kind == "sigmoid") { need(1); return sigmoid(inputs[0]); }
    if (kind == "leaky_relu") { need(1); return leaky_relu(inputs[0], attrs.slope); }
    if (kind == "concat") { return concat(inputs); }
    if (kind == "row_select") { need(1); return row_select(inputs[0], attrs.indices); }
    if (kind == "mean_rows") { need(1); return mean_rows(inputs[0]); }
    if (kind == "sum_rows") { need(1); return sum_rows(inputs[0]); }
    if (kind == "log_softmax") { need(1); return log_softmax(inputs[0]); }
    if (kind == "cross_entropy") { need(1); return cross_entropy(inputs[0], attrs.targets); }
    if (kind == "l2_norm") { need(1); return l2_norm(inputs[0]); }
    throw UnsupportedOpError("unsupported op kind: " + kind);
}

}  // namespace graphbridge
