#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "funcgraph/errors.hpp"
#include "funcgraph/rng.hpp"

namespace funcgraph::num {

/// Dense rank-1/2 tensor with reverse-mode gradient support.
///
/// A Tensor is a cheap handle onto a graph node; ops record a backward
/// closure so that calling backward() on a scalar result accumulates
/// gradients into every reachable tensor with requires_grad set.
/// Vectors are represented as n x 1 (column) or 1 x n (row) matrices.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor full(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
    static Tensor from_data(std::size_t rows, std::size_t cols, std::vector<double> values,
                            bool requires_grad = false);
    /// Column vector (n x 1).
    static Tensor column(std::vector<double> values, bool requires_grad = false);
    /// Entries drawn i.i.d. uniform from [lo, hi).
    static Tensor uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi,
                          bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const { return rows() * cols(); }
    bool requires_grad() const;

    double at(std::size_t r, std::size_t c) const;
    double item() const; // 1x1 only

    const std::vector<double>& data() const;
    /// Mutable access to raw values. Only sensible on leaf tensors
    /// (parameters, inputs) before a forward pass records them.
    std::vector<double>& raw();

    /// Gradient accumulated by the last backward(); zeros if untouched.
    const std::vector<double>& grad() const;
    void zero_grad();

    /// Reverse-mode sweep from a 1x1 tensor.
    void backward();

    /// Same values, detached from the graph (no grad flow).
    Tensor detach() const;

    // --- internal graph node -------------------------------------------
    struct Node {
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn; // pulls node.grad into parents

        Node() = default;
        Node(const Node&) = delete;
        Node& operator=(const Node&) = delete;
        ~Node(); // returns buffers to the thread-local pool
    };

    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// --- forward ops with recorded backward --------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor add_rowvec(const Tensor& x, const Tensor& b); // b is 1 x cols, broadcast over rows
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor scale(const Tensor& a, double s);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor leaky_relu(const Tensor& x, double negative_slope);
/// Inverted dropout; identity when rng == nullptr (eval mode).
Tensor dropout(const Tensor& x, double p, Rng* rng);
Tensor row_softmax(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

/// Rows of x selected by index (multiset gather; indices may repeat).
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
/// Row i of x accumulated into output row idx[i]; output is n_out x cols.
Tensor scatter_sum_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t n_out);
/// Row i multiplied by the constant factor s[i] (no gradient to s).
Tensor row_scale(const Tensor& x, const std::vector<double>& s);
/// Row i multiplied by the grad-carrying scalar a[i] (a is m x 1).
Tensor mul_rows(const Tensor& x, const Tensor& a);
/// Softmax over groups of rows sharing a segment id; scores is m x 1.
Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& seg,
                       std::size_t n_segments);

/// Mean over rows of w[y_i] * (-log softmax(logits_i)[y_i]).
Tensor weighted_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                              const std::vector<double>& class_weights);

/// Row-wise argmax (ties to the lowest index). Not differentiable.
std::vector<int> argmax_rows(const Tensor& x);

} // namespace funcgraph::num
