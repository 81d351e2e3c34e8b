#include "funcgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace funcgraph::num {

namespace {

using Node = Tensor::Node;
using NodePtr = std::shared_ptr<Node>;

// Training rebuilds the op graph every step; recycling buffers through a
// thread-local pool keeps the hot loop free of allocator round trips.
class BufferPool {
public:
    std::vector<double> acquire(std::size_t n) {
        if (!stack_.empty()) {
            std::vector<double> buf = std::move(stack_.back());
            stack_.pop_back();
            bytes_ -= buf.capacity() * sizeof(double);
            buf.assign(n, 0.0);
            return buf;
        }
        return std::vector<double>(n, 0.0);
    }

    void release(std::vector<double>&& buf) {
        const std::size_t bytes = buf.capacity() * sizeof(double);
        if (bytes == 0 || bytes_ + bytes > kMaxPooledBytes) return;
        bytes_ += bytes;
        stack_.push_back(std::move(buf));
    }

private:
    static constexpr std::size_t kMaxPooledBytes = std::size_t(96) << 20;
    std::vector<std::vector<double>> stack_;
    std::size_t bytes_ = 0;
};

thread_local BufferPool t_pool;

NodePtr make_node(std::size_t r, std::size_t c) {
    auto n = std::make_shared<Node>();
    n->rows = r;
    n->cols = c;
    n->value = t_pool.acquire(r * c);
    return n;
}

void check_finite(const Node& n, const char* op) {
    for (double v : n.value) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by ") + op);
        }
    }
}

std::vector<double>& grad_buf(Node& n) {
    if (n.grad.size() != n.value.size()) n.grad = t_pool.acquire(n.value.size());
    return n.grad;
}

bool wants_grad(const NodePtr& a) { return a && a->requires_grad; }

} // namespace

Tensor::Node::~Node() {
    t_pool.release(std::move(value));
    t_pool.release(std::move(grad));
}

namespace {

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

} // namespace

// --- construction -------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
    auto n = make_node(rows, cols);
    std::fill(n->value.begin(), n->value.end(), value);
    n->requires_grad = requires_grad;
    check_finite(*n, "full");
    return Tensor(n);
}

Tensor Tensor::from_data(std::size_t rows, std::size_t cols, std::vector<double> values,
                         bool requires_grad) {
    if (values.size() != rows * cols) throw ShapeError("from_data: size mismatch");
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    check_finite(*n, "from_data");
    return Tensor(n);
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
    std::size_t n = values.size();
    return from_data(n, 1, std::move(values), requires_grad);
}

Tensor Tensor::uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi,
                       bool requires_grad) {
    auto n = make_node(rows, cols);
    for (auto& v : n->value) v = rng.uniform(lo, hi);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

// --- accessors -----------------------------------------------------------

std::size_t Tensor::rows() const { return node_ ? node_->rows : 0; }
std::size_t Tensor::cols() const { return node_ ? node_->cols : 0; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::at(std::size_t r, std::size_t c) const {
    if (!node_ || r >= node_->rows || c >= node_->cols) throw ShapeError("at: out of range");
    return node_->value[r * node_->cols + c];
}

double Tensor::item() const {
    if (!node_ || node_->value.size() != 1) throw ShapeError("item: tensor is not 1x1");
    return node_->value[0];
}

const std::vector<double>& Tensor::data() const {
    require_defined(*this, "data");
    return node_->value;
}

std::vector<double>& Tensor::raw() {
    require_defined(*this, "raw");
    return node_->value;
}

const std::vector<double>& Tensor::grad() const {
    require_defined(*this, "grad");
    return grad_buf(*node_);
}

void Tensor::zero_grad() {
    require_defined(*this, "zero_grad");
    node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detach() const {
    require_defined(*this, "detach");
    auto n = make_node(node_->rows, node_->cols);
    n->value = node_->value;
    return Tensor(n);
}

void Tensor::backward() {
    if (!node_ || node_->value.size() != 1) throw ShapeError("backward: requires a 1x1 tensor");

    // Iterative post-order over the subgraph that requires grad.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->parents.size()) {
            Node* p = f.node->parents[f.next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
    node_->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

// --- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    const auto an = a.node();
    const auto bn = b.node();
    const std::size_t n = an->rows, k = an->cols, m = bn->cols;
    auto out = make_node(n, m);

    const double* A = an->value.data();
    const double* B = bn->value.data();
    double* O = out->value.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* Ai = A + i * k;
        double* Oi = O + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = Ai[p];
            if (av == 0.0) continue;
            const double* Bp = B + p * m;
            for (std::size_t j = 0; j < m; ++j) Oi[j] += av * Bp[j];
        }
    }
    check_finite(*out, "matmul");

    out->requires_grad = wants_grad(an) || wants_grad(bn);
    if (out->requires_grad) {
        out->parents = {an, bn};
        out->backward_fn = [an, bn, n, k, m](Node& self) {
            const double* G = self.grad.data();
            if (an->requires_grad) {
                double* dA = grad_buf(*an).data();
                const double* B = bn->value.data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double* Gi = G + i * m;
                    double* dAi = dA + i * k;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double* Bp = B + p * m;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < m; ++j) acc += Gi[j] * Bp[j];
                        dAi[p] += acc;
                    }
                }
            }
            if (bn->requires_grad) {
                double* dB = grad_buf(*bn).data();
                const double* A = an->value.data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double* Gi = G + i * m;
                    const double* Ai = A + i * k;
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = Ai[p];
                        if (av == 0.0) continue;
                        double* dBp = dB + p * m;
                        for (std::size_t j = 0; j < m; ++j) dBp[j] += av * Gi[j];
                    }
                }
            }
        };
    }
    return Tensor(out);
}

namespace {

Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double),
                          double (*dfda)(double, double),
                          double (*dfdb)(double, double)) {
    require_defined(a, name);
    require_defined(b, name);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(name) + ": shape mismatch");
    }
    const auto an = a.node();
    const auto bn = b.node();
    auto out = make_node(an->rows, an->cols);
    for (std::size_t i = 0; i < out->value.size(); ++i) {
        out->value[i] = fwd(an->value[i], bn->value[i]);
    }
    check_finite(*out, name);
    out->requires_grad = wants_grad(an) || wants_grad(bn);
    if (out->requires_grad) {
        out->parents = {an, bn};
        out->backward_fn = [an, bn, dfda, dfdb](Node& self) {
            if (an->requires_grad) {
                auto& da = grad_buf(*an);
                for (std::size_t i = 0; i < da.size(); ++i) {
                    da[i] += self.grad[i] * dfda(an->value[i], bn->value[i]);
                }
            }
            if (bn->requires_grad) {
                auto& db = grad_buf(*bn);
                for (std::size_t i = 0; i < db.size(); ++i) {
                    db[i] += self.grad[i] * dfdb(an->value[i], bn->value[i]);
                }
            }
        };
    }
    return Tensor(out);
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    require_defined(x, "add_rowvec");
    require_defined(b, "add_rowvec");
    if (b.rows() != 1 || b.cols() != x.cols()) throw ShapeError("add_rowvec: b must be 1 x cols(x)");
    const auto xn = x.node();
    const auto bn = b.node();
    const std::size_t n = xn->rows, c = xn->cols;
    auto out = make_node(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out->value[i * c + j] = xn->value[i * c + j] + bn->value[j];
        }
    }
    check_finite(*out, "add_rowvec");
    out->requires_grad = wants_grad(xn) || wants_grad(bn);
    if (out->requires_grad) {
        out->parents = {xn, bn};
        out->backward_fn = [xn, bn, n, c](Node& self) {
            if (xn->requires_grad) {
                auto& dx = grad_buf(*xn);
                for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                auto& db = grad_buf(*bn);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < c; ++j) db[j] += self.grad[i * c + j];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
    require_defined(a, "scale");
    const auto an = a.node();
    auto out = make_node(an->rows, an->cols);
    for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = an->value[i] * s;
    check_finite(*out, "scale");
    out->requires_grad = wants_grad(an);
    if (out->requires_grad) {
        out->parents = {an};
        out->backward_fn = [an, s](Node& self) {
            auto& da = grad_buf(*an);
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * s;
        };
    }
    return Tensor(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_defined(a, "concat_cols");
    require_defined(b, "concat_cols");
    if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
    const auto an = a.node();
    const auto bn = b.node();
    const std::size_t n = an->rows, ca = an->cols, cb = bn->cols;
    auto out = make_node(n, ca + cb);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(an->value.begin() + i * ca, ca, out->value.begin() + i * (ca + cb));
        std::copy_n(bn->value.begin() + i * cb, cb, out->value.begin() + i * (ca + cb) + ca);
    }
    out->requires_grad = wants_grad(an) || wants_grad(bn);
    if (out->requires_grad) {
        out->parents = {an, bn};
        out->backward_fn = [an, bn, n, ca, cb](Node& self) {
            for (std::size_t i = 0; i < n; ++i) {
                if (an->requires_grad) {
                    auto& da = grad_buf(*an);
                    for (std::size_t j = 0; j < ca; ++j) {
                        da[i * ca + j] += self.grad[i * (ca + cb) + j];
                    }
                }
                if (bn->requires_grad) {
                    auto& db = grad_buf(*bn);
                    for (std::size_t j = 0; j < cb; ++j) {
                        db[i * cb + j] += self.grad[i * (ca + cb) + ca + j];
                    }
                }
            }
        };
    }
    return Tensor(out);
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_defined(a, "concat_rows");
    require_defined(b, "concat_rows");
    if (a.cols() != b.cols()) throw ShapeError("concat_rows: column counts differ");
    const auto an = a.node();
    const auto bn = b.node();
    const std::size_t ra = an->rows, rb = bn->rows, c = an->cols;
    auto out = make_node(ra + rb, c);
    std::copy(an->value.begin(), an->value.end(), out->value.begin());
    std::copy(bn->value.begin(), bn->value.end(), out->value.begin() + ra * c);
    out->requires_grad = wants_grad(an) || wants_grad(bn);
    if (out->requires_grad) {
        out->parents = {an, bn};
        out->backward_fn = [an, bn, ra, rb, c](Node& self) {
            if (an->requires_grad) {
                auto& da = grad_buf(*an);
                for (std::size_t i = 0; i < ra * c; ++i) da[i] += self.grad[i];
            }
            if (bn->requires_grad) {
                auto& db = grad_buf(*bn);
                for (std::size_t i = 0; i < rb * c; ++i) db[i] += self.grad[ra * c + i];
            }
        };
    }
    return Tensor(out);
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
    require_defined(x, "leaky_relu");
    const auto xn = x.node();
    auto out = make_node(xn->rows, xn->cols);
    for (std::size_t i = 0; i < out->value.size(); ++i) {
        const double v = xn->value[i];
        out->value[i] = v >= 0.0 ? v : negative_slope * v;
    }
    check_finite(*out, "leaky_relu");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        out->backward_fn = [xn, negative_slope](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < dx.size(); ++i) {
                dx[i] += self.grad[i] * (xn->value[i] >= 0.0 ? 1.0 : negative_slope);
            }
        };
    }
    return Tensor(out);
}

Tensor dropout(const Tensor& x, double p, Rng* rng) {
    require_defined(x, "dropout");
    if (rng == nullptr || p <= 0.0) return x; // eval mode: identity
    if (p >= 1.0) throw ShapeError("dropout: p must be < 1");
    const auto xn = x.node();
    auto out = make_node(xn->rows, xn->cols);
    const double inv_keep = 1.0 / (1.0 - p);
    auto factors = std::make_shared<std::vector<double>>(xn->value.size());
    for (std::size_t i = 0; i < out->value.size(); ++i) {
        const double f = rng->bernoulli(p) ? 0.0 : inv_keep;
        (*factors)[i] = f;
        out->value[i] = xn->value[i] * f;
    }
    check_finite(*out, "dropout");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        out->backward_fn = [xn, factors](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i] * (*factors)[i];
        };
    }
    return Tensor(out);
}

Tensor row_softmax(const Tensor& x) {
    require_defined(x, "row_softmax");
    const auto xn = x.node();
    const std::size_t n = xn->rows, c = xn->cols;
    if (c == 0) throw ShapeError("row_softmax: zero columns");
    auto out = make_node(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = xn->value.data() + i * c;
        double* yi = out->value.data() + i * c;
        double mx = xi[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            sum += yi[j];
        }
        for (std::size_t j = 0; j < c; ++j) yi[j] /= sum;
    }
    check_finite(*out, "row_softmax");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        // self.value holds the softmax output; capturing the node itself
        // would create a shared_ptr cycle and leak the whole graph.
        out->backward_fn = [xn, n, c](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < n; ++i) {
                const double* y = self.value.data() + i * c;
                const double* g = self.grad.data() + i * c;
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
                for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += y[j] * (g[j] - dot);
            }
        };
    }
    return Tensor(out);
}

Tensor sum_all(const Tensor& x) {
    require_defined(x, "sum_all");
    const auto xn = x.node();
    auto out = make_node(1, 1);
    double s = 0.0;
    for (double v : xn->value) s += v;
    out->value[0] = s;
    check_finite(*out, "sum_all");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        out->backward_fn = [xn](Node& self) {
            auto& dx = grad_buf(*xn);
            for (auto& v : dx) v += self.grad[0];
        };
    }
    return Tensor(out);
}

Tensor mean_all(const Tensor& x) {
    require_defined(x, "mean_all");
    if (x.size() == 0) throw ShapeError("mean_all: empty tensor");
    return scale(sum_all(x), 1.0 / double(x.size()));
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
    require_defined(x, "gather_rows");
    const auto xn = x.node();
    const std::size_t c = xn->cols;
    auto out = make_node(idx.size(), c);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= xn->rows) throw ShapeError("gather_rows: index out of range");
        std::copy_n(xn->value.begin() + idx[i] * c, c, out->value.begin() + i * c);
    }
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        auto indices = idx;
        out->backward_fn = [xn, indices, c](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < indices.size(); ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    dx[indices[i] * c + j] += self.grad[i * c + j];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor scatter_sum_rows(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t n_out) {
    require_defined(x, "scatter_sum_rows");
    const auto xn = x.node();
    if (idx.size() != xn->rows) throw ShapeError("scatter_sum_rows: one index per row required");
    const std::size_t c = xn->cols;
    auto out = make_node(n_out, c);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= n_out) throw ShapeError("scatter_sum_rows: index out of range");
        for (std::size_t j = 0; j < c; ++j) {
            out->value[idx[i] * c + j] += xn->value[i * c + j];
        }
    }
    check_finite(*out, "scatter_sum_rows");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        auto indices = idx;
        out->backward_fn = [xn, indices, c](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < indices.size(); ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    dx[i * c + j] += self.grad[indices[i] * c + j];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor row_scale(const Tensor& x, const std::vector<double>& s) {
    require_defined(x, "row_scale");
    const auto xn = x.node();
    if (s.size() != xn->rows) throw ShapeError("row_scale: one factor per row required");
    const std::size_t c = xn->cols;
    auto out = make_node(xn->rows, c);
    for (std::size_t i = 0; i < xn->rows; ++i) {
        for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] = xn->value[i * c + j] * s[i];
    }
    check_finite(*out, "row_scale");
    out->requires_grad = wants_grad(xn);
    if (out->requires_grad) {
        out->parents = {xn};
        auto factors = s;
        out->backward_fn = [xn, factors, c](Node& self) {
            auto& dx = grad_buf(*xn);
            for (std::size_t i = 0; i < factors.size(); ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    dx[i * c + j] += self.grad[i * c + j] * factors[i];
                }
            }
        };
    }
    return Tensor(out);
}

Tensor mul_rows(const Tensor& x, const Tensor& a) {
    require_defined(x, "mul_rows");
    require_defined(a, "mul_rows");
    if (a.cols() != 1 || a.rows() != x.rows()) throw ShapeError("mul_rows: a must be rows(x) x 1");
    const auto xn = x.node();
    const auto an = a.node();
    const std::size_t n = xn->rows, c = xn->cols;
    auto out = make_node(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out->value[i * c + j] = xn->value[i * c + j] * an->value[i];
        }
    }
    check_finite(*out, "mul_rows");
    out->requires_grad = wants_grad(xn) || wants_grad(an);
    if (out->requires_grad) {
        out->parents = {xn, an};
        out->backward_fn = [xn, an, n, c](Node& self) {
            if (xn->requires_grad) {
                auto& dx = grad_buf(*xn);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        dx[i * c + j] += self.grad[i * c + j] * an->value[i];
                    }
                }
            }
            if (an->requires_grad) {
                auto& da = grad_buf(*an);
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < c; ++j) {
                        acc += self.grad[i * c + j] * xn->value[i * c + j];
                    }
                    da[i] += acc;
                }
            }
        };
    }
    return Tensor(out);
}

Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& seg,
                       std::size_t n_segments) {
    require_defined(scores, "segment_softmax");
    if (scores.cols() != 1) throw ShapeError("segment_softmax: scores must be m x 1");
    const auto sn = scores.node();
    if (seg.size() != sn->rows) throw ShapeError("segment_softmax: one segment id per score");

    std::vector<std::vector<std::size_t>> members(n_segments);
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] >= n_segments) throw ShapeError("segment_softmax: segment id out of range");
        members[seg[i]].push_back(i);
    }

    auto out = make_node(sn->rows, 1);
    for (const auto& grp : members) {
        if (grp.empty()) continue;
        double mx = sn->value[grp[0]];
        for (std::size_t i : grp) mx = std::max(mx, sn->value[i]);
        double sum = 0.0;
        for (std::size_t i : grp) {
            out->value[i] = std::exp(sn->value[i] - mx);
            sum += out->value[i];
        }
        for (std::size_t i : grp) out->value[i] /= sum;
    }
    check_finite(*out, "segment_softmax");
    out->requires_grad = wants_grad(sn);
    if (out->requires_grad) {
        auto groups = std::make_shared<std::vector<std::vector<std::size_t>>>(std::move(members));
        out->parents = {sn};
        out->backward_fn = [sn, groups](Node& self) {
            auto& dx = grad_buf(*sn);
            for (const auto& grp : *groups) {
                if (grp.empty()) continue;
                double dot = 0.0;
                for (std::size_t i : grp) dot += self.grad[i] * self.value[i];
                for (std::size_t i : grp) dx[i] += self.value[i] * (self.grad[i] - dot);
            }
        };
    }
    return Tensor(out);
}

Tensor weighted_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                              const std::vector<double>& class_weights) {
    require_defined(logits, "weighted_cross_entropy");
    const auto ln = logits.node();
    const std::size_t n = ln->rows, C = ln->cols;
    if (n == 0) throw ShapeError("weighted_cross_entropy: no rows");
    if (targets.size() != n) throw ShapeError("weighted_cross_entropy: one target per row required");
    if (class_weights.size() != C) throw ShapeError("weighted_cross_entropy: weights size != classes");
    for (double w : class_weights) {
        if (!(w > 0.0)) throw WeightError("weighted_cross_entropy: weights must be positive");
    }
    for (int t : targets) {
        if (t < 0 || std::size_t(t) >= C) throw LabelError("weighted_cross_entropy: target out of range");
    }

    // Cache softmax probabilities for the backward pass.
    auto probs = std::make_shared<std::vector<double>>(n * C);
    auto out = make_node(1, 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = ln->value.data() + i * C;
        double* pi = probs->data() + i * C;
        double mx = xi[0];
        for (std::size_t j = 1; j < C; ++j) mx = std::max(mx, xi[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            pi[j] = std::exp(xi[j] - mx);
            sum += pi[j];
        }
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < C; ++j) pi[j] /= sum;
        total += class_weights[targets[i]] * (lse - xi[targets[i]]);
    }
    out->value[0] = total / double(n);
    check_finite(*out, "weighted_cross_entropy");

    out->requires_grad = wants_grad(ln);
    if (out->requires_grad) {
        auto tgt = std::make_shared<std::vector<int>>(targets);
        auto wts = std::make_shared<std::vector<double>>(class_weights);
        out->parents = {ln};
        out->backward_fn = [ln, probs, tgt, wts, n, C](Node& self) {
            auto& dx = grad_buf(*ln);
            const double g = self.grad[0] / double(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = (*wts)[std::size_t((*tgt)[i])];
                const double* pi = probs->data() + i * C;
                for (std::size_t j = 0; j < C; ++j) {
                    double d = pi[j];
                    if (j == std::size_t((*tgt)[i])) d -= 1.0;
                    dx[i * C + j] += g * w * d;
                }
            }
        };
    }
    return Tensor(out);
}

std::vector<int> argmax_rows(const Tensor& x) {
    require_defined(x, "argmax_rows");
    const auto xn = x.node();
    std::vector<int> out(xn->rows);
    for (std::size_t i = 0; i < xn->rows; ++i) {
        const double* xi = xn->value.data() + i * xn->cols;
        std::size_t best = 0;
        for (std::size_t j = 1; j < xn->cols; ++j) {
            if (xi[j] > xi[best]) best = j;
        }
        out[i] = int(best);
    }
    return out;
}

} // namespace funcgraph::num
