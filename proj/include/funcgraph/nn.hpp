#pragma once

#include <functional>
#include <vector>

#include "funcgraph/tensor.hpp"

namespace funcgraph::num {

/// Xavier bound sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

/// Weight matrix with entries drawn strictly inside the Xavier bound.
Tensor xavier_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out);

/// Fully connected layer y = x W + b with Xavier-initialized W, zero bias.
struct LinearLayer {
    Tensor W; // in x out
    Tensor b; // 1 x out

    LinearLayer() = default;
    LinearLayer(std::size_t in, std::size_t out, Rng& rng);

    std::size_t in_dim() const { return W.rows(); }
    std::size_t out_dim() const { return W.cols(); }

    Tensor forward(const Tensor& x) const;
    std::vector<Tensor> params() const { return {W, b}; }
};

/// MLP classifier head: hidden layers with LeakyReLU(0.2) and dropout 0.1
/// on hidden activations (train mode only); the output layer emits raw logits.
struct MLPHead {
    std::vector<LinearLayer> layers;
    double negative_slope = 0.2;
    double dropout_p = 0.1;

    MLPHead() = default;
    MLPHead(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, Rng& rng);

    /// dropout_rng == nullptr means eval mode.
    Tensor forward(const Tensor& x, Rng* dropout_rng) const;
    std::vector<Tensor> params() const;
};

/// w_c = N_total / (C_present * max(count_c, 1)); zero-count classes get the
/// weight they would have with count 1.
std::vector<double> class_weights(const std::vector<long>& label_counts);

/// Adam with bias correction; moments are kept per parameter in
/// registration order.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<Tensor>& params);
};

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

/// lr(t) = lr_min + (lr_max - lr_min) * (1 + cos(pi t / T)) / 2
struct CosineSchedule {
    double lr_max = 1e-3;
    double lr_min = 1e-5;
    long total_epochs = 500;

    double at(long epoch) const;
};

/// Compares reverse-mode gradients of the scalar f() against central finite
/// differences over every element of every parameter; returns the max
/// relative error (absolute floor guards near-zero gradients).
double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  double eps = 1e-5, double abs_floor = 1e-8);

} // namespace funcgraph::num
