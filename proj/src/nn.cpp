#include "funcgraph/nn.hpp"

#include <cmath>

namespace funcgraph::num {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / double(fan_in + fan_out));
}

Tensor xavier_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    const double bound = xavier_bound(fan_in, fan_out);
    Tensor w = Tensor::zeros(fan_in, fan_out, true);
    for (auto& v : w.raw()) {
        do {
            v = rng.uniform(-bound, bound);
        } while (std::abs(v) >= bound);
    }
    return w;
}

LinearLayer::LinearLayer(std::size_t in, std::size_t out, Rng& rng)
    : W(xavier_uniform(rng, in, out)), b(Tensor::zeros(1, out, true)) {}

Tensor LinearLayer::forward(const Tensor& x) const {
    return add_rowvec(matmul(x, W), b);
}

MLPHead::MLPHead(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                 Rng& rng) {
    std::size_t prev = in;
    for (std::size_t h : hidden) {
        layers.emplace_back(prev, h, rng);
        prev = h;
    }
    layers.emplace_back(prev, out, rng);
}

Tensor MLPHead::forward(const Tensor& x, Rng* dropout_rng) const {
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        h = leaky_relu(layers[i].forward(h), negative_slope);
        h = dropout(h, dropout_p, dropout_rng);
    }
    return layers.back().forward(h);
}

std::vector<Tensor> MLPHead::params() const {
    std::vector<Tensor> out;
    for (const auto& l : layers) {
        out.push_back(l.W);
        out.push_back(l.b);
    }
    return out;
}

std::vector<double> class_weights(const std::vector<long>& label_counts) {
    long total = 0;
    long present = 0;
    for (long c : label_counts) {
        if (c < 0) throw WeightError("class_weights: negative count");
        total += c;
        if (c > 0) ++present;
    }
    if (present == 0) throw WeightError("class_weights: all counts are zero");
    std::vector<double> w(label_counts.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = double(total) / (double(present) * double(std::max<long>(label_counts[i], 1)));
    }
    return w;
}

void AdamState::init(const std::vector<Tensor>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (state.m.size() != params.size()) state.init(params);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p].raw();
        const auto& grad = params[p].grad();
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (grad.size() != value.size() || m.size() != value.size()) {
            throw ShapeError("adam_step: parameter/gradient shape mismatch");
        }
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double CosineSchedule::at(long epoch) const {
    if (total_epochs <= 0) return lr_min;
    const double t = double(epoch) / double(total_epochs);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * t));
}

double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps,
                  double abs_floor) {
    Tensor loss = f();
    loss.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p].raw();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + eps;
            const double up = f().item();
            value[i] = saved - eps;
            const double down = f().item();
            value[i] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double ad = analytic[p][i];
            const double denom = std::max(abs_floor, std::abs(fd) + std::abs(ad));
            worst = std::max(worst, std::abs(fd - ad) / denom);
        }
    }
    return worst;
}

} // namespace funcgraph::num
