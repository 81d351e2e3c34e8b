#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "funcgraph/hier.hpp"
#include "support/dense_oracle.hpp"

using namespace funcgraph;
using num::Rng;
using num::Tensor;

namespace {

constexpr std::size_t kDx = 6;
constexpr std::size_t kDe = 4;
const std::array<std::size_t, 3> kClasses = {3, 4, 5};

EncodedGraph toy_graph(Rng& rng, std::size_t n = 4) {
    EncodedGraph g = oracle::random_encoded(rng, n + 1, kDx, kDe);
    while (g.num_nodes() != n) g = oracle::random_encoded(rng, n + 1, kDx, kDe);
    for (std::size_t i = 0; i < n; ++i) {
        g.labels_t1[i] = int(i % kClasses[0]);
        g.labels_t2[i] = int(i % kClasses[1]);
        g.labels_t3[i] = int(i % kClasses[2]);
    }
    return g;
}

hier::ModelConfig small_config(bool hierarchical = true) {
    hier::ModelConfig cfg;
    for (auto& tier : cfg.tiers) {
        tier.encoder_type = "gnn";
        tier.encoder.kind = gnn::LayerKind::Sage;
        tier.encoder.num_layers = 1;
        tier.encoder.hidden_dim = 8;
        tier.head_hidden = {8};
    }
    cfg.hierarchical = hierarchical;
    return cfg;
}

std::array<std::vector<double>, 3> unit_weights() {
    return {std::vector<double>(kClasses[0], 1.0), std::vector<double>(kClasses[1], 1.0),
            std::vector<double>(kClasses[2], 1.0)};
}

} // namespace

TEST_CASE("tier-1 head input ends in an all-zero predecessor slot") {
    Rng rng(1);
    EncodedGraph g = toy_graph(rng);
    Rng init(2);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto fwd = model.forward_train(g, gnn::GraphTopology::build(g), unit_weights(), nullptr);
    const Tensor& in1 = fwd.head_inputs[0];
    CHECK(in1.cols() == 8 + kClasses[0]);
    for (std::size_t i = 0; i < in1.rows(); ++i) {
        for (std::size_t j = 8; j < in1.cols(); ++j) CHECK(in1.at(i, j) == 0.0);
    }
}

TEST_CASE("teacher forcing feeds exact ground-truth one-hots to tiers 2 and 3") {
    Rng rng(3);
    EncodedGraph g = toy_graph(rng);
    Rng init(4);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto fwd = model.forward_train(g, gnn::GraphTopology::build(g), unit_weights(), nullptr);

    const Tensor& in2 = fwd.head_inputs[1];
    for (std::size_t i = 0; i < in2.rows(); ++i) {
        for (std::size_t j = 0; j < kClasses[0]; ++j) {
            const double expect = int(j) == g.labels_t1[i] ? 1.0 : 0.0;
            CHECK(in2.at(i, 8 + j) == expect);
        }
    }
    const Tensor& in3 = fwd.head_inputs[2];
    for (std::size_t i = 0; i < in3.rows(); ++i) {
        for (std::size_t j = 0; j < kClasses[1]; ++j) {
            const double expect = int(j) == g.labels_t2[i] ? 1.0 : 0.0;
            CHECK(in3.at(i, 8 + j) == expect);
        }
    }
}

TEST_CASE("joint loss equals the sum of the three tier losses") {
    Rng rng(5);
    EncodedGraph g = toy_graph(rng);
    Rng init(6);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto w = unit_weights();
    const auto fwd = model.forward_train(g, gnn::GraphTopology::build(g), w, nullptr);
    double sum = 0.0;
    sum += num::weighted_cross_entropy(fwd.tiers[0].logits, g.labels_t1, w[0]).item();
    sum += num::weighted_cross_entropy(fwd.tiers[1].logits, g.labels_t2, w[1]).item();
    sum += num::weighted_cross_entropy(fwd.tiers[2].logits, g.labels_t3, w[2]).item();
    CHECK(std::abs(fwd.loss.item() - sum) < 1e-12);
}

TEST_CASE("gradient through the zero slot is identically zero") {
    Rng rng(7);
    EncodedGraph g = toy_graph(rng);
    Rng init(8);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    auto fwd = model.forward_train(g, gnn::GraphTopology::build(g), unit_weights(), nullptr);
    fwd.loss.backward();

    // The tier-1 head's first linear layer sees [H || 0]; the weight rows
    // feeding on the zero slot must receive zero gradient.
    const auto names = model.param_names();
    const auto params = model.params();
    for (std::size_t p = 0; p < names.size(); ++p) {
        if (names[p] != "t1.head.l0.w") continue;
        const auto& grad = params[p].grad();
        const std::size_t out_dim = params[p].cols();
        for (std::size_t row = 8; row < params[p].rows(); ++row) {
            for (std::size_t c = 0; c < out_dim; ++c) CHECK(grad[row * out_dim + c] == 0.0);
        }
        return;
    }
    FAIL("tier-1 head weights not found");
}

TEST_CASE("probability rows of every tier prediction sum to one") {
    Rng rng(9);
    EncodedGraph g = toy_graph(rng, 6);
    Rng init(10);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto preds = model.forward_infer(g, gnn::GraphTopology::build(g));
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < preds[k].probs.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < preds[k].probs.cols(); ++j) sum += preds[k].probs.at(i, j);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("inference ignores labels entirely") {
    Rng rng(11);
    EncodedGraph g = toy_graph(rng);
    Rng init(12);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto topo = gnn::GraphTopology::build(g);
    const auto clean = model.forward_infer(g, topo);

    EncodedGraph poisoned = g;
    for (auto& y : poisoned.labels_t1) y = (y + 1) % int(kClasses[0]);
    for (auto& y : poisoned.labels_t2) y = (y + 2) % int(kClasses[1]);
    for (auto& y : poisoned.labels_t3) y = (y + 3) % int(kClasses[2]);
    const auto dirty = model.forward_infer(poisoned, topo);

    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(clean[k].probs.data() == dirty[k].probs.data());
        CHECK(clean[k].predicted == dirty[k].predicted);
    }
}

TEST_CASE("tier-1 path is identical between train and infer modes") {
    Rng rng(13);
    EncodedGraph g = toy_graph(rng);
    Rng init(14);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto topo = gnn::GraphTopology::build(g);
    const auto train_fwd = model.forward_train(g, topo, unit_weights(), nullptr);
    const auto infer = model.forward_infer(g, topo);
    CHECK(train_fwd.tiers[0].logits.data() == infer[0].logits.data());
}

TEST_CASE("tier chaining is live: perturbing tier-1 moves tier-3 outputs") {
    Rng rng(15);
    EncodedGraph g = toy_graph(rng);
    Rng init(16);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto topo = gnn::GraphTopology::build(g);
    const auto before = model.forward_infer(g, topo);

    const auto names = model.param_names();
    auto params = model.params();
    for (std::size_t p = 0; p < names.size(); ++p) {
        if (names[p] == "t1.enc.l0.w_self") {
            for (auto& v : params[p].raw()) v += 0.5;
        }
    }
    const auto after = model.forward_infer(g, topo);
    double diff2 = 0.0, diff3 = 0.0;
    for (std::size_t i = 0; i < before[2].probs.data().size(); ++i) {
        diff3 += std::abs(before[2].probs.data()[i] - after[2].probs.data()[i]);
    }
    for (std::size_t i = 0; i < before[1].probs.data().size(); ++i) {
        diff2 += std::abs(before[1].probs.data()[i] - after[1].probs.data()[i]);
    }
    CHECK(diff2 > 1e-9);
    CHECK(diff3 > 1e-9);
}

TEST_CASE("independent mode removes the predecessor slot and the chaining") {
    Rng rng(17);
    EncodedGraph g = toy_graph(rng);
    Rng init(18);
    hier::HierModel model(small_config(false), kDx, kDe, kClasses, init);
    const auto topo = gnn::GraphTopology::build(g);
    const auto fwd = model.forward_train(g, topo, unit_weights(), nullptr);
    CHECK(fwd.head_inputs[0].cols() == 8);
    CHECK(fwd.head_inputs[1].cols() == 8);
    CHECK(fwd.head_inputs[2].cols() == 8);

    // Perturbing tier-1 parameters leaves the other tiers untouched.
    const auto before = model.forward_infer(g, topo);
    const auto names = model.param_names();
    auto params = model.params();
    for (std::size_t p = 0; p < names.size(); ++p) {
        if (names[p].rfind("t1.", 0) == 0) {
            for (auto& v : params[p].raw()) v += 0.3;
        }
    }
    const auto after = model.forward_infer(g, topo);
    CHECK(before[1].probs.data() == after[1].probs.data());
    CHECK(before[2].probs.data() == after[2].probs.data());
}

TEST_CASE("full hierarchical loss passes a gradient check on a 4-node graph") {
    Rng rng(19);
    EncodedGraph g = toy_graph(rng);
    Rng init(20);
    hier::ModelConfig cfg = small_config();
    for (auto& tier : cfg.tiers) {
        tier.encoder.hidden_dim = 4;
        tier.head_hidden = {4};
    }
    hier::HierModel model(cfg, kDx, kDe, kClasses, init);
    const auto topo = gnn::GraphTopology::build(g);
    const auto w = unit_weights();
    auto f = [&]() { return model.forward_train(g, topo, w, nullptr).loss; };
    CHECK(num::grad_check(f, model.params()) < 1e-3);
}

TEST_CASE("batch loss is the mean of per-graph summed losses") {
    Rng rng(21);
    EncodedGraph g1 = toy_graph(rng);
    EncodedGraph g2 = toy_graph(rng, 5);
    Rng init(22);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    const auto t1 = gnn::GraphTopology::build(g1);
    const auto t2 = gnn::GraphTopology::build(g2);
    const auto w = unit_weights();
    const double l1 = model.forward_train(g1, t1, w, nullptr).loss.item();
    const double l2 = model.forward_train(g2, t2, w, nullptr).loss.item();
    const double batch = model.batch_loss({&g1, &g2}, {&t1, &t2}, w, nullptr).item();
    CHECK(batch == doctest::Approx((l1 + l2) / 2.0).epsilon(1e-12));
}

TEST_CASE("a 4-node separable toy overfits in 200 steps") {
    Rng rng(23);
    EncodedGraph g;
    g.graph_id = "separable";
    g.node_features = Tensor::from_data(4, kDx,
                                        {1, 0, 0, 0, 0, 0,
                                         0, 1, 0, 0, 0, 0,
                                         0, 0, 1, 0, 0, 0,
                                         0, 0, 0, 1, 0, 0});
    g.edge_index = {};
    g.edge_features = Tensor::zeros(0, kDe);
    g.labels_t1 = {0, 1, 2, 0};
    g.labels_t2 = {0, 1, 2, 3};
    g.labels_t3 = {0, 1, 2, 3};
    const auto topo = gnn::GraphTopology::build(g);

    Rng init(24);
    hier::HierModel model(small_config(), kDx, kDe, kClasses, init);
    auto params = model.params();
    num::AdamState adam;
    adam.init(params);
    const auto w = unit_weights();
    double loss = 0.0;
    for (int step = 0; step < 200; ++step) {
        Tensor l = model.forward_train(g, topo, w, nullptr).loss;
        l.backward();
        num::adam_step(params, adam, 1e-2);
        loss = l.item();
    }
    CHECK(loss < 0.05);
}

TEST_CASE("top-k hits: exhaustive k, argmax k, ties and monotonicity") {
    Tensor probs = Tensor::from_data(3, 4,
                                     {0.4, 0.4, 0.1, 0.1,
                                      0.1, 0.2, 0.3, 0.4,
                                      0.25, 0.25, 0.25, 0.25});
    const std::vector<int> truth = {1, 3, 2};

    // k = C covers everything.
    CHECK(hier::top_k_rate(probs, truth, 4) == doctest::Approx(1.0));

    // k = 1 equals argmax accuracy with ties to the lower class index:
    // row 0 ties 0.4/0.4 -> class 0 wins -> miss; row 1 hit; row 2 tie -> class 0 -> miss.
    const auto hits1 = hier::top_k_hits(probs, truth, 1);
    CHECK(hits1[0] == 0);
    CHECK(hits1[1] == 1);
    CHECK(hits1[2] == 0);

    double prev = 0.0;
    for (std::size_t k = 1; k <= 4; ++k) {
        const double rate = hier::top_k_rate(probs, truth, k);
        CHECK(rate >= prev);
        prev = rate;
    }
}
