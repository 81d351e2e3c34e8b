#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "funcgraph/experiment.hpp"
#include "support/fixtures.hpp"

using namespace funcgraph;
using expt::Averaging;

namespace {

// Confusion-count oracle written independently of expt::metrics.
struct OraclePrf {
    double p, r, f1;
};

OraclePrf oracle_metrics(const std::vector<int>& yt, const std::vector<int>& yp, int C,
                         const std::string& avg) {
    std::vector<double> tp(C, 0), fp(C, 0), fn(C, 0), support(C, 0);
    for (std::size_t i = 0; i < yt.size(); ++i) {
        support[yt[i]] += 1;
        if (yt[i] == yp[i]) {
            tp[yt[i]] += 1;
        } else {
            fp[yp[i]] += 1;
            fn[yt[i]] += 1;
        }
    }
    auto safe_div = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    if (avg == "micro") {
        double TP = 0, FP = 0, FN = 0;
        for (int c = 0; c < C; ++c) {
            TP += tp[c];
            FP += fp[c];
            FN += fn[c];
        }
        const double p = safe_div(TP, TP + FP), r = safe_div(TP, TP + FN);
        return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
    }
    double wp = 0, wr = 0, wf = 0, wsum = 0;
    for (int c = 0; c < C; ++c) {
        if (support[c] == 0) continue;
        const double p = safe_div(tp[c], tp[c] + fp[c]);
        const double r = safe_div(tp[c], tp[c] + fn[c]);
        const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        const double w = avg == "macro" ? 1.0 : support[c];
        wp += w * p;
        wr += w * r;
        wf += w * f;
        wsum += w;
    }
    return {wp / wsum, wr / wsum, wf / wsum};
}

expt::RunConfig fixture_config() {
    expt::RunConfig cfg;
    cfg.seed = 11;
    for (auto& tier : cfg.model.tiers) {
        tier.encoder_type = "gnn";
        tier.encoder.kind = gnn::LayerKind::Sage;
        tier.encoder.num_layers = 1;
        tier.encoder.hidden_dim = 16;
        tier.head_hidden = {16};
    }
    cfg.train.max_epochs = 60;
    cfg.train.patience = 60;
    cfg.train.batch_size = 16;
    return cfg;
}

} // namespace

TEST_CASE("metrics: perfect predictions score 1 under every averaging") {
    const std::vector<int> y = {0, 1, 2, 1, 0};
    for (auto avg : {Averaging::Micro, Averaging::Macro, Averaging::Weighted}) {
        const auto m = expt::metrics(y, y, 3, avg);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
}

TEST_CASE("metrics: hand-computed two-class example") {
    const std::vector<int> yt = {0, 0, 1, 1};
    const std::vector<int> yp = {0, 1, 1, 1};
    const auto micro = expt::metrics(yt, yp, 2, Averaging::Micro);
    CHECK(micro.f1 == doctest::Approx(0.75));
    const auto macro = expt::metrics(yt, yp, 2, Averaging::Macro);
    // class 0: P=1, R=0.5, F1=2/3; class 1: P=2/3, R=1, F1=0.8
    CHECK(macro.f1 == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
    CHECK(macro.precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("metrics: collapsed predictor on balanced two-class data") {
    const std::vector<int> yt = {0, 1, 0, 1};
    const std::vector<int> yp = {1, 1, 1, 1};
    CHECK(expt::metrics(yt, yp, 2, Averaging::Micro).f1 == doctest::Approx(0.5));
    CHECK(expt::metrics(yt, yp, 2, Averaging::Macro).f1 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("metrics: macro averaging skips classes absent from the truth") {
    const std::vector<int> yt = {0, 1, 0, 1};
    const std::vector<int> yp = {0, 1, 1, 1};
    // class 2 exists in the label space but not in y_true
    const auto with_absent = expt::metrics(yt, yp, 3, Averaging::Macro);
    const auto without = expt::metrics(yt, yp, 2, Averaging::Macro);
    CHECK(with_absent.f1 == doctest::Approx(without.f1));
}

TEST_CASE("metrics agree exactly with the confusion-count oracle on 1000 random cases") {
    num::Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const int C = 2 + int(rng.below(9));   // C <= 10
        const int n = 1 + int(rng.below(50));  // n <= 50
        std::vector<int> yt(n), yp(n);
        for (int i = 0; i < n; ++i) {
            yt[i] = int(rng.below(std::uint64_t(C)));
            yp[i] = int(rng.below(std::uint64_t(C)));
        }
        for (const auto& avg : {"micro", "macro", "weighted"}) {
            const auto ours = expt::metrics(yt, yp, std::size_t(C),
                                            std::string(avg) == "micro"   ? Averaging::Micro
                                            : std::string(avg) == "macro" ? Averaging::Macro
                                                                          : Averaging::Weighted);
            const auto want = oracle_metrics(yt, yp, C, avg);
            CHECK(std::abs(ours.precision - want.p) < 1e-12);
            CHECK(std::abs(ours.recall - want.r) < 1e-12);
            CHECK(std::abs(ours.f1 - want.f1) < 1e-12);
        }
        // micro P = R = F1 = accuracy
        const auto micro = expt::metrics(yt, yp, std::size_t(C), Averaging::Micro);
        int correct = 0;
        for (int i = 0; i < n; ++i) correct += yt[i] == yp[i];
        const double acc = double(correct) / n;
        CHECK(micro.precision == doctest::Approx(acc).epsilon(1e-12));
        CHECK(micro.recall == doctest::Approx(acc).epsilon(1e-12));
        CHECK(micro.f1 == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("confusion matrix totals and diagonal match the sample") {
    const std::vector<int> yt = {0, 1, 2, 2, 1};
    const std::vector<int> yp = {0, 2, 2, 0, 1};
    const auto m = expt::confusion(yt, yp, 3);
    CHECK(m.total() == 5);
    CHECK(m.diagonal() == 3);
    CHECK(m.accuracy() == doctest::Approx(0.6));
    CHECK(m.at(1, 2) == 1);
    const auto norm = m.row_normalized();
    for (std::size_t r = 0; r < 3; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < 3; ++c) row += norm[r * 3 + c];
        CHECK((std::abs(row - 1.0) < 1e-12 || row == 0.0));
    }
}

TEST_CASE("mean_std: single value has zero std") {
    const auto ms = expt::mean_std({0.7});
    CHECK(ms.mean == 0.7);
    CHECK(ms.stddev == 0.0);
}

namespace {

// Train micro-F1 of a finished run, via the returned model.
std::array<double, 3> train_micro_f1(const expt::RunConfig& cfg, const expt::Dataset& data,
                                     const expt::TrainedModel& trained,
                                     const expt::RunResult& result) {
    std::vector<EncodedGraph> encoded;
    std::vector<gnn::GraphTopology> topos;
    std::vector<std::size_t> train_idx;
    for (const auto& g : data.graphs) {
        EncodedGraph e = encode_graph(g, data.vocab, cfg.mask);
        topos.push_back(gnn::GraphTopology::build(e));
        encoded.push_back(std::move(e));
    }
    for (const auto& id : result.split.train) {
        for (std::size_t i = 0; i < data.graphs.size(); ++i) {
            if (data.graphs[i].graph_id == id) train_idx.push_back(i);
        }
    }
    const auto ev = expt::evaluate(*trained.model, encoded, topos, train_idx, cfg.top_k);
    return {ev.tiers[0].micro.f1, ev.tiers[1].micro.f1, ev.tiers[2].micro.f1};
}

} // namespace

TEST_CASE("train_one overfits the separable fixture on its train split") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 6, 42));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 300;
    cfg.train.patience = 300;
    cfg.train.batch_size = 2;
    expt::TrainedModel trained;
    const auto result = expt::train_one(cfg, data, &trained);
    const auto f1 = train_micro_f1(cfg, data, trained, result);
    for (std::size_t k = 0; k < 3; ++k) CHECK(f1[k] == doctest::Approx(1.0));
    CHECK(result.best_epoch >= 0);
}

TEST_CASE("learning-rate trace matches the cosine schedule") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 4, 43));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 20;
    cfg.train.patience = 20;
    const auto result = expt::train_one(cfg, data);
    num::CosineSchedule s{cfg.train.lr_max, cfg.train.lr_min, cfg.train.max_epochs};
    REQUIRE(result.lr_trace.size() == 20);
    CHECK(result.lr_trace[0] == doctest::Approx(s.at(0)));
    CHECK(result.lr_trace[10] == doctest::Approx(s.at(10)));
    CHECK(result.lr_trace[19] == doctest::Approx(s.at(19)));
    CHECK(result.lr_trace[0] == doctest::Approx(cfg.train.lr_max));
}

TEST_CASE("train_one is deterministic for a fixed seed") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(6, 5, 44));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 15;
    const auto a = expt::train_one(cfg, data);
    const auto b = expt::train_one(cfg, data);
    CHECK(a.train_loss_trace == b.train_loss_trace);
    CHECK(a.val_loss_trace == b.val_loss_trace);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.test[k].micro.f1 == b.test[k].micro.f1);
        CHECK(a.test[k].macro.f1 == b.test[k].macro.f1);
        CHECK(a.confusion[k].counts == b.confusion[k].counts);
    }
    CHECK(a.split.train == b.split.train);
}

TEST_CASE("early stopping keeps the best checkpoint") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(8, 5, 45));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 40;
    cfg.train.patience = 5;
    const auto result = expt::train_one(cfg, data);
    CHECK(result.best_epoch <= result.stopped_epoch);
    // best monitored value is the minimum of the recorded trace
    double best = result.val_loss_trace[0];
    for (double v : result.val_loss_trace) best = std::min(best, v);
    CHECK(result.best_val_loss == doctest::Approx(best));
}

TEST_CASE("repeat_runs: one run has zero std; repeated calls are identical") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 4, 46));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 10;
    const auto r1 = expt::repeat_runs(cfg, data, 1);
    const auto s1 = expt::summarize_runs(r1, data.tier_classes());
    CHECK(s1.completed == 1);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t a = 0; a < 3; ++a) CHECK(s1.f1[k][a].stddev == 0.0);
    }
    const auto r2 = expt::repeat_runs(cfg, data, 1);
    const auto s2 = expt::summarize_runs(r2, data.tier_classes());
    CHECK(s1.f1[0][0].mean == s2.f1[0][0].mean);
}

TEST_CASE("repeat_runs with workers matches the serial result") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(6, 4, 47));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 8;
    const auto serial = expt::repeat_runs(cfg, data, 3, 1);
    const auto parallel = expt::repeat_runs(cfg, data, 3, 3);
    REQUIRE(serial.runs.size() == parallel.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
        CHECK(serial.runs[i].test[0].micro.f1 == parallel.runs[i].test[0].micro.f1);
        CHECK(serial.runs[i].train_loss_trace == parallel.runs[i].train_loss_trace);
    }
}

TEST_CASE("feature masks parse and reject unknown names") {
    const auto m = expt::make_mask("component-basis-only", "flow-only");
    CHECK(m.node_fields == std::set<NodeField>{NodeField::ComponentBasis});
    CHECK(m.edge_mode == EdgeMode::FlowOnly);
    CHECK(expt::make_mask("none", "none").node_fields.empty());
    CHECK_THROWS_AS(expt::make_mask("bogus", "all"), ConfigError);
    CHECK_THROWS_AS(expt::make_mask("all", "bogus"), ConfigError);
    CHECK_THROWS_AS(expt::make_mask("all", "material-flow+assembly"), ConfigError);
    const auto mf = expt::make_mask("all", "material-flow+assembly", {"solid"});
    CHECK(mf.edge_mode == EdgeMode::MaterialFlowAssembly);
}

TEST_CASE("ablate runs each mask cell and shrinks feature dims") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 4, 48));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 5;
    const auto cells = expt::ablate(cfg, data,
                                    {{"component-basis-only", "all"}, {"none", "none"}}, 1);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].node_mask == "component-basis-only");
    CHECK(cells[0].summary.completed == 1);
    CHECK(cells[1].summary.completed == 1);
}

TEST_CASE("baseline features: isolated node and identity edge mask") {
    num::Rng rng(49);
    EncodedGraph g;
    g.graph_id = "iso";
    g.node_features = num::Tensor::uniform(rng, 2, 3, -1.0, 1.0);
    g.edge_features = num::Tensor::zeros(0, 2);
    g.labels_t1 = {0, 0};
    g.labels_t2 = {0, 0};
    g.labels_t3 = {0, 0};

    num::LinearLayer node_proj(3, 4, rng);
    num::LinearLayer edge_proj(2, 4, rng);

    // Isolated nodes: z = P_n x.
    const auto z0 = hier::baseline_features(g, node_proj, edge_proj);
    const auto direct = node_proj.forward(g.node_features);
    CHECK(z0.data() == direct.data());

    // One neighbor whose projected edge feature is all ones: z_v picks up P_n x_u.
    EncodedGraph g1 = g;
    g1.edge_index = {{0, 1}};
    g1.edge_features = num::Tensor::zeros(1, 2);
    std::fill(edge_proj.W.raw().begin(), edge_proj.W.raw().end(), 0.0);
    std::fill(edge_proj.b.raw().begin(), edge_proj.b.raw().end(), 1.0);
    const auto z1 = hier::baseline_features(g1, node_proj, edge_proj);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(z1.at(1, j) == doctest::Approx(direct.at(1, j) + direct.at(0, j)));
        CHECK(z1.at(0, j) == doctest::Approx(direct.at(0, j)));
    }
}

TEST_CASE("baseline encoders train through the hierarchical wiring") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 6, 50));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 200;
    cfg.train.patience = 200;
    cfg.train.batch_size = 2;
    for (auto& tier : cfg.model.tiers) {
        tier.encoder_type = "baseline";
        tier.baseline_dim = 16;
        tier.head_hidden = {}; // linear head
    }
    expt::TrainedModel trained;
    const auto result = expt::train_one(cfg, data, &trained);
    const auto f1 = train_micro_f1(cfg, data, trained, result);
    CHECK(f1[0] > 0.8); // separable by node features alone
}

TEST_CASE("hyper_sweep returns the single point of a degenerate grid") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(10, 4, 51));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 5;
    const auto sweep = expt::hyper_sweep(cfg, data, {gnn::LayerKind::Sage}, {1}, {16});
    REQUIRE(sweep.grid.size() == 1);
    CHECK(sweep.grid[0].layers == 1);
    CHECK(sweep.grid[0].dim == 16);
    const auto& winners = sweep.winners.at("sage");
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(winners[k].layers == 1);
        CHECK(winners[k].dim == 16);
    }
    CHECK_THROWS_AS(expt::hyper_sweep(cfg, data, {}, {1}, {16}), ConfigError);
}

TEST_CASE("csv emitters produce fixed headers") {
    const auto data = expt::Dataset::prepare(fixtures::separable_corpus(5, 4, 52));
    expt::RunConfig cfg = fixture_config();
    cfg.train.max_epochs = 3;
    const auto rr = expt::repeat_runs(cfg, data, 1);
    const auto summary = expt::summarize_runs(rr, data.tier_classes());
    const auto csv = expt::metrics_csv({{"hier-sage", summary}});
    CHECK(csv.rfind("method,tier,averaging,", 0) == 0);
    CHECK(csv.find("hier-sage,1,micro,") != std::string::npos);
    CHECK(csv.find("hier-sage,3,weighted,") != std::string::npos);

    const auto conf_csv = expt::confusion_csv(summary.confusion[0], data.vocab.label_t1);
    CHECK(conf_csv.rfind("truth,pred,count,row_normalized", 0) == 0);

    const auto report = graph_stats(data.graphs);
    const auto scsv = expt::stats_csv(report);
    CHECK(scsv.find("total_graphs,5.000000") != std::string::npos);
}
