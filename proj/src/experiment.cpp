#include "funcgraph/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace funcgraph::expt {

using num::Tensor;

Dataset Dataset::prepare(std::vector<RelationalGraph> graphs) {
    Dataset d;
    d.vocab = build_vocabularies(graphs);
    d.graphs = std::move(graphs);
    return d;
}

std::array<std::size_t, 3> Dataset::tier_classes() const {
    return {vocab.label_t1.size(), vocab.label_t2.size(), vocab.label_t3.size()};
}

ParamSnapshot snapshot_params(const std::vector<Tensor>& params) {
    ParamSnapshot snap;
    snap.reserve(params.size());
    for (const auto& p : params) snap.push_back(p.data());
    return snap;
}

void restore_params(std::vector<Tensor>& params, const ParamSnapshot& snap) {
    if (snap.size() != params.size()) throw ShapeError("restore_params: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (snap[i].size() != params[i].size()) {
            throw ShapeError("restore_params: parameter shape mismatch");
        }
        params[i].raw() = snap[i];
    }
}

namespace {

std::array<std::vector<double>, 3> train_class_weights(
    const std::vector<EncodedGraph>& encoded, const std::vector<std::size_t>& train_idx,
    const std::array<std::size_t, 3>& n_classes) {
    std::array<std::vector<long>, 3> counts;
    for (std::size_t k = 0; k < 3; ++k) counts[k].assign(n_classes[k], 0);
    for (std::size_t gi : train_idx) {
        const auto& g = encoded[gi];
        for (int y : g.labels_t1) ++counts[0][std::size_t(y)];
        for (int y : g.labels_t2) ++counts[1][std::size_t(y)];
        for (int y : g.labels_t3) ++counts[2][std::size_t(y)];
    }
    return {num::class_weights(counts[0]), num::class_weights(counts[1]),
            num::class_weights(counts[2])};
}

double dataset_loss(const hier::HierModel& model, const std::vector<EncodedGraph>& encoded,
                    const std::vector<gnn::GraphTopology>& topos,
                    const std::vector<std::size_t>& idx,
                    const std::array<std::vector<double>, 3>& weights) {
    double total = 0.0;
    for (std::size_t gi : idx) {
        total += model.forward_train(encoded[gi], topos[gi], weights, nullptr).loss.item();
    }
    return total / double(idx.size());
}

const std::vector<int>& tier_truth(const EncodedGraph& g, std::size_t k) {
    switch (k) {
        case 0: return g.labels_t1;
        case 1: return g.labels_t2;
        default: return g.labels_t3;
    }
}

} // namespace

EvalOutput evaluate(const hier::HierModel& model, const std::vector<EncodedGraph>& graphs,
                    const std::vector<gnn::GraphTopology>& topos,
                    const std::vector<std::size_t>& graph_indices, std::size_t top_k) {
    const auto n_classes = model.n_classes();
    std::array<std::vector<int>, 3> y_true, y_pred;
    std::array<std::vector<double>, 3> prob_rows;

    for (std::size_t gi : graph_indices) {
        const auto preds = model.forward_infer(graphs[gi], topos[gi]);
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& truth = tier_truth(graphs[gi], k);
            y_true[k].insert(y_true[k].end(), truth.begin(), truth.end());
            y_pred[k].insert(y_pred[k].end(), preds[k].predicted.begin(),
                             preds[k].predicted.end());
            const auto& pd = preds[k].probs.data();
            prob_rows[k].insert(prob_rows[k].end(), pd.begin(), pd.end());
        }
    }

    EvalOutput out;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t C = n_classes[k];
        TierMetrics tm;
        tm.micro = metrics(y_true[k], y_pred[k], C, Averaging::Micro);
        tm.macro = metrics(y_true[k], y_pred[k], C, Averaging::Macro);
        tm.weighted = metrics(y_true[k], y_pred[k], C, Averaging::Weighted);
        out.confusion[k] = confusion(y_true[k], y_pred[k], C);

        // Single-label sanity: micro P = R = F1 = accuracy, always.
        const double acc = out.confusion[k].accuracy();
        if (std::abs(tm.micro.precision - acc) > 1e-12 || std::abs(tm.micro.recall - acc) > 1e-12 ||
            std::abs(tm.micro.f1 - acc) > 1e-12) {
            throw NumericError("evaluate: micro average diverged from accuracy");
        }

        Tensor probs = Tensor::from_data(y_true[k].size(), C, std::move(prob_rows[k]));
        tm.top1 = hier::top_k_rate(probs, y_true[k], 1);
        tm.topk = hier::top_k_rate(probs, y_true[k], std::min(top_k, C));
        out.tiers[k] = tm;
    }
    return out;
}

RunResult train_one(const RunConfig& config, const Dataset& data, TrainedModel* trained_out) {
    const auto n_classes = data.tier_classes();

    // Feature space is fixed on the full corpus; the split only gates which
    // graphs contribute gradients, weights and scores.
    std::vector<EncodedGraph> encoded;
    std::vector<gnn::GraphTopology> topos;
    encoded.reserve(data.graphs.size());
    std::unordered_map<std::string, std::size_t> index_of;
    for (const auto& g : data.graphs) {
        EncodedGraph e = encode_graph(g, data.vocab, config.mask);
        topos.push_back(gnn::GraphTopology::build(e));
        index_of[g.graph_id] = encoded.size();
        encoded.push_back(std::move(e));
    }

    RunResult result;
    result.split = split_graphs(data.graphs, config.seed, config.split_fractions);
    auto to_indices = [&](const std::vector<std::string>& ids) {
        std::vector<std::size_t> out;
        out.reserve(ids.size());
        for (const auto& id : ids) out.push_back(index_of.at(id));
        return out;
    };
    const auto train_idx = to_indices(result.split.train);
    const auto val_idx = to_indices(result.split.val);
    const auto test_idx = to_indices(result.split.test);
    if (train_idx.empty()) throw SplitError("train_one: empty train split");

    const auto weights = train_class_weights(encoded, train_idx, n_classes);
    // The early-stopping monitor uses unit class weights: on small
    // validation splits the frequency weights let one or two rare-class
    // nodes dominate the monitored loss and mask real progress.
    const std::array<std::vector<double>, 3> unit_weights = {
        std::vector<double>(n_classes[0], 1.0), std::vector<double>(n_classes[1], 1.0),
        std::vector<double>(n_classes[2], 1.0)};

    num::Rng root(config.seed);
    num::Rng init_rng = root.fork("init");
    num::Rng dropout_rng = root.fork("dropout");
    num::Rng shuffle_rng = root.fork("shuffle");

    const std::size_t d_x = masked_node_dim(data.vocab, config.mask);
    const std::size_t d_e = masked_edge_dim(data.vocab, config.mask);
    auto model = std::make_unique<hier::HierModel>(config.model, d_x, d_e, n_classes, init_rng);
    auto params = model->params();
    num::AdamState adam;
    adam.init(params);
    num::CosineSchedule schedule{config.train.lr_max, config.train.lr_min,
                                 config.train.max_epochs};

    // Early stopping monitors validation loss (train loss when the split
    // leaves no validation graphs, as in tiny fixtures).
    double best_monitored = std::numeric_limits<double>::infinity();
    long bad_epochs = 0;
    ParamSnapshot best_snapshot = snapshot_params(params);
    std::vector<std::size_t> order = train_idx;

    for (long epoch = 0; epoch < config.train.max_epochs; ++epoch) {
        const double lr = schedule.at(epoch);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += config.train.batch_size) {
                const std::size_t end = std::min(order.size(), start + config.train.batch_size);
                std::vector<const EncodedGraph*> batch;
                std::vector<const gnn::GraphTopology*> batch_topos;
                for (std::size_t i = start; i < end; ++i) {
                    batch.push_back(&encoded[order[i]]);
                    batch_topos.push_back(&topos[order[i]]);
                }
                Tensor loss = model->batch_loss(batch, batch_topos, weights, &dropout_rng);
                loss.backward();
                num::adam_step(params, adam, lr);
                epoch_loss += loss.item() * double(end - start);
            }
            epoch_loss /= double(order.size());
        } catch (const NumericError& e) {
            throw DivergedError(std::string("run diverged at epoch ") + std::to_string(epoch) +
                                ": " + e.what());
        }

        const double monitored = val_idx.empty()
                                     ? epoch_loss
                                     : dataset_loss(*model, encoded, topos, val_idx, unit_weights);
        result.lr_trace.push_back(lr);
        result.train_loss_trace.push_back(epoch_loss);
        result.val_loss_trace.push_back(monitored);

        if (monitored < best_monitored) {
            best_monitored = monitored;
            best_snapshot = snapshot_params(params);
            result.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
        }
        result.stopped_epoch = epoch;
        if (bad_epochs >= config.train.patience) break;
    }

    restore_params(params, best_snapshot);
    result.best_val_loss = best_monitored;

    if (!test_idx.empty()) {
        EvalOutput ev = evaluate(*model, encoded, topos, test_idx, config.top_k);
        result.test = ev.tiers;
        result.confusion = ev.confusion;
    } else {
        for (std::size_t k = 0; k < 3; ++k) result.confusion[k] = ConfusionMatrix(n_classes[k]);
    }

    if (trained_out) {
        trained_out->model = std::move(model);
        trained_out->class_weights = weights;
        trained_out->optimizer = std::move(adam);
    }
    return result;
}

RepeatResult repeat_runs(const RunConfig& base, const Dataset& data, int n_runs, int workers) {
    if (n_runs < 1) throw ConfigError("repeat_runs: n_runs must be >= 1");
    RepeatResult result;
    result.requested = n_runs;

    std::vector<std::optional<RunResult>> slots;
    slots.resize(std::size_t(n_runs));
    std::vector<std::pair<int, std::string>> failures;
    std::mutex failures_mutex;
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_runs) return;
            RunConfig cfg = base;
            cfg.seed = base.seed + std::uint64_t(i);
            try {
                slots[std::size_t(i)] = train_one(cfg, data);
            } catch (const DivergedError& e) {
                std::lock_guard<std::mutex> lock(failures_mutex);
                failures.emplace_back(i, e.what());
            }
        }
    };

    const int n_workers = std::max(1, std::min(workers, n_runs));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& slot : slots) {
        if (slot) result.runs.push_back(std::move(*slot));
    }
    std::sort(failures.begin(), failures.end());
    result.failures = std::move(failures);
    return result;
}

MethodSummary summarize_runs(const RepeatResult& result,
                             const std::array<std::size_t, 3>& n_classes) {
    MethodSummary s;
    s.completed = int(result.runs.size());
    s.failed = int(result.failures.size());
    for (std::size_t k = 0; k < 3; ++k) s.confusion[k] = ConfusionMatrix(n_classes[k]);

    auto collect = [&](auto getter) {
        std::vector<double> v;
        v.reserve(result.runs.size());
        for (const auto& run : result.runs) v.push_back(getter(run));
        return mean_std(v);
    };

    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t a = 0; a < 3; ++a) {
            auto pick = [k, a](const RunResult& r) -> const Prf& {
                const TierMetrics& tm = r.test[k];
                return a == 0 ? tm.micro : a == 1 ? tm.macro : tm.weighted;
            };
            s.precision[k][a] = collect([&](const RunResult& r) { return pick(r).precision; });
            s.recall[k][a] = collect([&](const RunResult& r) { return pick(r).recall; });
            s.f1[k][a] = collect([&](const RunResult& r) { return pick(r).f1; });
        }
        s.top1[k] = collect([&](const RunResult& r) { return r.test[k].top1; });
        s.topk[k] = collect([&](const RunResult& r) { return r.test[k].topk; });
        for (const auto& run : result.runs) {
            if (run.confusion[k].n_classes == n_classes[k]) s.confusion[k].merge(run.confusion[k]);
        }
    }
    return s;
}

FeatureMask make_mask(const std::string& node_mask, const std::string& edge_mask,
                      const std::set<std::string>& material_flow_terms) {
    FeatureMask mask;
    if (node_mask == "all") {
        mask.node_fields = {NodeField::ComponentBasis, NodeField::SystemName,
                            NodeField::SystemType, NodeField::Material};
    } else if (node_mask == "none") {
        mask.node_fields = {};
    } else if (node_mask == "component-basis-only") {
        mask.node_fields = {NodeField::ComponentBasis};
    } else if (node_mask == "sys-name-only") {
        mask.node_fields = {NodeField::SystemName};
    } else if (node_mask == "sys-type-only") {
        mask.node_fields = {NodeField::SystemType};
    } else if (node_mask == "material-only") {
        mask.node_fields = {NodeField::Material};
    } else {
        throw ConfigError("unknown node mask '" + node_mask + "'");
    }

    if (edge_mask == "all") {
        mask.edge_mode = EdgeMode::All;
    } else if (edge_mask == "flow-only") {
        mask.edge_mode = EdgeMode::FlowOnly;
    } else if (edge_mask == "assembly-only") {
        mask.edge_mode = EdgeMode::AssemblyOnly;
    } else if (edge_mask == "featureless-edges" || edge_mask == "none") {
        mask.edge_mode = EdgeMode::Featureless;
    } else if (edge_mask == "material-flow+assembly") {
        if (material_flow_terms.empty()) {
            throw ConfigError("edge mask 'material-flow+assembly' needs material flow terms");
        }
        mask.edge_mode = EdgeMode::MaterialFlowAssembly;
        mask.material_flow_terms = material_flow_terms;
    } else {
        throw ConfigError("unknown edge mask '" + edge_mask + "'");
    }
    return mask;
}

std::vector<AblationCell> ablate(const RunConfig& base, const Dataset& data,
                                 const std::vector<std::pair<std::string, std::string>>& masks,
                                 int n_runs, int workers) {
    std::vector<AblationCell> cells;
    for (const auto& [node_mask, edge_mask] : masks) {
        RunConfig cfg = base;
        cfg.mask = make_mask(node_mask, edge_mask, base.mask.material_flow_terms);
        AblationCell cell;
        cell.node_mask = node_mask;
        cell.edge_mask = edge_mask;
        cell.summary = summarize_runs(repeat_runs(cfg, data, n_runs, workers),
                                      data.tier_classes());
        cells.push_back(std::move(cell));
    }
    return cells;
}

SweepResult hyper_sweep(const RunConfig& base, const Dataset& data,
                        const std::vector<gnn::LayerKind>& kinds,
                        const std::vector<std::size_t>& layer_counts,
                        const std::vector<std::size_t>& dims) {
    if (kinds.empty() || layer_counts.empty() || dims.empty()) {
        throw ConfigError("hyper_sweep: empty grid");
    }
    SweepResult result;
    for (gnn::LayerKind kind : kinds) {
        for (std::size_t layers : layer_counts) {
            for (std::size_t dim : dims) {
                RunConfig cfg = base;
                for (auto& tier : cfg.model.tiers) {
                    tier.encoder_type = "gnn";
                    tier.encoder.kind = kind;
                    tier.encoder.num_layers = layers;
                    tier.encoder.hidden_dim = dim;
                    tier.head_hidden = {dim};
                }

                // Selection criterion is validation micro-F1.
                TrainedModel trained;
                RunResult run = train_one(cfg, data, &trained);
                SweepPoint point;
                point.kind = kind;
                point.layers = layers;
                point.dim = dim;
                if (!run.split.val.empty()) {
                    std::vector<EncodedGraph> encoded;
                    std::vector<gnn::GraphTopology> topos;
                    std::unordered_map<std::string, std::size_t> index_of;
                    for (const auto& g : data.graphs) {
                        EncodedGraph e = encode_graph(g, data.vocab, cfg.mask);
                        topos.push_back(gnn::GraphTopology::build(e));
                        index_of[g.graph_id] = encoded.size();
                        encoded.push_back(std::move(e));
                    }
                    std::vector<std::size_t> val_idx;
                    for (const auto& id : run.split.val) val_idx.push_back(index_of.at(id));
                    EvalOutput ev = evaluate(*trained.model, encoded, topos, val_idx, cfg.top_k);
                    for (std::size_t k = 0; k < 3; ++k) {
                        point.val_micro_f1[k] = ev.tiers[k].micro.f1;
                    }
                }
                result.grid.push_back(point);
            }
        }
    }

    for (gnn::LayerKind kind : kinds) {
        std::array<SweepPoint, 3> best{};
        std::array<bool, 3> seen{false, false, false};
        for (const auto& point : result.grid) {
            if (point.kind != kind) continue;
            for (std::size_t k = 0; k < 3; ++k) {
                if (!seen[k] || point.val_micro_f1[k] > best[k].val_micro_f1[k]) {
                    best[k] = point;
                    seen[k] = true;
                }
            }
        }
        result.winners[gnn::to_string(kind)] = best;
    }
    return result;
}

// --- CSV emission ------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

const char* averaging_name(std::size_t a) {
    return a == 0 ? "micro" : a == 1 ? "macro" : "weighted";
}

} // namespace

std::string metrics_csv(const std::vector<std::pair<std::string, MethodSummary>>& methods) {
    std::string out =
        "method,tier,averaging,precision_mean,precision_std,recall_mean,recall_std,"
        "f1_mean,f1_std\n";
    for (const auto& [name, s] : methods) {
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t a = 0; a < 3; ++a) {
                out += name + "," + std::to_string(k + 1) + "," + averaging_name(a) + "," +
                       fmt(s.precision[k][a].mean) + "," + fmt(s.precision[k][a].stddev) + "," +
                       fmt(s.recall[k][a].mean) + "," + fmt(s.recall[k][a].stddev) + "," +
                       fmt(s.f1[k][a].mean) + "," + fmt(s.f1[k][a].stddev) + "\n";
            }
        }
    }
    return out;
}

std::string topk_csv(const std::vector<std::pair<std::string, MethodSummary>>& methods,
                     std::size_t k) {
    std::string out = "method,tier,k,hit_rate_mean,hit_rate_std\n";
    for (const auto& [name, s] : methods) {
        for (std::size_t t = 0; t < 3; ++t) {
            out += name + "," + std::to_string(t + 1) + ",1," + fmt(s.top1[t].mean) + "," +
                   fmt(s.top1[t].stddev) + "\n";
            out += name + "," + std::to_string(t + 1) + "," + std::to_string(k) + "," +
                   fmt(s.topk[t].mean) + "," + fmt(s.topk[t].stddev) + "\n";
        }
    }
    return out;
}

std::string hierarchy_csv(const MethodSummary& hierarchical, const MethodSummary& independent) {
    std::string out =
        "tier,method,f1_micro_mean,f1_micro_std,f1_macro_mean,f1_macro_std,"
        "f1_weighted_mean,f1_weighted_std\n";
    for (std::size_t k = 0; k < 3; ++k) {
        for (const auto& [name, s] :
             {std::pair<const char*, const MethodSummary&>{"hierarchical", hierarchical},
              std::pair<const char*, const MethodSummary&>{"independent", independent}}) {
            out += std::to_string(k + 1) + "," + name + "," + fmt(s.f1[k][0].mean) + "," +
                   fmt(s.f1[k][0].stddev) + "," + fmt(s.f1[k][1].mean) + "," +
                   fmt(s.f1[k][1].stddev) + "," + fmt(s.f1[k][2].mean) + "," +
                   fmt(s.f1[k][2].stddev) + "\n";
        }
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
    std::string out =
        "node_mask,edge_mask,tier,f1_micro_mean,f1_micro_std,f1_macro_mean,f1_macro_std,"
        "f1_weighted_mean,f1_weighted_std\n";
    for (const auto& cell : cells) {
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& s = cell.summary;
            out += cell.node_mask + "," + cell.edge_mask + "," + std::to_string(k + 1) + "," +
                   fmt(s.f1[k][0].mean) + "," + fmt(s.f1[k][0].stddev) + "," +
                   fmt(s.f1[k][1].mean) + "," + fmt(s.f1[k][1].stddev) + "," +
                   fmt(s.f1[k][2].mean) + "," + fmt(s.f1[k][2].stddev) + "\n";
        }
    }
    return out;
}

std::string confusion_csv(const ConfusionMatrix& m, const Vocabulary& labels) {
    if (labels.size() != m.n_classes) throw ShapeError("confusion_csv: vocabulary size mismatch");
    const auto norm = m.row_normalized();
    std::string out = "truth,pred,count,row_normalized\n";
    for (std::size_t r = 0; r < m.n_classes; ++r) {
        for (std::size_t c = 0; c < m.n_classes; ++c) {
            out += labels.terms[r] + "," + labels.terms[c] + "," +
                   std::to_string(m.at(r, c)) + "," + fmt(norm[r * m.n_classes + c]) + "\n";
        }
    }
    return out;
}

std::string stats_csv(const StatsReport& report) {
    std::string out = "metric,mean,std,min,max,q25,q50,q75,skewness,kurtosis\n";
    auto row = [&](const char* name, const SummaryStats& s) {
        out += std::string(name) + "," + fmt(s.mean) + "," + fmt(s.stddev) + "," + fmt(s.min) +
               "," + fmt(s.max) + "," + fmt(s.q25) + "," + fmt(s.q50) + "," + fmt(s.q75) + "," +
               fmt(s.skewness) + "," + fmt(s.kurtosis) + "\n";
    };
    row("nodes", report.nodes);
    row("edges", report.edges);
    row("density", report.density);
    row("degree", report.degree);
    auto total = [&](const char* name, double v) {
        out += std::string(name) + "," + fmt(v) + ",,,,,,,,\n";
    };
    total("total_graphs", double(report.per_graph.size()));
    total("total_nodes", double(report.total_nodes));
    total("total_edges", double(report.total_edges));
    total("total_flow_edges", double(report.total_flow_edges));
    total("total_assembly_edges", double(report.total_assembly_edges));
    total("assembly_fraction", report.assembly_fraction);
    total("flow_fraction", report.flow_fraction);
    return out;
}

std::string sweep_csv(const SweepResult& sweep) {
    std::string out = "kind,layers,dim,val_micro_f1_t1,val_micro_f1_t2,val_micro_f1_t3\n";
    for (const auto& p : sweep.grid) {
        out += gnn::to_string(p.kind) + "," + std::to_string(p.layers) + "," +
               std::to_string(p.dim) + "," + fmt(p.val_micro_f1[0]) + "," +
               fmt(p.val_micro_f1[1]) + "," + fmt(p.val_micro_f1[2]) + "\n";
    }
    for (const auto& [kind, best] : sweep.winners) {
        for (std::size_t k = 0; k < 3; ++k) {
            out += "best_" + kind + "_t" + std::to_string(k + 1) + "," +
                   std::to_string(best[k].layers) + "," + std::to_string(best[k].dim) + "," +
                   fmt(best[k].val_micro_f1[0]) + "," + fmt(best[k].val_micro_f1[1]) + "," +
                   fmt(best[k].val_micro_f1[2]) + "\n";
        }
    }
    return out;
}

} // namespace funcgraph::expt
