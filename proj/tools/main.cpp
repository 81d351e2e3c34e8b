// funcgraph: command-line front end for ingesting taxonomy-based design
// repository exports as assembly-flow graphs and training hierarchical
// GNN function classifiers on them.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "funcgraph/checkpoint.hpp"
#include "funcgraph/config.hpp"
#include "funcgraph/experiment.hpp"
#include "funcgraph/io.hpp"

namespace fs = std::filesystem;
using namespace funcgraph;
using nlohmann::json;

namespace {

struct Overrides {
    std::string config_path;
    std::string dataset;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = 0;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "JSON config file");
    cmd->add_option("--data", ov.dataset, "dataset path (CSV export, graphs.jsonl or ingest dir)");
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--seed", ov.seed, "run seed (overrides config)");
    cmd->add_option("--workers", ov.workers, "parallel runs (overrides config)");
}

AppConfig resolve(const Overrides& ov) {
    AppConfig cfg = ov.config_path.empty() ? default_config() : load_config_file(ov.config_path);
    if (!ov.dataset.empty()) cfg.dataset = ov.dataset;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.seed >= 0) cfg.seed = std::uint64_t(ov.seed);
    if (ov.workers > 0) cfg.workers = ov.workers;

    // FUNCGRAPH_OUT provides the root for relative output directories.
    const char* root = std::getenv("FUNCGRAPH_OUT");
    if (root && *root && fs::path(cfg.out_dir).is_relative()) {
        cfg.out_dir = (fs::path(root) / cfg.out_dir).string();
    }
    return cfg;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void print_stats(const StatsReport& report) {
    std::printf("%-10s %10s %10s %8s %9s %8s %8s %8s %7s %7s\n", "metric", "mean", "std", "min",
                "max", "q25", "q50", "q75", "skew", "kurt");
    auto row = [](const char* name, const SummaryStats& s) {
        std::printf("%-10s %10.2f %10.2f %8.2f %9.2f %8.2f %8.2f %8.2f %7.2f %7.2f\n", name,
                    s.mean, s.stddev, s.min, s.max, s.q25, s.q50, s.q75, s.skewness, s.kurtosis);
    };
    row("nodes", report.nodes);
    row("edges", report.edges);
    row("density", report.density);
    row("degree", report.degree);
    std::printf("%zu graphs, %zu nodes, %zu edges (%.2f%% assembly, %.2f%% flow)\n",
                report.per_graph.size(), report.total_nodes, report.total_edges,
                report.assembly_fraction * 100.0, report.flow_fraction * 100.0);
}

void write_runlog(const std::string& path,
                  const std::vector<std::pair<std::string, const expt::RepeatResult*>>& methods) {
    std::ostringstream log;
    for (const auto& [name, rr] : methods) {
        for (std::size_t i = 0; i < rr->runs.size(); ++i) {
            const auto& run = rr->runs[i];
            json line;
            line["method"] = name;
            line["run"] = i;
            line["best_epoch"] = run.best_epoch;
            line["stopped_epoch"] = run.stopped_epoch;
            line["best_val_loss"] = run.best_val_loss;
            line["test_micro_f1"] = {run.test[0].micro.f1, run.test[1].micro.f1,
                                     run.test[2].micro.f1};
            log << line.dump() << '\n';
        }
        for (const auto& [idx, what] : rr->failures) {
            json line;
            line["method"] = name;
            line["run"] = idx;
            line["failed"] = what;
            log << line.dump() << '\n';
        }
    }
    write_file_atomic(path, log.str());
}

void write_confusions(const std::string& out_dir, const expt::MethodSummary& summary,
                      const Vocabularies& vocab) {
    const Vocabulary* labels[3] = {&vocab.label_t1, &vocab.label_t2, &vocab.label_t3};
    for (std::size_t k = 0; k < 3; ++k) {
        write_file_atomic((fs::path(out_dir) / ("confusion_t" + std::to_string(k + 1) + ".csv"))
                              .string(),
                          expt::confusion_csv(summary.confusion[k], *labels[k]));
    }
}

int cmd_ingest(const std::string& csv, const std::string& out_dir_raw) {
    std::string out_dir = out_dir_raw;
    const char* root = std::getenv("FUNCGRAPH_OUT");
    if (root && *root && fs::path(out_dir).is_relative()) {
        out_dir = (fs::path(root) / out_dir).string();
    }
    fs::create_directories(out_dir);

    const auto rows = parse_rows_file(csv);
    BuildOptions opts;
    opts.drop_incomplete = true;
    auto built = build_graphs(rows, opts);
    if (built.graphs.empty()) throw SystemRejected("no system in '" + csv + "' has function data");

    const auto vocab = build_vocabularies(built.graphs);
    const auto report = graph_stats(built.graphs);

    save_corpus((fs::path(out_dir) / "graphs.jsonl").string(), built.graphs);
    save_vocabularies((fs::path(out_dir) / "vocab.json").string(), vocab);
    write_file_atomic((fs::path(out_dir) / "stats.csv").string(), expt::stats_csv(report));

    std::printf("ingested %zu rows -> %zu graphs, %zu nodes\n", rows.size(), built.graphs.size(),
                report.total_nodes);
    if (built.rejected_systems.empty()) {
        std::printf("rejected systems: none\n");
    } else {
        std::printf("rejected systems (%zu, no tier-1 function data):",
                    built.rejected_systems.size());
        for (const auto& name : built.rejected_systems) std::printf(" %s", name.c_str());
        std::printf("\n");
    }
    std::printf("vocabulary sizes: component=%zu system=%zu type=%zu material=%zu flow=%zu "
                "labels=%zu/%zu/%zu (d_x=%zu, d_e=%zu)\n",
                vocab.component_basis.size(), vocab.system_name.size(), vocab.system_type.size(),
                vocab.material.size(), vocab.flow.size(), vocab.label_t1.size(),
                vocab.label_t2.size(), vocab.label_t3.size(), vocab.node_dim(), vocab.edge_dim());
    print_stats(report);
    std::printf("wrote %s/{graphs.jsonl, vocab.json, stats.csv}\n", out_dir.c_str());
    return 0;
}

int cmd_stats(const std::string& data, const std::string& out_file) {
    const auto dataset = load_dataset(data);
    const auto report = graph_stats(dataset.graphs);
    print_stats(report);
    if (!out_file.empty()) {
        write_file_atomic(out_file, expt::stats_csv(report));
        std::printf("wrote %s\n", out_file.c_str());
    }
    return 0;
}

int cmd_train(const AppConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("train: no dataset configured");
    fs::create_directories(cfg.out_dir);
    const auto data = load_dataset(cfg.dataset);
    const auto run_cfg = cfg.run_config();

    for (std::size_t k = 0; k < 3; ++k) {
        const auto& tier = run_cfg.model.tiers[k];
        if (tier.encoder_type == "gnn") {
            std::printf("tier %zu encoder: %s, %zu layers, %zu dim\n", k + 1,
                        gnn::to_string(tier.encoder.kind).c_str(), tier.encoder.num_layers,
                        tier.encoder.hidden_dim);
        } else {
            std::printf("tier %zu encoder: baseline projection, %zu dim\n", k + 1,
                        tier.baseline_dim);
        }
    }

    expt::TrainedModel trained;
    const auto result = expt::train_one(run_cfg, data, &trained);

    CheckpointMeta meta;
    meta.vocab_hash = data.vocab.hash();
    meta.d_x = masked_node_dim(data.vocab, run_cfg.mask);
    meta.d_e = masked_edge_dim(data.vocab, run_cfg.mask);
    meta.node_mask = cfg.node_mask;
    meta.edge_mask = cfg.edge_mask;
    meta.material_flow_terms.assign(cfg.material_flow_terms.begin(),
                                    cfg.material_flow_terms.end());
    save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), *trained.model,
                    trained.optimizer, meta);
    save_vocabularies((fs::path(cfg.out_dir) / "vocab.json").string(), data.vocab);

    std::ostringstream log;
    for (std::size_t e = 0; e < result.lr_trace.size(); ++e) {
        json line;
        line["epoch"] = e;
        line["lr"] = result.lr_trace[e];
        line["train_loss"] = result.train_loss_trace[e];
        line["val_loss"] = result.val_loss_trace[e];
        log << line.dump() << '\n';
    }
    write_file_atomic((fs::path(cfg.out_dir) / "runlog.jsonl").string(), log.str());

    expt::RepeatResult single;
    single.requested = 1;
    single.runs.push_back(result);
    const auto summary = expt::summarize_runs(single, data.tier_classes());
    const std::string method = cfg.model.hierarchical ? "hierarchical" : "independent";
    write_file_atomic((fs::path(cfg.out_dir) / "metrics.csv").string(),
                      expt::metrics_csv({{method, summary}}));
    write_confusions(cfg.out_dir, summary, data.vocab);

    std::printf("best epoch %ld (stopped %ld), best val loss %s\n", result.best_epoch,
                result.stopped_epoch, fmt(result.best_val_loss).c_str());
    for (std::size_t k = 0; k < 3; ++k) {
        std::printf("tier %zu test micro-F1 %s macro-F1 %s weighted-F1 %s\n", k + 1,
                    fmt(result.test[k].micro.f1).c_str(), fmt(result.test[k].macro.f1).c_str(),
                    fmt(result.test[k].weighted.f1).c_str());
    }
    std::printf("wrote %s/{checkpoint.json, vocab.json, runlog.jsonl, metrics.csv, "
                "confusion_t*.csv}\n",
                cfg.out_dir.c_str());
    return 0;
}

int cmd_experiment(const AppConfig& cfg, bool ablation_only) {
    if (cfg.dataset.empty()) throw ConfigError("experiment: no dataset configured");
    fs::create_directories(cfg.out_dir);
    const auto data = load_dataset(cfg.dataset);
    const auto n_classes = data.tier_classes();
    const auto base = cfg.run_config();

    std::vector<std::pair<std::string, expt::MethodSummary>> summaries;
    std::vector<std::pair<std::string, const expt::RepeatResult*>> logs;
    std::vector<std::unique_ptr<expt::RepeatResult>> owned;

    if (!ablation_only) {
        std::vector<std::string> methods = {"hierarchical"};
        if (cfg.compare_independent) methods.push_back("independent");
        for (const auto& b : cfg.baselines) methods.push_back("baseline-" + b);

        for (const auto& method : methods) {
            expt::RunConfig run_cfg = base;
            run_cfg.model = method_model(cfg, method);
            auto rr = std::make_unique<expt::RepeatResult>(
                expt::repeat_runs(run_cfg, data, cfg.n_runs, cfg.workers));
            const auto summary = expt::summarize_runs(*rr, n_classes);
            std::printf("%-16s runs=%d failed=%d micro-F1:", method.c_str(), summary.completed,
                        summary.failed);
            for (std::size_t k = 0; k < 3; ++k) {
                std::printf(" t%zu=%s+-%s", k + 1, fmt(summary.f1[k][0].mean).c_str(),
                            fmt(summary.f1[k][0].stddev).c_str());
            }
            std::printf("\n");
            summaries.emplace_back(method, summary);
            logs.emplace_back(method, rr.get());
            owned.push_back(std::move(rr));
        }

        write_file_atomic((fs::path(cfg.out_dir) / "metrics.csv").string(),
                          expt::metrics_csv(summaries));
        write_file_atomic((fs::path(cfg.out_dir) / "topk.csv").string(),
                          expt::topk_csv(summaries, cfg.top_k));
        write_confusions(cfg.out_dir, summaries.front().second, data.vocab);
        if (summaries.size() > 1 && summaries[1].first == "independent") {
            write_file_atomic((fs::path(cfg.out_dir) / "hierarchy.csv").string(),
                              expt::hierarchy_csv(summaries[0].second, summaries[1].second));
        }
        write_runlog((fs::path(cfg.out_dir) / "runlog.jsonl").string(), logs);
    }

    if (!ablation_only && !cfg.sweep_kinds.empty()) {
        std::vector<gnn::LayerKind> kinds;
        for (const auto& k : cfg.sweep_kinds) kinds.push_back(gnn::layer_kind_from_string(k));
        const auto sweep = expt::hyper_sweep(base, data, kinds, cfg.sweep_layers, cfg.sweep_dims);
        write_file_atomic((fs::path(cfg.out_dir) / "sweep.csv").string(), expt::sweep_csv(sweep));
        for (const auto& [kind, best] : sweep.winners) {
            std::printf("sweep winner %s:", kind.c_str());
            for (std::size_t k = 0; k < 3; ++k) {
                std::printf(" t%zu=(%zu layers, %zu dim)", k + 1, best[k].layers, best[k].dim);
            }
            std::printf("\n");
        }
    }

    if (!cfg.ablations.empty()) {
        const int runs = cfg.ablation_runs > 0 ? cfg.ablation_runs : cfg.n_runs;
        const auto cells = expt::ablate(base, data, cfg.ablations, runs, cfg.workers);
        write_file_atomic((fs::path(cfg.out_dir) / "ablation.csv").string(),
                          expt::ablation_csv(cells));
        for (const auto& cell : cells) {
            std::printf("ablation %-24s x %-24s micro-F1:", cell.node_mask.c_str(),
                        cell.edge_mask.c_str());
            for (std::size_t k = 0; k < 3; ++k) {
                std::printf(" t%zu=%s", k + 1, fmt(cell.summary.f1[k][0].mean).c_str());
            }
            std::printf("\n");
        }
    } else if (ablation_only) {
        throw ConfigError("ablate: config lists no experiment.ablations");
    }

    std::printf("wrote outputs under %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& graph_path,
                const std::string& vocab_path, std::size_t k, const std::string& out_file) {
    auto loaded = load_checkpoint(checkpoint_path);
    std::string vp = vocab_path;
    if (vp.empty()) vp = (fs::path(checkpoint_path).parent_path() / "vocab.json").string();
    const auto vocab = load_vocabularies(vp);
    if (vocab.hash() != loaded.meta.vocab_hash) {
        throw VocabHashError("vocabulary hash mismatch: checkpoint was trained on a different "
                             "encoding than '" + vp + "'");
    }

    std::set<std::string> terms(loaded.meta.material_flow_terms.begin(),
                                loaded.meta.material_flow_terms.end());
    const auto mask = expt::make_mask(loaded.meta.node_mask, loaded.meta.edge_mask, terms);

    // One JSON document per line; a single-document file works as well.
    std::istringstream lines(read_file(graph_path));
    std::string line;
    std::ostringstream out;
    const Vocabulary* labels[3] = {&vocab.label_t1, &vocab.label_t2, &vocab.label_t3};
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const auto graph = graph_from_json(line);
        const auto encoded = encode_graph(graph, vocab, mask);
        const auto topo = gnn::GraphTopology::build(encoded);
        const auto preds = loaded.model->forward_infer(encoded, topo);
        for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
            for (std::size_t tier = 0; tier < 3; ++tier) {
                const std::size_t C = preds[tier].probs.cols();
                std::vector<std::size_t> order(C);
                for (std::size_t c = 0; c < C; ++c) order[c] = c;
                const double* p = preds[tier].probs.data().data() + i * C;
                std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    if (p[a] != p[b]) return p[a] > p[b];
                    return a < b;
                });
                json rec;
                rec["graph_id"] = graph.graph_id;
                rec["node_id"] = graph.nodes[i].node_id;
                rec["tier"] = tier + 1;
                json topk = json::array();
                for (std::size_t c = 0; c < std::min(k, C); ++c) {
                    topk.push_back(json{{"label", labels[tier]->terms[order[c]]},
                                        {"probability", p[order[c]]}});
                }
                rec["predictions"] = topk;
                out << rec.dump() << '\n';
            }
        }
    }
    if (out_file.empty()) {
        std::fputs(out.str().c_str(), stdout);
    } else {
        write_file_atomic(out_file, out.str());
        std::printf("wrote %s\n", out_file.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"function classification over assembly-flow graphs"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "parse a repository export CSV into graphs");
    std::string ingest_csv, ingest_out = "out";
    ingest->add_option("--csv", ingest_csv, "export CSV path")->required();
    ingest->add_option("--out", ingest_out, "output directory");

    auto* stats = app.add_subcommand("stats", "corpus statistics of a dataset");
    std::string stats_data, stats_out;
    stats->add_option("--data", stats_data, "dataset path")->required();
    stats->add_option("--out", stats_out, "also write stats CSV here");

    Overrides train_ov, exp_ov, abl_ov;
    auto* train = app.add_subcommand("train", "train one model and write a checkpoint");
    add_common(train, train_ov);
    auto* experiment =
        app.add_subcommand("experiment", "repeated-split protocol with comparisons");
    add_common(experiment, exp_ov);
    auto* ablate = app.add_subcommand("ablate", "feature-importance ablations only");
    add_common(ablate, abl_ov);

    auto* predict = app.add_subcommand("predict", "per-node top-k labels from a checkpoint");
    std::string pr_checkpoint, pr_graph, pr_vocab, pr_out;
    std::size_t pr_k = 3;
    predict->add_option("--checkpoint", pr_checkpoint, "checkpoint.json path")->required();
    predict->add_option("--graph", pr_graph, "graph JSON / JSONL file")->required();
    predict->add_option("--vocab", pr_vocab, "vocab.json path (default: next to checkpoint)");
    predict->add_option("-k,--top-k", pr_k, "ranked labels per node and tier");
    predict->add_option("--out", pr_out, "write JSONL here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_csv, ingest_out);
        if (stats->parsed()) return cmd_stats(stats_data, stats_out);
        if (train->parsed()) return cmd_train(resolve(train_ov));
        if (experiment->parsed()) return cmd_experiment(resolve(exp_ov), false);
        if (ablate->parsed()) return cmd_experiment(resolve(abl_ov), true);
        if (predict->parsed()) return cmd_predict(pr_checkpoint, pr_graph, pr_vocab, pr_k, pr_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
