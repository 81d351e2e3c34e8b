#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcgraph/hier.hpp"
#include "funcgraph/ingest.hpp"
#include "funcgraph/metrics.hpp"

namespace funcgraph::expt {

struct TrainSettings {
    long max_epochs = 500;
    long patience = 50;      // epochs without validation improvement
    std::size_t batch_size = 16; // graphs per optimizer step
    double lr_max = 1e-3;
    double lr_min = 1e-5;
};

struct RunConfig {
    std::uint64_t seed = 7;
    hier::ModelConfig model;
    TrainSettings train;
    std::array<double, 3> split_fractions = {0.6, 0.1, 0.3};
    FeatureMask mask = FeatureMask::all();
    std::size_t top_k = 3;
};

/// Corpus with vocabularies fixed on the full graph set, so every split
/// shares one feature space.
struct Dataset {
    std::vector<RelationalGraph> graphs;
    Vocabularies vocab;

    static Dataset prepare(std::vector<RelationalGraph> graphs);
    std::array<std::size_t, 3> tier_classes() const;
};

struct TierMetrics {
    Prf micro;
    Prf macro;
    Prf weighted;
    double top1 = 0.0;
    double topk = 0.0;
};

struct RunResult {
    std::array<TierMetrics, 3> test;
    std::array<ConfusionMatrix, 3> confusion;
    SplitAssignment split;
    long best_epoch = -1;
    long stopped_epoch = -1;
    double best_val_loss = 0.0;
    std::vector<double> lr_trace;
    std::vector<double> train_loss_trace;
    std::vector<double> val_loss_trace;
};

/// Trained parameter values by name, for checkpoints and restores.
using ParamSnapshot = std::vector<std::vector<double>>;

ParamSnapshot snapshot_params(const std::vector<num::Tensor>& params);
void restore_params(std::vector<num::Tensor>& params, const ParamSnapshot& snap);

struct TrainedModel {
    std::unique_ptr<hier::HierModel> model;
    std::array<std::vector<double>, 3> class_weights; // from the train split
    num::AdamState optimizer;
};

/// One full run: split, train with Adam + cosine schedule + early stopping
/// on validation loss, restore the best checkpoint, evaluate on test.
/// Throws DivergedError when the loss goes non-finite.
RunResult train_one(const RunConfig& config, const Dataset& data,
                    TrainedModel* trained_out = nullptr);

/// Per-tier evaluation of a frozen model over a set of graphs.
struct EvalOutput {
    std::array<TierMetrics, 3> tiers;
    std::array<ConfusionMatrix, 3> confusion;
};
EvalOutput evaluate(const hier::HierModel& model, const std::vector<EncodedGraph>& graphs,
                    const std::vector<gnn::GraphTopology>& topos,
                    const std::vector<std::size_t>& graph_indices, std::size_t top_k);

struct RepeatResult {
    std::vector<RunResult> runs; // completed, in run-index order
    std::vector<std::pair<int, std::string>> failures;
    int requested = 0;
};

/// Run i uses seed base_seed + i with a fresh split and fresh init.
/// Workers > 1 executes runs concurrently; aggregation order is fixed by
/// run index either way.
RepeatResult repeat_runs(const RunConfig& base, const Dataset& data, int n_runs,
                         int workers = 1);

struct MethodSummary {
    // [tier][averaging]
    std::array<std::array<MeanStd, 3>, 3> precision;
    std::array<std::array<MeanStd, 3>, 3> recall;
    std::array<std::array<MeanStd, 3>, 3> f1;
    std::array<MeanStd, 3> top1;
    std::array<MeanStd, 3> topk;
    std::array<ConfusionMatrix, 3> confusion; // summed over runs
    int completed = 0;
    int failed = 0;
};

MethodSummary summarize_runs(const RepeatResult& result,
                             const std::array<std::size_t, 3>& n_classes);

// --- ablations -------------------------------------------------------------

/// Node masks: component-basis-only, sys-name-only, sys-type-only,
/// material-only, none, all. Edge masks: flow-only, assembly-only,
/// featureless-edges, all, none, material-flow+assembly.
FeatureMask make_mask(const std::string& node_mask, const std::string& edge_mask,
                      const std::set<std::string>& material_flow_terms = {});

struct AblationCell {
    std::string node_mask;
    std::string edge_mask;
    MethodSummary summary;
};

std::vector<AblationCell> ablate(const RunConfig& base, const Dataset& data,
                                 const std::vector<std::pair<std::string, std::string>>& masks,
                                 int n_runs, int workers = 1);

// --- hyperparameter sweep ---------------------------------------------------

struct SweepPoint {
    gnn::LayerKind kind;
    std::size_t layers = 0;
    std::size_t dim = 0;
    std::array<double, 3> val_micro_f1 = {0.0, 0.0, 0.0};
};

struct SweepResult {
    std::vector<SweepPoint> grid;
    /// winners[tier][kind] = best grid point for that tier and layer kind
    std::map<std::string, std::array<SweepPoint, 3>> winners;
};

SweepResult hyper_sweep(const RunConfig& base, const Dataset& data,
                        const std::vector<gnn::LayerKind>& kinds,
                        const std::vector<std::size_t>& layer_counts,
                        const std::vector<std::size_t>& dims);

// --- CSV emission -----------------------------------------------------------

std::string metrics_csv(const std::vector<std::pair<std::string, MethodSummary>>& methods);
std::string topk_csv(const std::vector<std::pair<std::string, MethodSummary>>& methods,
                     std::size_t k);
std::string hierarchy_csv(const MethodSummary& hierarchical, const MethodSummary& independent);
std::string ablation_csv(const std::vector<AblationCell>& cells);
std::string confusion_csv(const ConfusionMatrix& m, const Vocabulary& labels);
std::string stats_csv(const StatsReport& report);
std::string sweep_csv(const SweepResult& sweep);

} // namespace funcgraph::expt
