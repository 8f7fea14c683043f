#pragma once

#include <map>

#include "causalsynth/dataset.hpp"
#include "causalsynth/drf.hpp"
#include "causalsynth/graph.hpp"
#include "causalsynth/spam.hpp"

namespace causal {

// Source-node resampler: training values plus Gaussian jitter at a
// Silverman-rule bandwidth (zero only for constant columns).
struct SmoothBootstrapSpec {
    std::vector<double> training_column;
    double bandwidth = 0.0;
};

double silverman_bandwidth(const std::vector<double>& column);

struct PipelineConfig {
    DrfConfig drf;
    std::uint64_t seed = 0;
};

struct FitMeta {
    std::uint64_t seed = 0;
    std::uint64_t data_fingerprint = 0;
    DrfConfig drf;
};

// Hash of column names, row count, and per-column mean/sd; guards against
// accidental model/data mismatch without retaining raw data.
std::uint64_t data_fingerprint(const DatasetTable& data, const std::vector<NodeId>& columns);

// Fitted per-node conditionals bound to a ground-truth DAG: smooth-bootstrap
// specs for source nodes, distributional forests (over the node's parents)
// for the rest. Immutable after fit.
class PipelineModel {
public:
    PipelineModel(LayeredDag dag, std::vector<NodeId> order,
                  std::map<NodeId, SmoothBootstrapSpec> sources,
                  std::map<NodeId, DistributionalForest> conditionals, FitMeta meta);

    const LayeredDag& dag() const { return dag_; }
    const std::vector<NodeId>& order() const { return order_; }
    const std::map<NodeId, SmoothBootstrapSpec>& sources() const { return sources_; }
    const std::map<NodeId, DistributionalForest>& conditionals() const { return conditionals_; }
    const FitMeta& meta() const { return meta_; }
    bool is_source(const NodeId& v) const { return sources_.count(v) > 0; }

private:
    LayeredDag dag_;
    std::vector<NodeId> order_;
    std::map<NodeId, SmoothBootstrapSpec> sources_;
    std::map<NodeId, DistributionalForest> conditionals_;
    FitMeta meta_;
};

PipelineModel fit_pipeline(const DatasetTable& data, const LayeredDag& dag,
                           const PipelineConfig& config);

// Row-at-a-time generation along the causal order: sources by smooth
// bootstrap, the rest by conditional draws at the already-generated parent
// values; rng consumption follows loop order exactly.
DatasetTable sample(const PipelineModel& model, std::size_t n, Rng& rng);

// Per-station models over induced cell subgraphs of a merged ground truth;
// sampling a cell is Markov to the cell DAG (earlier-cell effects are
// deliberately marginalized out).
std::map<int, PipelineModel> fit_cell_pipelines(const DatasetTable& data, const LayeredDag& merged,
                                                const PipelineConfig& config);

// Prior-only variant: learns the within-station cross-process edges first,
// then fits each cell.
std::map<int, PipelineModel> fit_cell_pipelines(const DatasetTable& data, const PriorKnowledge& prior,
                                                const PipelineConfig& config,
                                                const CrossLearnConfig& learn_config);

// Exact two-sample Kolmogorov-Smirnov statistic by sorted merge.
double ks_statistic(const std::vector<double>& a, const std::vector<double>& b);

struct FidelityEntry {
    NodeId node;
    double ks = 0.0;
    bool source = false;
};

struct FidelityReport {
    std::vector<FidelityEntry> entries;  // descending KS
    std::size_t sample_size = 0;
    double max_non_source = 0.0;
    double min_non_source = 0.0;
    double mean_non_source = 0.0;
};

FidelityReport fidelity_report(const DatasetTable& original, const PipelineModel& model,
                               std::size_t n, Rng& rng);
void save_fidelity_json(const FidelityReport& report, const std::string& path);

// Single-file binary container with a versioned header and per-section CRCs;
// the round trip is lossless (identical rng gives an identical sample
// stream). Version or checksum mismatches raise IoError with the matching
// kind.
void save_model(const PipelineModel& model, const std::string& path);
PipelineModel load_model(const std::string& path);

}  // namespace causal
