#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "causalsynth/graph.hpp"
#include "causalsynth/spam.hpp"

namespace causal {

struct DrfConfig {
    int num_trees = 2000;
    int min_node_size = 15;
    int num_fourier_features = 50;  // B; the feature map has 2B dimensions
    int mtry = 0;                   // 0: ceil(sqrt(#predictors))
    double subsample_fraction = 0.5;
    double bandwidth = 0.0;  // <= 0: median heuristic on the response
    std::uint64_t seed = 0;
    int max_split_candidates = 20;  // quantile-midpoint thresholds per predictor

    void validate() const;
};

struct TreeNode {
    std::int32_t split_predictor = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t leaf = -1;  // index into Tree::leaves when a leaf
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<std::vector<std::uint32_t>> leaves;  // training-row indices

    // deterministic routing: x[p] <= threshold goes left
    const std::vector<std::uint32_t>& route(const std::vector<double>& query) const;
};

// Forest of MMD-split trees over a node's parents. Trees are grown on
// per-tree row subsamples; leaves index into the full training table.
struct DistributionalForest {
    NodeId target;
    std::vector<NodeId> predictors;
    std::vector<Tree> trees;
    std::vector<double> training_response;
    double bandwidth = 0.0;  // resolved value actually used
    DrfConfig config;
};

// Median of pairwise absolute response differences over a (seeded, capped)
// subsample. Falls back to the median positive difference when ties drive the
// plain median to zero; errors out when all values are identical.
double median_heuristic_bandwidth(const std::vector<double>& response, std::uint64_t seed = 0,
                                  std::size_t cap = 1000);

// (n_L n_R / n^2) * || mean_L phi - mean_R phi ||^2 with phi the random
// cosine/sine feature map of the supplied frequencies; symmetric in the
// children and zero for identical multisets.
double mmd_split_score(const std::vector<double>& left, const std::vector<double>& right,
                       const std::vector<double>& frequencies);

DistributionalForest fit_drf(const std::vector<double>& response, const PredictorSet& predictor_table,
                             DrfConfig config);

// Per-training-row weights at a query point: the average over trees of the
// uniform distribution on the query's co-leaf rows. Nonnegative, sums to 1.
Eigen::VectorXd drf_weights(const DistributionalForest& forest, const std::vector<double>& query);

// Draws one training response with the drf_weights distribution (tree picked
// uniformly, then a row from its co-leaf; this mixture is exactly the weight
// vector without materializing it).
double conditional_sample(const DistributionalForest& forest, const std::vector<double>& query, Rng& rng);

}  // namespace causal
