#pragma once

#include "causalsynth/dataset.hpp"
#include "causalsynth/graph.hpp"

namespace causal {

struct StructuralScore {
    std::size_t shd = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_edges = 0;
    std::size_t learned_edges = 0;
    // set when a 0/0 ratio was defined as 0
    bool precision_undefined = false;
    bool recall_undefined = false;
};

// Edge insertions, deletions, and reversals needed to turn `learned` into
// `truth`; a reversal counts as one operation.
std::size_t shd(const Digraph& truth, const Digraph& learned);

// Directed-edge precision/recall/F1. Empty denominators yield 0 and are
// flagged on the score.
StructuralScore precision_recall_f1(const Digraph& truth, const Digraph& learned);

// Fraction of directed-path-connected ordered pairs (counted once per path
// length, via positive entries of adjacency powers) whose marginal variances
// increase along the path; ties count 1/2. 1.0 means every path runs from
// lower to higher variance.
double varsortability(const DatasetTable& data, const Digraph& truth);

}  // namespace causal
