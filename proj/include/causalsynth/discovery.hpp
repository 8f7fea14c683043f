#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>

#include "causalsynth/dataset.hpp"
#include "causalsynth/graph.hpp"

namespace causal {

struct CiTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool independent = true;  // p_value > alpha
};

// Fisher z-transformed partial Pearson correlation of (i, j) given s.
// Singular correlation submatrices get one ridge (1e-10) retry before a
// NumericError.
CiTestResult fisher_z_test(const DatasetTable& data, const NodeId& i, const NodeId& j,
                           const std::vector<NodeId>& s, double alpha);

// Independence callback for pc_stable_with_test; true means "independent".
// Used to drive PC from an exact d-separation oracle in tests.
using CiOracle =
    std::function<bool(std::size_t i, std::size_t j, const std::vector<std::size_t>& s)>;

// Order-independent PC: stable skeleton (conditioning sets from per-depth
// adjacency snapshots), v-structures from recorded separating sets, Meek
// rules 1-4 to closure.
Cpdag pc_stable(const DatasetTable& data, double alpha = 0.05);
Cpdag pc_stable_with_test(const std::vector<NodeId>& nodes, const CiOracle& independent);

struct LingamResult {
    std::vector<NodeId> order;  // estimated causal order, sources first
    Digraph graph;
};

// Pairwise likelihood-ratio DirectLiNGAM: the most independent variable
// (maximum-entropy approximation on standardized residuals) is repeatedly
// placed first and regressed out; the final adjacency comes from
// BIC-selected lasso along the estimated order.
LingamResult direct_lingam(const DatasetTable& data);

struct NotearsOptions {
    double lambda1 = 0.1;
    int max_iter = 100;  // dual updates
    double h_tol = 1e-8;
    double rho_max = 1e16;
    double w_threshold = 0.3;
    int inner_max_iter = 1000;
    double inner_tol = 1e-7;
};

struct WeightedAdjacency {
    std::vector<NodeId> nodes;
    Eigen::MatrixXd weights;  // pre-threshold solution
    double threshold = 0.3;
    bool converged = true;  // h <= h_tol at exit
    double h_value = 0.0;
    std::vector<Edge> pruned_cycle_edges;  // removed to certify acyclicity

    // thresholded support as a DAG (pruning already applied)
    Digraph graph() const;
};

// Linear NOTEARS: least squares plus l1, with the acyclicity function
// h(W) = tr(exp(W o W)) - d driven to zero by an augmented Lagrangian;
// the bound-constrained smooth subproblem (W = W+ - W-) is solved by a
// spectral projected gradient method. Non-convergence at rho_max is flagged.
WeightedAdjacency notears_linear(const DatasetTable& data, const NotearsOptions& options = {});

double notears_h(const Eigen::MatrixXd& w);
Eigen::MatrixXd notears_h_grad(const Eigen::MatrixXd& w);
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a);  // scaling and squaring

// Variables sorted by increasing marginal variance, then BIC-lasso of each on
// its order predecessors; nonzero coefficients become edges.
Digraph sortnregress(const DatasetTable& data);

// CPDAG of a DAG: skeleton plus v-structures, closed under Meek rules. The
// MEC-membership oracle used across the test suite.
Cpdag cpdag_of(const Digraph& dag);

// Registered structure learners: "pc", "lingam", "notears", "snr", plus the
// "empty" baseline. "import:<path>" loads an externally produced graph JSON.
// PC output is completed to a DAG by a random MEC member draw.
std::vector<std::string> algorithm_keys();
Digraph run_algorithm(const std::string& key, const DatasetTable& data, Rng& rng);

}  // namespace causal
