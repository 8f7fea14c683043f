#pragma once

#include <map>
#include <optional>

#include "causalsynth/dataset.hpp"
#include "causalsynth/graph.hpp"
#include "causalsynth/spline.hpp"

namespace causal {

// Named predictor columns, owned elsewhere (usually a DatasetTable).
struct PredictorSet {
    std::vector<NodeId> names;
    std::vector<const std::vector<double>*> columns;

    static PredictorSet from_table(const DatasetTable& table, std::vector<NodeId> names);
    std::size_t size() const { return names.size(); }
};

struct GroupSparseConfig {
    int num_basis = 6;
    int degree = 3;            // cubic
    double tol = 1e-6;         // max coefficient change per sweep
    int max_sweeps = 500;
    double active_threshold = 1e-8;  // group norm below this is float dust
};

// One fitted predictor group: standardization applied before basis expansion,
// quantile-placed basis, raw-basis coefficients.
struct GroupFit {
    double center = 0.0;
    double scale = 1.0;
    SplineBasis basis;
    Eigen::VectorXd beta;     // length num_basis; exactly zero when inactive
    double group_norm = 0.0;  // empirical function norm of the fitted component
    bool active = false;
    bool dropped = false;  // degenerate predictor, excluded from the fit
};

class SplineAdditiveModel {
public:
    NodeId target;
    double intercept = 0.0;
    double lambda = 0.0;
    std::map<NodeId, GroupFit> groups;
    bool converged = true;
    int sweeps = 0;
    std::vector<double> objective_trace;  // per sweep, non-increasing

    std::vector<NodeId> active_set() const;
    double predict_row(const std::map<NodeId, double>& x) const;
    std::vector<double> predict(const PredictorSet& predictors) const;
};

// Largest penalty with a fully sparse solution.
double group_lasso_lambda_max(const std::vector<double>& y, const PredictorSet& predictors,
                              const GroupSparseConfig& config = {});

// Mean squared residual plus lambda * sum of per-group empirical function
// norms, minimized by cyclic block coordinate descent with exact group-wise
// proximal updates (groups orthonormalized internally). Non-convergence is
// flagged on the returned model, never silent.
SplineAdditiveModel fit_group_sparse(const std::vector<double>& y, const PredictorSet& predictors,
                                     const GroupSparseConfig& config, double lambda);

struct CvSelection {
    double lambda = 0.0;
    double lambda_max = 0.0;
    std::vector<double> grid;     // descending, grid.front() == lambda_max
    std::vector<double> cv_mean;  // mean held-out MSE per grid point
    std::vector<double> cv_se;    // standard error over folds
    std::size_t min_index = 0;
    std::size_t chosen_index = 0;  // 1-SE rule pick
};

// 5-fold CV over a 50-point logarithmic grid from lambda_max down to
// 1e-3 * lambda_max; returns the largest lambda whose mean CV-MSE is within
// one standard error of the minimum. Fold assignment is seeded.
CvSelection cv_select_lambda(const std::vector<double>& y, const PredictorSet& predictors,
                             const GroupSparseConfig& config, int num_folds, std::uint64_t seed);

enum class CrossLearnMode {
    with_prior,  // subtract known mechanisms, extend predictors by P*_k
    naive,       // diagnostic: earlier-process predictors only
};

struct CrossLearnConfig {
    GroupSparseConfig fit;
    int num_folds = 5;
    std::uint64_t seed = 0;
    CrossLearnMode mode = CrossLearnMode::with_prior;
};

// Cross-process edge learning: per later-process target (walked along a causal
// order of its process graph), group-sparse regression of the
// mechanism-residual response onto all earlier-process variables (restricted
// by the process-level graph when present), extended by the within-process
// parents when no mechanism is known. Only cross-process actives are
// returned.
EdgeSet learn_cross_process_edges(const DatasetTable& data, const PriorKnowledge& prior,
                                  const CrossLearnConfig& config = {});

}  // namespace causal
