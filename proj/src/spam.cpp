#include "causalsynth/spam.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace causal {

PredictorSet PredictorSet::from_table(const DatasetTable& table, std::vector<NodeId> names) {
    PredictorSet set;
    set.names = std::move(names);
    for (const auto& n : set.names) set.columns.push_back(&table.column(n));
    return set;
}

std::vector<NodeId> SplineAdditiveModel::active_set() const {
    std::vector<NodeId> out;
    for (const auto& [name, g] : groups)
        if (g.active) out.push_back(name);
    return out;
}

double SplineAdditiveModel::predict_row(const std::map<NodeId, double>& x) const {
    double y = intercept;
    for (const auto& [name, g] : groups) {
        if (!g.active) continue;
        auto it = x.find(name);
        if (it == x.end()) throw InputError("missing predictor value: " + name);
        const double z = (it->second - g.center) / g.scale;
        y += spline_eval(g.basis, z).dot(g.beta);
    }
    return y;
}

std::vector<double> SplineAdditiveModel::predict(const PredictorSet& predictors) const {
    if (predictors.names.empty()) throw InputError("predict needs predictor columns");
    const std::size_t n = predictors.columns.front()->size();
    std::vector<double> out(n, intercept);
    for (const auto& [name, g] : groups) {
        if (!g.active) continue;
        auto it = std::find(predictors.names.begin(), predictors.names.end(), name);
        if (it == predictors.names.end()) throw InputError("missing predictor column: " + name);
        const auto& col = *predictors.columns[static_cast<std::size_t>(it - predictors.names.begin())];
        for (std::size_t r = 0; r < n; ++r) {
            const double z = (col[r] - g.center) / g.scale;
            out[r] += spline_eval(g.basis, z).dot(g.beta);
        }
    }
    return out;
}

namespace {

struct GroupWork {
    NodeId name;
    double center = 0.0;
    double scale = 1.0;
    SplineBasis basis;
    Eigen::MatrixXd Z;       // n x m with Z'Z / n = I
    Eigen::MatrixXd to_raw;  // m x m, beta = to_raw * gamma
    bool dropped = false;
};

struct Workspace {
    std::vector<GroupWork> groups;
    Eigen::VectorXd y_centered;
    double y_mean = 0.0;
    std::size_t n = 0;
};

Workspace build_workspace(const std::vector<double>& y, const PredictorSet& predictors,
                          const GroupSparseConfig& config) {
    Workspace ws;
    ws.n = y.size();
    for (double v : y)
        if (!std::isfinite(v)) throw InputError("non-finite response value");
    ws.y_mean = stats::mean(y);
    ws.y_centered.resize(static_cast<Eigen::Index>(ws.n));
    for (std::size_t i = 0; i < ws.n; ++i) ws.y_centered[static_cast<Eigen::Index>(i)] = y[i] - ws.y_mean;

    for (std::size_t g = 0; g < predictors.size(); ++g) {
        GroupWork work;
        work.name = predictors.names[g];
        const auto& col = *predictors.columns[g];
        if (col.size() != ws.n) throw InputError("predictor " + work.name + " length mismatch");
        try {
            work.center = stats::mean(col);
            const double s = stats::sd(col);
            work.scale = s > 0.0 ? s : 1.0;
            std::vector<double> standardized(ws.n);
            for (std::size_t i = 0; i < ws.n; ++i) standardized[i] = (col[i] - work.center) / work.scale;
            work.basis = make_quantile_basis(standardized, config.num_basis, config.degree);
            Eigen::MatrixXd design = spline_design(standardized, work.basis);
            // groupwise orthonormalization: empirical function norm becomes the
            // plain euclidean norm of gamma, and the block update is exact
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
            Eigen::MatrixXd r_full =
                qr.matrixQR().topRows(config.num_basis).triangularView<Eigen::Upper>();
            const double diag_floor = 1e-8 * std::sqrt(static_cast<double>(ws.n));
            bool rank_ok = true;
            for (int i = 0; i < config.num_basis; ++i)
                if (std::abs(r_full(i, i)) < diag_floor) rank_ok = false;
            if (!rank_ok) throw NumericError("rank-deficient design for " + work.name);
            Eigen::MatrixXd q = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(ws.n), config.num_basis);
            q = qr.householderQ() * q;
            const double root_n = std::sqrt(static_cast<double>(ws.n));
            work.Z = q * root_n;
            work.to_raw =
                r_full.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(config.num_basis, config.num_basis)) *
                root_n;
        } catch (const NumericError&) {
            work.dropped = true;  // degenerate predictor: excluded, never active
        }
        ws.groups.push_back(std::move(work));
    }
    return ws;
}

double workspace_lambda_max(const Workspace& ws) {
    double lmax = 0.0;
    const double n = static_cast<double>(ws.n);
    for (const auto& g : ws.groups) {
        if (g.dropped) continue;
        const double norm = (g.Z.transpose() * ws.y_centered).norm() / n;
        lmax = std::max(lmax, 2.0 * norm);
    }
    return lmax;
}

struct PathState {
    std::vector<Eigen::VectorXd> gamma;  // per group
    Eigen::VectorXd residual;
    bool converged = true;
    int sweeps = 0;
    std::vector<double> objective;
};

double path_objective(const Workspace& ws, const PathState& st, double lambda) {
    double obj = st.residual.squaredNorm() / static_cast<double>(ws.n);
    for (std::size_t g = 0; g < ws.groups.size(); ++g)
        if (!ws.groups[g].dropped) obj += lambda * st.gamma[g].norm();
    return obj;
}

void fit_at_lambda(const Workspace& ws, double lambda, const GroupSparseConfig& config, PathState& st) {
    const double n = static_cast<double>(ws.n);
    st.converged = false;
    st.sweeps = 0;
    st.objective.clear();
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t g = 0; g < ws.groups.size(); ++g) {
            const auto& work = ws.groups[g];
            if (work.dropped) continue;
            Eigen::VectorXd z = work.Z.transpose() * st.residual / n + st.gamma[g];
            const double norm = z.norm();
            Eigen::VectorXd updated;
            if (norm > lambda / 2.0) {
                updated = (1.0 - lambda / (2.0 * norm)) * z;
            } else {
                updated = Eigen::VectorXd::Zero(z.size());
            }
            const Eigen::VectorXd delta = updated - st.gamma[g];
            const double change = delta.lpNorm<Eigen::Infinity>();
            if (change > 0.0) {
                st.residual -= work.Z * delta;
                st.gamma[g] = std::move(updated);
                max_change = std::max(max_change, change);
            }
        }
        st.sweeps = sweep + 1;
        const double objective = path_objective(ws, st, lambda);
        assert(st.objective.empty() ||
               objective <= st.objective.back() * (1.0 + 1e-12) + 1e-12);
        st.objective.push_back(objective);
        if (max_change < config.tol) {
            st.converged = true;
            break;
        }
    }
}

SplineAdditiveModel finalize_model(const NodeId& target, const Workspace& ws, const PathState& st,
                                   double lambda, const GroupSparseConfig& config) {
    SplineAdditiveModel model;
    model.target = target;
    model.intercept = ws.y_mean;
    model.lambda = lambda;
    model.converged = st.converged;
    model.sweeps = st.sweeps;
    model.objective_trace = st.objective;
    for (std::size_t g = 0; g < ws.groups.size(); ++g) {
        const auto& work = ws.groups[g];
        GroupFit fit;
        fit.center = work.center;
        fit.scale = work.scale;
        fit.basis = work.basis;
        fit.dropped = work.dropped;
        if (work.dropped) {
            fit.beta = Eigen::VectorXd::Zero(config.num_basis);
        } else {
            fit.group_norm = st.gamma[g].norm();
            fit.active = fit.group_norm > config.active_threshold;
            fit.beta = fit.active ? Eigen::VectorXd(work.to_raw * st.gamma[g])
                                  : Eigen::VectorXd::Zero(config.num_basis);
        }
        model.groups.emplace(work.name, std::move(fit));
    }
    return model;
}

PathState fresh_state(const Workspace& ws, const GroupSparseConfig& config) {
    PathState st;
    st.gamma.assign(ws.groups.size(), Eigen::VectorXd::Zero(config.num_basis));
    st.residual = ws.y_centered;
    return st;
}

void check_fit_preconditions(const std::vector<double>& y, const PredictorSet& predictors,
                             const GroupSparseConfig& config) {
    if (predictors.size() == 0) throw InputError("no predictors supplied");
    if (y.size() < static_cast<std::size_t>(10 * config.num_basis))
        throw InputError("need at least " + std::to_string(10 * config.num_basis) + " rows, got " +
                         std::to_string(y.size()));
    for (const auto* col : predictors.columns)
        if (col->size() != y.size()) throw InputError("predictor/response length mismatch");
}

std::vector<double> lambda_grid(double lmax, int points = 50, double ratio = 1e-3) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            lmax * std::pow(ratio, static_cast<double>(i) / static_cast<double>(points - 1));
    return grid;
}

}  // namespace

double group_lasso_lambda_max(const std::vector<double>& y, const PredictorSet& predictors,
                              const GroupSparseConfig& config) {
    check_fit_preconditions(y, predictors, config);
    return workspace_lambda_max(build_workspace(y, predictors, config));
}

SplineAdditiveModel fit_group_sparse(const std::vector<double>& y, const PredictorSet& predictors,
                                     const GroupSparseConfig& config, double lambda) {
    check_fit_preconditions(y, predictors, config);
    if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
    const Workspace ws = build_workspace(y, predictors, config);
    PathState st = fresh_state(ws, config);
    fit_at_lambda(ws, lambda, config, st);
    return finalize_model("", ws, st, lambda, config);
}

CvSelection cv_select_lambda(const std::vector<double>& y, const PredictorSet& predictors,
                             const GroupSparseConfig& config, int num_folds, std::uint64_t seed) {
    if (num_folds < 2) throw InputError("need at least 2 folds");
    if (y.size() < static_cast<std::size_t>(num_folds * 20))
        throw InputError("cross-validation needs at least " + std::to_string(num_folds * 20) + " rows");
    check_fit_preconditions(y, predictors, config);

    CvSelection sel;
    sel.lambda_max = group_lasso_lambda_max(y, predictors, config);
    if (sel.lambda_max <= 0.0) {
        // response is (numerically) orthogonal to every predictor at zero:
        // treat any positive lambda as fully sparse
        sel.lambda_max = 1.0;
    }
    sel.grid = lambda_grid(sel.lambda_max);

    const std::size_t n = y.size();
    Rng rng(seed);
    const auto perm = rng.permutation(static_cast<std::uint32_t>(n));
    std::vector<int> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(num_folds));

    // per-fold held-out MSE along the grid
    std::vector<std::vector<double>> fold_mse(static_cast<std::size_t>(num_folds),
                                              std::vector<double>(sel.grid.size(), 0.0));
    for (int f = 0; f < num_folds; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < n; ++i)
            (fold_of[i] == f ? test_rows : train_rows).push_back(i);

        std::vector<double> y_train(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) y_train[i] = y[train_rows[i]];
        std::vector<std::vector<double>> col_train(predictors.size());
        PredictorSet train_set;
        train_set.names = predictors.names;
        for (std::size_t g = 0; g < predictors.size(); ++g) {
            col_train[g].resize(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i)
                col_train[g][i] = (*predictors.columns[g])[train_rows[i]];
            train_set.columns.push_back(&col_train[g]);
        }

        const Workspace ws = build_workspace(y_train, train_set, config);
        // held-out design in orthonormal coordinates, built once per fold
        std::vector<Eigen::MatrixXd> test_design(ws.groups.size());
        for (std::size_t g = 0; g < ws.groups.size(); ++g) {
            const auto& work = ws.groups[g];
            if (work.dropped) continue;
            Eigen::MatrixXd d(static_cast<Eigen::Index>(test_rows.size()), config.num_basis);
            for (std::size_t i = 0; i < test_rows.size(); ++i) {
                const double v = (*predictors.columns[g])[test_rows[i]];
                d.row(static_cast<Eigen::Index>(i)) =
                    spline_eval(work.basis, (v - work.center) / work.scale).transpose();
            }
            test_design[g] = d * work.to_raw;
        }

        PathState st = fresh_state(ws, config);
        for (std::size_t gi = 0; gi < sel.grid.size(); ++gi) {
            fit_at_lambda(ws, sel.grid[gi], config, st);  // warm start from previous lambda
            Eigen::VectorXd pred = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(test_rows.size()), ws.y_mean);
            for (std::size_t g = 0; g < ws.groups.size(); ++g) {
                if (ws.groups[g].dropped || st.gamma[g].isZero(0.0)) continue;
                pred += test_design[g] * st.gamma[g];
            }
            double mse = 0.0;
            for (std::size_t i = 0; i < test_rows.size(); ++i) {
                const double err = y[test_rows[i]] - pred[static_cast<Eigen::Index>(i)];
                mse += err * err;
            }
            fold_mse[static_cast<std::size_t>(f)][gi] = mse / static_cast<double>(test_rows.size());
        }
    }

    sel.cv_mean.resize(sel.grid.size());
    sel.cv_se.resize(sel.grid.size());
    for (std::size_t gi = 0; gi < sel.grid.size(); ++gi) {
        double mean = 0.0;
        for (int f = 0; f < num_folds; ++f) mean += fold_mse[static_cast<std::size_t>(f)][gi];
        mean /= static_cast<double>(num_folds);
        double var = 0.0;
        for (int f = 0; f < num_folds; ++f) {
            const double d = fold_mse[static_cast<std::size_t>(f)][gi] - mean;
            var += d * d;
        }
        var /= static_cast<double>(num_folds - 1);
        sel.cv_mean[gi] = mean;
        sel.cv_se[gi] = std::sqrt(var / static_cast<double>(num_folds));
    }

    sel.min_index = static_cast<std::size_t>(
        std::min_element(sel.cv_mean.begin(), sel.cv_mean.end()) - sel.cv_mean.begin());
    const double limit = sel.cv_mean[sel.min_index] + sel.cv_se[sel.min_index];
    sel.chosen_index = sel.min_index;
    for (std::size_t gi = 0; gi <= sel.min_index; ++gi) {
        if (sel.cv_mean[gi] <= limit) {
            sel.chosen_index = gi;  // grid is descending: first qualifying is the largest lambda
            break;
        }
    }
    sel.lambda = sel.grid[sel.chosen_index];
    return sel;
}

EdgeSet learn_cross_process_edges(const DatasetTable& data, const PriorKnowledge& prior,
                                  const CrossLearnConfig& config) {
    const int k_processes = prior.num_processes();
    for (const auto& v : prior.all_nodes())
        if (!data.has_column(v)) throw InputError("data lacks column for node " + v);
    for (const auto& m : prior.mechanisms())
        if (!data.has_column(m.prediction_column))
            throw InputError("mechanism prediction column missing: " + m.prediction_column);

    // enumerate targets along each later process's causal order
    struct Target {
        NodeId node;
        int process;
    };
    std::vector<Target> targets;
    for (int t = 2; t <= k_processes; ++t) {
        const auto& pg = prior.process_graphs()[static_cast<std::size_t>(t - 1)];
        LayeredDag local(pg.nodes, std::vector<int>(pg.nodes.size(), 1), {pg.station_index}, pg.edges);
        for (const auto& node : causal_order(local)) targets.push_back({node, t});
    }

    std::vector<std::vector<NodeId>> nodes_before(static_cast<std::size_t>(k_processes) + 1);
    for (int t = 2; t <= k_processes; ++t) {
        std::vector<NodeId> before;
        for (int j = 1; j < t; ++j) {
            const auto& pg = prior.process_graphs()[static_cast<std::size_t>(j - 1)];
            before.insert(before.end(), pg.nodes.begin(), pg.nodes.end());
        }
        nodes_before[static_cast<std::size_t>(t)] = std::move(before);
    }

    std::vector<EdgeSet> per_target(targets.size());
    enum class FailKind { none, input, numeric };
    std::vector<FailKind> fail_kind(targets.size(), FailKind::none);
    std::vector<std::string> failure(targets.size());
    parallel_for(targets.size(), [&](std::size_t ti) {
        const auto& [node, t] = targets[ti];
        try {
            // predictor scope: earlier processes, or the process-level graph's
            // parent processes when supplied
            std::vector<NodeId> scope;
            if (prior.has_process_level_graph()) {
                for (const auto& [j, tt] : prior.process_level_edges()) {
                    if (tt != t) continue;
                    const auto& pg = prior.process_graphs()[static_cast<std::size_t>(j - 1)];
                    scope.insert(scope.end(), pg.nodes.begin(), pg.nodes.end());
                }
            } else {
                scope = nodes_before[static_cast<std::size_t>(t)];
            }

            const MechanismSpec* mech =
                config.mode == CrossLearnMode::with_prior ? prior.mechanism_for(node) : nullptr;
            if (config.mode == CrossLearnMode::with_prior && mech == nullptr) {
                for (const auto& p : prior.within_process_parents(node)) scope.push_back(p);
            }
            std::sort(scope.begin(), scope.end());
            scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
            if (scope.empty()) return;

            std::vector<double> response = data.column(node);
            if (mech != nullptr) {
                const auto& pred = data.column(mech->prediction_column);
                if (pred.size() != response.size())
                    throw InputError("prediction column " + mech->prediction_column + " length mismatch");
                for (std::size_t i = 0; i < response.size(); ++i) response[i] -= pred[i];
            }

            const PredictorSet predictors = PredictorSet::from_table(data, scope);
            const auto cv = cv_select_lambda(response, predictors, config.fit, config.num_folds,
                                             Rng::derive_seed(config.seed, ti));
            const auto model = fit_group_sparse(response, predictors, config.fit, cv.lambda);
            const int target_process = prior.process_of(node);
            for (const auto& active : model.active_set()) {
                if (prior.process_of(active) < target_process) per_target[ti].insert({active, node});
            }
        } catch (const InputError& e) {
            fail_kind[ti] = FailKind::input;
            failure[ti] = e.what();
        } catch (const Error& e) {
            fail_kind[ti] = FailKind::numeric;
            failure[ti] = e.what();
        }
    });

    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        if (fail_kind[ti] == FailKind::none) continue;
        const std::string msg =
            "cross-process fit failed for target " + targets[ti].node + ": " + failure[ti];
        if (fail_kind[ti] == FailKind::input) throw InputError(msg);
        throw NumericError(msg);
    }

    EdgeSet across;
    for (const auto& edges : per_target) across.insert(edges.begin(), edges.end());
    return across;
}

}  // namespace causal
