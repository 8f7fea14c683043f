#include "causalsynth/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace causal {

namespace {

Eigen::MatrixXd data_matrix(const DatasetTable& data) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(data.cols()));
    for (std::size_t c = 0; c < data.cols(); ++c) {
        const auto& col = data.column(c);
        for (std::size_t r = 0; r < col.size(); ++r)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
    }
    return x;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows(), p = x.cols();
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::VectorXd sd = (centered.array().square().colwise().sum() / static_cast<double>(n - 1))
                             .sqrt()
                             .matrix()
                             .transpose();
    for (Eigen::Index j = 0; j < p; ++j)
        if (sd[j] <= 0.0) sd[j] = 1.0;
    centered.array().rowwise() /= sd.transpose().array();
    return centered.transpose() * centered / static_cast<double>(n - 1);
}

// partial correlation of (0, 1) given the rest, from a correlation submatrix
double partial_correlation(const Eigen::MatrixXd& sub) {
    Eigen::MatrixXd m = sub;
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
        if (lu.isInvertible()) {
            const Eigen::MatrixXd prec = lu.inverse();
            const double denom = prec(0, 0) * prec(1, 1);
            if (denom > 0.0) return -prec(0, 1) / std::sqrt(denom);
        }
        m = sub + 1e-10 * Eigen::MatrixXd::Identity(sub.rows(), sub.cols());
    }
    throw NumericError("singular correlation submatrix in partial-correlation test");
}

struct FisherZ {
    Eigen::MatrixXd corr;
    std::size_t n = 0;

    // two-sided p-value of the Fisher-z statistic for (i, j) given s
    std::pair<double, double> test(std::size_t i, std::size_t j,
                                   const std::vector<std::size_t>& s) const {
        if (n <= s.size() + 3) throw InputError("fisher z needs n > |s| + 3");
        std::vector<std::size_t> scope = {i, j};
        scope.insert(scope.end(), s.begin(), s.end());
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(scope.size()),
                            static_cast<Eigen::Index>(scope.size()));
        for (std::size_t a = 0; a < scope.size(); ++a)
            for (std::size_t b = 0; b < scope.size(); ++b)
                sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    corr(static_cast<Eigen::Index>(scope[a]), static_cast<Eigen::Index>(scope[b]));
        double r = scope.size() == 2 ? sub(0, 1) : partial_correlation(sub);
        r = std::clamp(r, -1.0 + 1e-12, 1.0 - 1e-12);
        const double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
        const double statistic =
            std::sqrt(static_cast<double>(n - s.size() - 3)) * std::abs(z);
        const double p = 2.0 * (1.0 - stats::normal_cdf(statistic));
        return {statistic, p};
    }
};

}  // namespace

CiTestResult fisher_z_test(const DatasetTable& data, const NodeId& i, const NodeId& j,
                           const std::vector<NodeId>& s, double alpha) {
    if (i == j) throw InputError("fisher z test of a node against itself");
    std::vector<NodeId> cols = {i, j};
    cols.insert(cols.end(), s.begin(), s.end());
    const DatasetTable sub = data.select(cols);
    FisherZ engine{correlation_matrix(data_matrix(sub)), sub.rows()};
    std::vector<std::size_t> cond(s.size());
    std::iota(cond.begin(), cond.end(), 2);
    const auto [statistic, p] = engine.test(0, 1, cond);
    CiTestResult result;
    result.statistic = statistic;
    result.p_value = p;
    result.alpha = alpha;
    result.independent = p > alpha;
    return result;
}

// ---------------------------------------------------------------------------
// PC-stable + Meek machinery

namespace {

// partially directed graph over indices
struct Pdag {
    std::size_t p;
    std::vector<std::vector<char>> dir;  // dir[a][b]: a -> b
    std::vector<std::vector<char>> und;  // symmetric

    explicit Pdag(std::size_t p_) : p(p_), dir(p_, std::vector<char>(p_, 0)), und(p_, std::vector<char>(p_, 0)) {}

    bool adjacent(std::size_t a, std::size_t b) const { return dir[a][b] || dir[b][a] || und[a][b]; }

    void orient(std::size_t a, std::size_t b) {  // a -> b, consuming an undirected edge
        und[a][b] = und[b][a] = 0;
        dir[a][b] = 1;
    }

    // Meek rules 1-4 to closure
    void meek_close() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = 0; b < p; ++b) {
                    if (!und[a][b]) continue;
                    if (rule1(a, b) || rule2(a, b) || rule3(a, b) || rule4(a, b)) {
                        orient(a, b);
                        changed = true;
                    }
                }
            }
        }
    }

    // c -> a, a - b, c not adjacent b  =>  a -> b
    bool rule1(std::size_t a, std::size_t b) const {
        for (std::size_t c = 0; c < p; ++c)
            if (dir[c][a] && !adjacent(c, b) && c != b) return true;
        return false;
    }
    // a -> c -> b, a - b  =>  a -> b
    bool rule2(std::size_t a, std::size_t b) const {
        for (std::size_t c = 0; c < p; ++c)
            if (dir[a][c] && dir[c][b]) return true;
        return false;
    }
    // a - c -> b, a - d -> b, c not adjacent d  =>  a -> b
    bool rule3(std::size_t a, std::size_t b) const {
        for (std::size_t c = 0; c < p; ++c) {
            if (!und[a][c] || !dir[c][b]) continue;
            for (std::size_t d = c + 1; d < p; ++d)
                if (und[a][d] && dir[d][b] && !adjacent(c, d)) return true;
        }
        return false;
    }
    // a - c, c -> d, d -> b, a adjacent d, b not adjacent c  =>  a -> b
    bool rule4(std::size_t a, std::size_t b) const {
        for (std::size_t c = 0; c < p; ++c) {
            if (!und[a][c] || adjacent(b, c) || b == c) continue;
            for (std::size_t d = 0; d < p; ++d)
                if (dir[c][d] && dir[d][b] && adjacent(a, d)) return true;
        }
        return false;
    }
};

Cpdag pdag_to_cpdag(const std::vector<NodeId>& nodes, const Pdag& g) {
    EdgeSet directed;
    std::set<std::pair<NodeId, NodeId>> undirected;
    for (std::size_t a = 0; a < g.p; ++a)
        for (std::size_t b = 0; b < g.p; ++b) {
            if (g.dir[a][b]) directed.insert({nodes[a], nodes[b]});
            if (a < b && g.und[a][b]) undirected.insert({std::min(nodes[a], nodes[b]), std::max(nodes[a], nodes[b])});
        }
    return make_cpdag(nodes, directed, undirected);
}

// next k-combination of indices into a set of size m, lexicographic
bool next_combination(std::vector<std::size_t>& comb, std::size_t m) {
    const std::size_t k = comb.size();
    for (std::size_t i = k; i-- > 0;) {
        if (comb[i] < m - (k - i)) {
            ++comb[i];
            for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

Cpdag pc_skeleton_and_orient(const std::vector<NodeId>& nodes, const CiOracle& independent) {
    const std::size_t p = nodes.size();
    if (p < 2) throw InputError("pc needs at least 2 variables");
    std::vector<std::vector<char>> adj(p, std::vector<char>(p, 1));
    for (std::size_t i = 0; i < p; ++i) adj[i][i] = 0;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sepset;

    for (std::size_t depth = 0;; ++depth) {
        const auto snapshot = adj;  // conditioning sets frozen per depth
        bool depth_possible = false;
        for (std::size_t x = 0; x < p; ++x) {
            for (std::size_t y = 0; y < p; ++y) {
                if (x == y || !adj[x][y]) continue;
                std::vector<std::size_t> pool;
                for (std::size_t z = 0; z < p; ++z)
                    if (z != y && snapshot[x][z]) pool.push_back(z);
                if (pool.size() < depth) continue;
                depth_possible = true;
                if (depth == 0) {
                    if (independent(x, y, {})) {
                        adj[x][y] = adj[y][x] = 0;
                        sepset[{std::min(x, y), std::max(x, y)}] = {};
                    }
                    continue;
                }
                std::vector<std::size_t> comb(depth);
                std::iota(comb.begin(), comb.end(), 0);
                do {
                    std::vector<std::size_t> cond(depth);
                    for (std::size_t k = 0; k < depth; ++k) cond[k] = pool[comb[k]];
                    if (independent(x, y, cond)) {
                        adj[x][y] = adj[y][x] = 0;
                        sepset[{std::min(x, y), std::max(x, y)}] = cond;
                        break;
                    }
                } while (next_combination(comb, pool.size()));
            }
        }
        if (!depth_possible) break;
    }

    Pdag g(p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b)
            if (adj[a][b]) g.und[a][b] = g.und[b][a] = 1;

    // v-structures x -> z <- y whenever z sits outside sepset(x, y); pairs in
    // canonical order, never flipping an existing orientation
    for (std::size_t x = 0; x < p; ++x) {
        for (std::size_t y = x + 1; y < p; ++y) {
            if (adj[x][y]) continue;
            auto it = sepset.find({x, y});
            if (it == sepset.end()) continue;
            for (std::size_t z = 0; z < p; ++z) {
                if (z == x || z == y || !adj[x][z] || !adj[y][z]) continue;
                if (std::find(it->second.begin(), it->second.end(), z) != it->second.end()) continue;
                if (!g.dir[z][x] && (g.und[x][z] || g.dir[x][z])) g.orient(x, z);
                if (!g.dir[z][y] && (g.und[y][z] || g.dir[y][z])) g.orient(y, z);
            }
        }
    }
    g.meek_close();
    return pdag_to_cpdag(nodes, g);
}

}  // namespace

Cpdag pc_stable_with_test(const std::vector<NodeId>& nodes, const CiOracle& independent) {
    return pc_skeleton_and_orient(nodes, independent);
}

Cpdag pc_stable(const DatasetTable& data, double alpha) {
    if (data.cols() < 2) throw InputError("pc needs at least 2 columns");
    FisherZ engine{correlation_matrix(data_matrix(data)), data.rows()};
    const std::vector<NodeId> nodes = data.names();
    CiOracle oracle = [&engine, alpha, &nodes](std::size_t i, std::size_t j,
                                               const std::vector<std::size_t>& s) {
        try {
            return engine.test(i, j, s).second > alpha;
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (pair " + nodes[i] + ", " + nodes[j] + ")");
        }
    };
    return pc_skeleton_and_orient(nodes, oracle);
}

// ---------------------------------------------------------------------------
// lasso with BIC (shared by sortnregress and DirectLiNGAM pruning)

namespace {

Eigen::VectorXd lasso_bic(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y_raw,
                          int grid_points = 30) {
    const Eigen::Index n = x_raw.rows();
    const Eigen::Index k = x_raw.cols();
    if (k == 0) return Eigen::VectorXd();
    Eigen::MatrixXd x = x_raw.rowwise() - x_raw.colwise().mean();
    Eigen::VectorXd y = y_raw.array() - y_raw.mean();
    Eigen::VectorXd scale(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double s = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n));
        scale[j] = s > 0.0 ? s : 1.0;
        x.col(j) /= scale[j];
    }
    const Eigen::MatrixXd gram = x.transpose() * x / static_cast<double>(n);
    const Eigen::VectorXd xty = x.transpose() * y / static_cast<double>(n);
    const double yty = y.squaredNorm();

    const double lmax = xty.cwiseAbs().maxCoeff();
    if (lmax <= 0.0) return Eigen::VectorXd::Zero(k);

    // lasso path proposes supports, BIC scores the OLS refit on each support
    // (post-lasso: penalized RSS would let true-coefficient shrinkage mask the
    // cost of spurious entrants)
    auto refit = [&](const std::vector<Eigen::Index>& support) {
        const Eigen::Index m = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd g(m, m);
        Eigen::VectorXd b(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            b[a] = xty[support[static_cast<std::size_t>(a)]];
            for (Eigen::Index c = 0; c < m; ++c)
                g(a, c) = gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(c)]);
        }
        Eigen::VectorXd coef = (g + 1e-12 * Eigen::MatrixXd::Identity(m, m)).ldlt().solve(b);
        const double rss = std::max(1e-12, yty - static_cast<double>(n) * coef.dot(2.0 * b - g * coef));
        return std::make_pair(coef, rss);
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd best_beta = Eigen::VectorXd::Zero(k);
    double best_bic = std::numeric_limits<double>::infinity();
    std::set<std::vector<Eigen::Index>> scored;
    for (int gi = 0; gi < grid_points; ++gi) {
        const double lambda =
            lmax * std::pow(1e-3, static_cast<double>(gi) / static_cast<double>(grid_points - 1));
        for (int iter = 0; iter < 1000; ++iter) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double gj = gram(j, j);
                if (gj <= 0.0) continue;
                const double rho = xty[j] - gram.col(j).dot(beta) + gj * beta[j];
                const double updated =
                    std::abs(rho) > lambda ? std::copysign(std::abs(rho) - lambda, rho) / gj : 0.0;
                max_change = std::max(max_change, std::abs(updated - beta[j]));
                beta[j] = updated;
            }
            if (max_change < 1e-7) break;
        }
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < k; ++j)
            if (beta[j] != 0.0) support.push_back(j);
        if (!scored.insert(support).second) continue;
        double rss = yty;
        Eigen::VectorXd coef;
        if (!support.empty()) std::tie(coef, rss) = refit(support);
        const double bic = static_cast<double>(n) * std::log(rss / static_cast<double>(n)) +
                           static_cast<double>(support.size()) * std::log(static_cast<double>(n));
        if (bic < best_bic) {
            best_bic = bic;
            best_beta.setZero();
            for (std::size_t s = 0; s < support.size(); ++s) best_beta[support[s]] = coef[static_cast<Eigen::Index>(s)];
        }
    }
    return best_beta.cwiseQuotient(scale);
}

}  // namespace

// ---------------------------------------------------------------------------
// DirectLiNGAM

namespace {

// maximum-entropy approximation of differential entropy for a standardized
// variable (Hyvarinen-Smith constants)
double approx_entropy(const Eigen::VectorXd& u) {
    constexpr double k1 = 79.047;
    constexpr double k2 = 7.4129;
    constexpr double gamma = 0.37457;
    const double n = static_cast<double>(u.size());
    double mean_logcosh = 0.0, mean_uexp = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double v = u[i];
        mean_logcosh += std::log(std::cosh(v));
        mean_uexp += v * std::exp(-0.5 * v * v);
    }
    mean_logcosh /= n;
    mean_uexp /= n;
    return (1.0 + std::log(2.0 * M_PI)) / 2.0 - k1 * (mean_logcosh - gamma) * (mean_logcosh - gamma) -
           k2 * mean_uexp * mean_uexp;
}

Eigen::VectorXd standardize_vector(const Eigen::VectorXd& v) {
    const double m = v.mean();
    Eigen::VectorXd c = v.array() - m;
    const double s = std::sqrt(c.squaredNorm() / static_cast<double>(v.size() - 1));
    if (s > 0.0) c /= s;
    return c;
}

}  // namespace

LingamResult direct_lingam(const DatasetTable& data) {
    if (data.cols() < 2) throw InputError("direct_lingam needs at least 2 columns");
    if (data.rows() < 3) throw InputError("direct_lingam needs at least 3 rows");
    const std::size_t p = data.cols();
    Eigen::MatrixXd x = data_matrix(data);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = standardize_vector(x.col(j));

    std::vector<std::size_t> remaining(p);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> order;

    while (!remaining.empty()) {
        std::size_t root = remaining.front();
        if (remaining.size() > 1) {
            // cache standardized columns and entropies for the current round
            std::map<std::size_t, Eigen::VectorXd> std_col;
            std::map<std::size_t, double> entropy_of;
            for (std::size_t i : remaining) {
                std_col[i] = standardize_vector(x.col(static_cast<Eigen::Index>(i)));
                entropy_of[i] = approx_entropy(std_col[i]);
            }
            double best_score = std::numeric_limits<double>::infinity();
            for (std::size_t i : remaining) {
                double score = 0.0;
                for (std::size_t j : remaining) {
                    if (i == j) continue;
                    const auto& xi = std_col[i];
                    const auto& xj = std_col[j];
                    const double rho = xi.dot(xj) / static_cast<double>(xi.size() - 1);
                    // standardized residuals of each regression direction
                    const double denom = std::sqrt(std::max(1e-12, 1.0 - rho * rho));
                    const Eigen::VectorXd ri_j = (xi - rho * xj) / denom;
                    const Eigen::VectorXd rj_i = (xj - rho * xi) / denom;
                    const double lr = (entropy_of[j] + approx_entropy(ri_j)) -
                                      (entropy_of[i] + approx_entropy(rj_i));
                    const double neg = std::min(0.0, lr);
                    score += neg * neg;
                }
                if (score < best_score) {
                    best_score = score;
                    root = i;
                }
            }
        }
        order.push_back(root);
        // remove the root's effect from the remaining variables
        const Eigen::VectorXd xr = x.col(static_cast<Eigen::Index>(root));
        const double var_r = xr.squaredNorm() / static_cast<double>(xr.size() - 1);
        for (std::size_t j : remaining) {
            if (j == root || var_r <= 0.0) continue;
            const Eigen::VectorXd& xj = x.col(static_cast<Eigen::Index>(j));
            const double cov = xr.dot(xj) / static_cast<double>(xr.size() - 1);
            x.col(static_cast<Eigen::Index>(j)) = xj - (cov / var_r) * xr;
        }
        remaining.erase(std::remove(remaining.begin(), remaining.end(), root), remaining.end());
    }

    // adjacency by BIC-lasso of each variable on its order predecessors
    const Eigen::MatrixXd original = data_matrix(data);
    EdgeSet edges;
    for (std::size_t k = 1; k < order.size(); ++k) {
        Eigen::MatrixXd preds(original.rows(), static_cast<Eigen::Index>(k));
        for (std::size_t m = 0; m < k; ++m)
            preds.col(static_cast<Eigen::Index>(m)) = original.col(static_cast<Eigen::Index>(order[m]));
        const Eigen::VectorXd beta =
            lasso_bic(preds, original.col(static_cast<Eigen::Index>(order[k])));
        for (std::size_t m = 0; m < k; ++m)
            if (beta[static_cast<Eigen::Index>(m)] != 0.0)
                edges.insert({data.name(order[m]), data.name(order[k])});
    }
    LingamResult result;
    for (std::size_t i : order) result.order.push_back(data.name(i));
    result.graph = Digraph(data.names(), edges);
    return result;
}

// ---------------------------------------------------------------------------
// NOTEARS

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a) {
    const Eigen::Index d = a.rows();
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm
    int squarings = 0;
    Eigen::MatrixXd b = a;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        b /= std::pow(2.0, squarings);
    }
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
    for (int k = 1; k <= 40; ++k) {
        term = term * b / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * result.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

double notears_h(const Eigen::MatrixXd& w) {
    return matrix_exp(w.cwiseProduct(w)).trace() - static_cast<double>(w.rows());
}

Eigen::MatrixXd notears_h_grad(const Eigen::MatrixXd& w) {
    return 2.0 * matrix_exp(w.cwiseProduct(w)).transpose().cwiseProduct(w);
}

namespace {

struct NotearsProblem {
    Eigen::MatrixXd gram;  // X'X / n
    double lambda1;
    double rho;
    double alpha;

    // smooth part (loss + penalty terms of the augmented Lagrangian) and its
    // gradient in W
    std::pair<double, Eigen::MatrixXd> smooth(const Eigen::MatrixXd& w) const {
        const Eigen::Index d = w.rows();
        const Eigen::MatrixXd imw = Eigen::MatrixXd::Identity(d, d) - w;
        const double loss = 0.5 * (imw.transpose() * gram * imw).trace();
        const Eigen::MatrixXd loss_grad = -gram * imw;
        const double h = notears_h(w);
        const Eigen::MatrixXd h_grad = notears_h_grad(w);
        const double value = loss + 0.5 * rho * h * h + alpha * h;
        const Eigen::MatrixXd grad = loss_grad + (rho * h + alpha) * h_grad;
        return {value, grad};
    }

    // objective/gradient over theta = [pos; neg] >= 0 with W = pos - neg
    double eval(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::Index d) const {
        const Eigen::Index dd = d * d;
        Eigen::MatrixXd w(d, d);
        for (Eigen::Index i = 0; i < dd; ++i) w(i / d, i % d) = theta[i] - theta[dd + i];
        const auto [value, wgrad] = smooth(w);
        grad.resize(2 * dd);
        for (Eigen::Index i = 0; i < dd; ++i) {
            grad[i] = wgrad(i / d, i % d) + lambda1;
            grad[dd + i] = -wgrad(i / d, i % d) + lambda1;
        }
        return value + lambda1 * theta.sum();
    }
};

// spectral projected gradient on the nonnegative orthant (Barzilai-Borwein
// steps with a nonmonotone Armijo line search)
Eigen::VectorXd spg_minimize(const NotearsProblem& problem, Eigen::VectorXd theta, Eigen::Index d,
                             int max_iter, double tol) {
    Eigen::VectorXd grad;
    double f = problem.eval(theta, grad, d);
    std::vector<double> recent = {f};
    double step = 1.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd projected = (theta - grad).cwiseMax(0.0);
        if ((theta - projected).lpNorm<Eigen::Infinity>() < tol) break;

        const double f_ref = *std::max_element(recent.begin(), recent.end());
        double trial_step = std::clamp(step, 1e-10, 1e10);
        Eigen::VectorXd theta_new;
        Eigen::VectorXd grad_new;
        double f_new = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            theta_new = (theta - trial_step * grad).cwiseMax(0.0);
            const Eigen::VectorXd dir = theta_new - theta;
            f_new = problem.eval(theta_new, grad_new, d);
            if (f_new <= f_ref + 1e-4 * grad.dot(dir) || dir.lpNorm<Eigen::Infinity>() == 0.0) {
                accepted = true;
                break;
            }
            trial_step *= 0.5;
        }
        if (!accepted) break;
        const Eigen::VectorXd s = theta_new - theta;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        step = sy > 1e-16 ? s.dot(s) / sy : 1.0;
        theta = std::move(theta_new);
        grad = std::move(grad_new);
        f = f_new;
        recent.push_back(f);
        if (recent.size() > 10) recent.erase(recent.begin());
    }
    return theta;
}

std::vector<std::size_t> find_cycle(const std::vector<std::vector<char>>& adj) {
    const std::size_t p = adj.size();
    std::vector<int> state(p, 0);  // 0 new, 1 on stack, 2 done
    std::vector<std::size_t> stack;
    std::vector<std::size_t> cycle;
    std::function<bool(std::size_t)> dfs = [&](std::size_t v) {
        state[v] = 1;
        stack.push_back(v);
        for (std::size_t w = 0; w < p; ++w) {
            if (!adj[v][w]) continue;
            if (state[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                cycle.assign(it, stack.end());
                return true;
            }
            if (state[w] == 0 && dfs(w)) return true;
        }
        stack.pop_back();
        state[v] = 2;
        return false;
    };
    for (std::size_t v = 0; v < p; ++v)
        if (state[v] == 0 && dfs(v)) return cycle;
    return {};
}

}  // namespace

Digraph WeightedAdjacency::graph() const {
    EdgeSet edges;
    const Eigen::Index d = weights.rows();
    std::vector<std::vector<char>> support(static_cast<std::size_t>(d),
                                           std::vector<char>(static_cast<std::size_t>(d), 0));
    std::set<Edge> pruned_set(pruned_cycle_edges.begin(), pruned_cycle_edges.end());
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j || std::abs(weights(i, j)) < threshold) continue;
            if (pruned_set.count({nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]}))
                continue;
            support[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            edges.insert({nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]});
        }
    return Digraph(nodes, edges);
}

WeightedAdjacency notears_linear(const DatasetTable& data, const NotearsOptions& options) {
    const Eigen::Index d = static_cast<Eigen::Index>(data.cols());
    if (d < 2) throw InputError("notears needs at least 2 columns");
    Eigen::MatrixXd x = data_matrix(data);
    x.rowwise() -= x.colwise().mean();
    const Eigen::Index n = x.rows();

    NotearsProblem problem;
    problem.gram = x.transpose() * x / static_cast<double>(n);
    problem.lambda1 = options.lambda1;
    problem.rho = 1.0;
    problem.alpha = 0.0;

    const Eigen::Index dd = d * d;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * dd);
    auto w_of = [&](const Eigen::VectorXd& th) {
        Eigen::MatrixXd w(d, d);
        for (Eigen::Index i = 0; i < dd; ++i) w(i / d, i % d) = th[i] - th[dd + i];
        return w;
    };

    double h = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iter; ++iter) {
        Eigen::VectorXd theta_new = theta;
        double h_new = h;
        while (problem.rho < options.rho_max) {
            theta_new = spg_minimize(problem, theta, d, options.inner_max_iter, options.inner_tol);
            h_new = notears_h(w_of(theta_new));
            if (h_new > 0.25 * h)
                problem.rho *= 10.0;
            else
                break;
        }
        theta = theta_new;
        h = h_new;
        problem.alpha += problem.rho * h;
        if (h <= options.h_tol || problem.rho >= options.rho_max) break;
    }

    WeightedAdjacency result;
    result.nodes = data.names();
    result.weights = w_of(theta);
    result.threshold = options.w_threshold;
    result.h_value = h;
    result.converged = h <= options.h_tol;

    // certify the thresholded support acyclic; drop the weakest edge of any
    // remaining cycle
    const std::size_t p = static_cast<std::size_t>(d);
    std::vector<std::vector<char>> support(p, std::vector<char>(p, 0));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            if (i != j && std::abs(result.weights(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j))) >= options.w_threshold)
                support[i][j] = 1;
    for (;;) {
        const auto cycle = find_cycle(support);
        if (cycle.empty()) break;
        double weakest = std::numeric_limits<double>::infinity();
        std::pair<std::size_t, std::size_t> drop{0, 0};
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            const std::size_t a = cycle[k];
            const std::size_t b = cycle[(k + 1) % cycle.size()];
            const double w = std::abs(result.weights(static_cast<Eigen::Index>(a),
                                                     static_cast<Eigen::Index>(b)));
            if (w < weakest) {
                weakest = w;
                drop = {a, b};
            }
        }
        support[drop.first][drop.second] = 0;
        result.pruned_cycle_edges.push_back({result.nodes[drop.first], result.nodes[drop.second]});
    }
    return result;
}

// ---------------------------------------------------------------------------
// sortnregress

Digraph sortnregress(const DatasetTable& data) {
    const std::size_t p = data.cols();
    if (p == 0) throw InputError("sortnregress needs at least 1 column");
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> var(p);
    for (std::size_t j = 0; j < p; ++j)
        var[j] = data.rows() > 1 ? stats::variance(data.column(j)) : 0.0;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return var[a] < var[b]; });

    const Eigen::MatrixXd x = data_matrix(data);
    EdgeSet edges;
    for (std::size_t k = 1; k < p; ++k) {
        Eigen::MatrixXd preds(x.rows(), static_cast<Eigen::Index>(k));
        for (std::size_t m = 0; m < k; ++m)
            preds.col(static_cast<Eigen::Index>(m)) = x.col(static_cast<Eigen::Index>(order[m]));
        const Eigen::VectorXd beta = lasso_bic(preds, x.col(static_cast<Eigen::Index>(order[k])));
        for (std::size_t m = 0; m < k; ++m)
            if (beta[static_cast<Eigen::Index>(m)] != 0.0)
                edges.insert({data.name(order[m]), data.name(order[k])});
    }
    return Digraph(data.names(), edges);
}

// ---------------------------------------------------------------------------
// cpdag_of

Cpdag cpdag_of(const Digraph& dag) {
    if (!dag.is_acyclic()) throw StructuralError("cpdag_of requires an acyclic input");
    const std::size_t p = dag.num_nodes();
    const auto& nodes = dag.nodes();
    std::vector<std::vector<char>> has(p, std::vector<char>(p, 0));
    for (const auto& [src, dst] : dag.edges()) has[dag.index_of(src)][dag.index_of(dst)] = 1;

    Pdag g(p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
            if (has[a][b]) g.und[a][b] = g.und[b][a] = 1;
    // v-structures of the DAG keep their orientation
    for (std::size_t z = 0; z < p; ++z) {
        for (std::size_t x = 0; x < p; ++x) {
            if (!has[x][z]) continue;
            for (std::size_t y = x + 1; y < p; ++y) {
                if (!has[y][z]) continue;
                if (has[x][y] || has[y][x]) continue;
                if (g.und[x][z]) g.orient(x, z);
                if (g.und[y][z]) g.orient(y, z);
            }
        }
    }
    g.meek_close();
    return pdag_to_cpdag(nodes, g);
}

// ---------------------------------------------------------------------------
// algorithm registry

namespace {

Digraph pc_random_member(const DatasetTable& data, Rng& rng) {
    const Cpdag cpdag = pc_stable(data, 0.05);
    try {
        return dag_from_cpdag(cpdag, rng);
    } catch (const StructuralError&) {
        // finite-sample CPDAGs can be non-extendable; fall back to orienting
        // the skeleton along a random order
        const auto perm = rng.permutation(static_cast<std::uint32_t>(cpdag.nodes.size()));
        std::vector<std::size_t> pos(cpdag.nodes.size());
        for (std::size_t i = 0; i < perm.size(); ++i) pos[perm[i]] = i;
        std::unordered_map<NodeId, std::size_t> index;
        for (std::size_t i = 0; i < cpdag.nodes.size(); ++i) index[cpdag.nodes[i]] = i;
        EdgeSet edges;
        auto add_ordered = [&](const NodeId& a, const NodeId& b) {
            if (pos[index[a]] < pos[index[b]])
                edges.insert({a, b});
            else
                edges.insert({b, a});
        };
        for (const auto& [a, b] : cpdag.directed) add_ordered(a, b);
        for (const auto& [a, b] : cpdag.undirected) add_ordered(a, b);
        return Digraph(cpdag.nodes, edges);
    }
}

}  // namespace

std::vector<std::string> algorithm_keys() { return {"pc", "lingam", "notears", "snr", "empty"}; }

Digraph run_algorithm(const std::string& key, const DatasetTable& data, Rng& rng) {
    if (key == "pc") return pc_random_member(data, rng);
    if (key == "lingam") return direct_lingam(data).graph;
    if (key == "notears") return notears_linear(data).graph();
    if (key == "snr") return sortnregress(data);
    if (key == "empty") return Digraph(data.names(), {});
    if (key.rfind("import:", 0) == 0) {
        Digraph g = load_digraph_json(key.substr(7));
        std::set<NodeId> mine(g.nodes().begin(), g.nodes().end());
        std::set<NodeId> theirs(data.names().begin(), data.names().end());
        if (mine != theirs) throw InputError("imported graph nodes do not match data columns");
        return g;
    }
    std::string keys;
    for (const auto& k : algorithm_keys()) keys += (keys.empty() ? "" : ", ") + k;
    throw InputError("unknown algorithm '" + key + "'; registry: " + keys + ", import:<path>");
}

}  // namespace causal
