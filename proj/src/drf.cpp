#include "causalsynth/drf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace causal {

void DrfConfig::validate() const {
    if (num_trees < 1) throw InputError("num_trees must be >= 1");
    if (min_node_size < 2) throw InputError("min_node_size must be >= 2");
    if (num_fourier_features < 1) throw InputError("num_fourier_features must be >= 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
        throw InputError("subsample_fraction must be in (0, 1]");
    if (max_split_candidates < 1) throw InputError("max_split_candidates must be >= 1");
}

const std::vector<std::uint32_t>& Tree::route(const std::vector<double>& query) const {
    std::int32_t at = 0;
    for (;;) {
        const TreeNode& node = nodes[static_cast<std::size_t>(at)];
        if (node.split_predictor < 0) return leaves[static_cast<std::size_t>(node.leaf)];
        at = query[static_cast<std::size_t>(node.split_predictor)] <= node.threshold ? node.left
                                                                                     : node.right;
    }
}

double median_heuristic_bandwidth(const std::vector<double>& response, std::uint64_t seed,
                                  std::size_t cap) {
    if (response.size() < 2) throw InputError("bandwidth needs at least 2 values");
    std::vector<double> values;
    if (response.size() > cap) {
        Rng rng(seed);
        const auto pick = rng.sample_without_replacement(static_cast<std::uint32_t>(response.size()),
                                                         static_cast<std::uint32_t>(cap));
        values.reserve(cap);
        for (auto i : pick) values.push_back(response[i]);
    } else {
        values = response;
    }
    std::vector<double> diffs;
    diffs.reserve(values.size() * (values.size() - 1) / 2);
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            diffs.push_back(std::abs(values[i] - values[j]));
    std::sort(diffs.begin(), diffs.end());
    const std::size_t m = diffs.size();
    double median = m % 2 == 1 ? diffs[m / 2] : 0.5 * (diffs[m / 2 - 1] + diffs[m / 2]);
    if (median <= 0.0) {
        // heavy ties: take the median of the strictly positive differences
        auto first_pos = std::upper_bound(diffs.begin(), diffs.end(), 0.0);
        if (first_pos == diffs.end())
            throw NumericError("degenerate response: all values identical");
        const std::size_t k = static_cast<std::size_t>(diffs.end() - first_pos);
        median = *(first_pos + static_cast<std::ptrdiff_t>(k / 2));
    }
    return median;
}

double mmd_split_score(const std::vector<double>& left, const std::vector<double>& right,
                       const std::vector<double>& frequencies) {
    if (left.empty() || right.empty()) throw InputError("mmd_split_score needs nonempty children");
    const std::size_t b = frequencies.size();
    Eigen::VectorXd mean_l = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * b));
    Eigen::VectorXd mean_r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * b));
    const double scale = 1.0 / std::sqrt(static_cast<double>(b));
    for (double y : left)
        for (std::size_t k = 0; k < b; ++k) {
            const double a = frequencies[k] * y;
            mean_l[static_cast<Eigen::Index>(2 * k)] += std::cos(a);
            mean_l[static_cast<Eigen::Index>(2 * k + 1)] += std::sin(a);
        }
    for (double y : right)
        for (std::size_t k = 0; k < b; ++k) {
            const double a = frequencies[k] * y;
            mean_r[static_cast<Eigen::Index>(2 * k)] += std::cos(a);
            mean_r[static_cast<Eigen::Index>(2 * k + 1)] += std::sin(a);
        }
    mean_l *= scale / static_cast<double>(left.size());
    mean_r *= scale / static_cast<double>(right.size());
    const double n_l = static_cast<double>(left.size());
    const double n_r = static_cast<double>(right.size());
    const double n = n_l + n_r;
    return (n_l * n_r) / (n * n) * (mean_l - mean_r).squaredNorm();
}

namespace {

struct TreeBuilder {
    const std::vector<double>& response;
    const std::vector<const std::vector<double>*>& columns;
    const DrfConfig& config;
    double freq_scale;  // 1 / bandwidth
    int mtry;
    Rng rng;
    Tree tree;

    std::int32_t build(std::vector<std::uint32_t>& rows) {
        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (rows.size() < 2 * static_cast<std::size_t>(config.min_node_size)) {
            make_leaf(id, rows);
            return id;
        }
        // one frequency draw per split search
        const std::size_t b = static_cast<std::size_t>(config.num_fourier_features);
        std::vector<double> freqs(b);
        for (auto& f : freqs) f = rng.normal() * freq_scale;

        // feature sums phi(y_i) per row; scaled feature map folded into the
        // score at the end
        Eigen::MatrixXd phi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(2 * b));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double y = response[rows[i]];
            for (std::size_t k = 0; k < b; ++k) {
                const double a = freqs[k] * y;
                phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k)) = std::cos(a);
                phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * k + 1)) = std::sin(a);
            }
        }
        const Eigen::VectorXd total = phi.colwise().sum().transpose();

        const auto tried = rng.sample_without_replacement(static_cast<std::uint32_t>(columns.size()),
                                                          static_cast<std::uint32_t>(mtry));
        double best_score = 0.0;
        int best_predictor = -1;
        double best_threshold = 0.0;
        std::vector<std::uint32_t> order(rows.size());
        Eigen::VectorXd left_sum(static_cast<Eigen::Index>(2 * b));
        const double n_node = static_cast<double>(rows.size());
        for (std::uint32_t p : tried) {
            const auto& col = *columns[p];
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(), [&](std::uint32_t a2, std::uint32_t b2) {
                const double va = col[rows[a2]], vb = col[rows[b2]];
                return va != vb ? va < vb : rows[a2] < rows[b2];
            });
            // candidate cut positions at quantile steps; midpoint thresholds,
            // skipping tied boundaries
            const int cand = std::min<int>(config.max_split_candidates,
                                           static_cast<int>(rows.size()) - 1);
            left_sum.setZero();
            std::size_t consumed = 0;
            for (int c = 1; c <= cand; ++c) {
                const std::size_t pos = static_cast<std::size_t>(
                    static_cast<double>(c) * n_node / static_cast<double>(cand + 1));
                if (pos < 1 || pos >= rows.size()) continue;
                while (consumed < pos) {
                    left_sum += phi.row(static_cast<Eigen::Index>(order[consumed])).transpose();
                    ++consumed;
                }
                const double lo = col[rows[order[pos - 1]]];
                const double hi = col[rows[order[pos]]];
                if (!(lo < hi)) continue;
                const double n_l = static_cast<double>(pos);
                const double n_r = n_node - n_l;
                const Eigen::VectorXd diff = left_sum / n_l - (total - left_sum) / n_r;
                const double score = (n_l * n_r) / (n_node * n_node) * diff.squaredNorm() /
                                     static_cast<double>(b);
                if (score > best_score) {
                    best_score = score;
                    best_predictor = static_cast<int>(p);
                    best_threshold = 0.5 * (lo + hi);
                }
            }
        }
        if (best_predictor < 0) {
            make_leaf(id, rows);
            return id;
        }
        std::vector<std::uint32_t> left_rows, right_rows;
        const auto& col = *columns[static_cast<std::size_t>(best_predictor)];
        for (std::uint32_t r : rows)
            (col[r] <= best_threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const std::int32_t left_id = build(left_rows);
        const std::int32_t right_id = build(right_rows);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.split_predictor = best_predictor;
        node.threshold = best_threshold;
        node.left = left_id;
        node.right = right_id;
        return id;
    }

    void make_leaf(std::int32_t id, std::vector<std::uint32_t>& rows) {
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.leaf = static_cast<std::int32_t>(tree.leaves.size());
        tree.leaves.push_back(std::move(rows));
    }
};

}  // namespace

DistributionalForest fit_drf(const std::vector<double>& response, const PredictorSet& predictor_table,
                             DrfConfig config) {
    config.validate();
    if (predictor_table.size() == 0) throw InputError("fit_drf needs at least one predictor");
    const std::size_t n = response.size();
    if (n < 2 * static_cast<std::size_t>(config.min_node_size))
        throw InputError("fit_drf needs at least 2*min_node_size rows");
    for (const auto* col : predictor_table.columns)
        if (col->size() != n) throw InputError("predictor/response length mismatch");

    DistributionalForest forest;
    forest.target = "";
    forest.predictors = predictor_table.names;
    forest.training_response = response;
    forest.config = config;
    forest.bandwidth = config.bandwidth > 0.0
                           ? config.bandwidth
                           : median_heuristic_bandwidth(response, Rng::derive_seed(config.seed, 0x9d));
    const int mtry = config.mtry > 0
                         ? std::min<int>(config.mtry, static_cast<int>(predictor_table.size()))
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(predictor_table.size()))));
    const std::size_t subsample =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(
                                     config.subsample_fraction * static_cast<double>(n))));

    forest.trees.resize(static_cast<std::size_t>(config.num_trees));
    parallel_for(static_cast<std::size_t>(config.num_trees), [&](std::size_t t) {
        TreeBuilder builder{response,
                            predictor_table.columns,
                            config,
                            1.0 / forest.bandwidth,
                            mtry,
                            Rng(Rng::derive_seed(config.seed, t + 1)),
                            Tree{}};
        auto rows32 = builder.rng.sample_without_replacement(static_cast<std::uint32_t>(n),
                                                             static_cast<std::uint32_t>(subsample));
        std::sort(rows32.begin(), rows32.end());
        builder.build(rows32);
        forest.trees[t] = std::move(builder.tree);
    });
    return forest;
}

Eigen::VectorXd drf_weights(const DistributionalForest& forest, const std::vector<double>& query) {
    if (query.size() != forest.predictors.size())
        throw InputError("query has " + std::to_string(query.size()) + " values, forest expects " +
                         std::to_string(forest.predictors.size()));
    for (double v : query)
        if (!std::isfinite(v)) throw InputError("non-finite query value");
    Eigen::VectorXd weights =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(forest.training_response.size()));
    const double n_trees = static_cast<double>(forest.trees.size());
    for (const auto& tree : forest.trees) {
        const auto& leaf = tree.route(query);
        const double w = 1.0 / (n_trees * static_cast<double>(leaf.size()));
        for (std::uint32_t row : leaf) weights[static_cast<Eigen::Index>(row)] += w;
    }
    return weights;
}

double conditional_sample(const DistributionalForest& forest, const std::vector<double>& query,
                          Rng& rng) {
    if (query.size() != forest.predictors.size())
        throw InputError("query has " + std::to_string(query.size()) + " values, forest expects " +
                         std::to_string(forest.predictors.size()));
    for (double v : query)
        if (!std::isfinite(v)) throw InputError("non-finite query value");
    const std::size_t t = rng.uniform_index(forest.trees.size());
    const auto& leaf = forest.trees[t].route(query);
    const std::uint32_t row = leaf[rng.uniform_index(leaf.size())];
    return forest.training_response[row];
}

}  // namespace causal
