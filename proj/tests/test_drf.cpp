#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalsynth/drf.hpp"
#include "helpers.hpp"

using namespace causal;

namespace {

// exact Gaussian-kernel MMD^2 (V-statistic, diagonal included) weighted by
// n_L n_R / n^2 -- the quantity the Fourier features approximate
double exact_weighted_mmd(const std::vector<double>& left, const std::vector<double>& right,
                          double bandwidth) {
    auto kernel_mean = [bandwidth](const std::vector<double>& a, const std::vector<double>& b) {
        double sum = 0.0;
        for (double x : a)
            for (double y : b) sum += std::exp(-(x - y) * (x - y) / (2.0 * bandwidth * bandwidth));
        return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    };
    const double n_l = static_cast<double>(left.size());
    const double n_r = static_cast<double>(right.size());
    const double n = n_l + n_r;
    const double mmd2 =
        kernel_mean(left, left) + kernel_mean(right, right) - 2.0 * kernel_mean(left, right);
    return (n_l * n_r) / (n * n) * mmd2;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = causal::stats::mean(ra), mb = causal::stats::mean(rb);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

// hand-built single-predictor forest from (leaf row lists, threshold tree
// shapes); enough for the weight identities
DistributionalForest hand_forest(std::vector<double> response,
                                 const std::vector<std::vector<std::vector<std::uint32_t>>>& tree_leaves,
                                 const std::vector<std::vector<double>>& thresholds) {
    DistributionalForest forest;
    forest.target = "y";
    forest.predictors = {"x"};
    forest.training_response = std::move(response);
    forest.bandwidth = 1.0;
    for (std::size_t t = 0; t < tree_leaves.size(); ++t) {
        Tree tree;
        const auto& leaves = tree_leaves[t];
        if (leaves.size() == 1) {
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0});
            tree.leaves.push_back(leaves[0]);
        } else {
            REQUIRE(leaves.size() == 2);
            tree.nodes.push_back(TreeNode{0, thresholds[t][0], 1, 2, -1});
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0});
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 1});
            tree.leaves.push_back(leaves[0]);
            tree.leaves.push_back(leaves[1]);
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

}  // namespace

TEST_SUITE("drf") {

TEST_CASE("median heuristic hand values") {
    CHECK(median_heuristic_bandwidth({0.0, 1.0}) == doctest::Approx(1.0));
    // pairwise diffs {1, 1, 2}: median 1
    CHECK(median_heuristic_bandwidth({0.0, 1.0, 2.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(median_heuristic_bandwidth({2.0, 2.0, 2.0}), NumericError);
    // tie-heavy data: plain median would be 0, fallback stays positive
    CHECK(median_heuristic_bandwidth({0.0, 0.0, 0.0, 1.0}) > 0.0);
}

TEST_CASE("mmd split score: identical multisets score zero, order is irrelevant") {
    Rng rng(1);
    std::vector<double> freqs(50);
    for (auto& f : freqs) f = rng.normal();
    const std::vector<double> a = {0.3, -1.2, 0.7, 0.3};
    std::vector<double> shuffled = {0.7, 0.3, 0.3, -1.2};
    CHECK(mmd_split_score(a, shuffled, freqs) == doctest::Approx(0.0).epsilon(1e-12));

    const std::vector<double> b = {2.0, -0.5};
    CHECK(mmd_split_score(a, b, freqs) == doctest::Approx(mmd_split_score(b, a, freqs)));
    CHECK(mmd_split_score(a, b, freqs) >= 0.0);
}

TEST_CASE("mmd split score tracks the exact-kernel statistic on separated children") {
    const std::vector<double> left = {0.0, 0.0, 0.0};
    const std::vector<double> right = {10.0, 10.0, 10.0};
    const double bandwidth = 1.0;
    const double exact = exact_weighted_mmd(left, right, bandwidth);
    double mean_score = 0.0;
    const int freq_seeds = 100;
    for (int seed = 0; seed < freq_seeds; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        std::vector<double> freqs(50);
        for (auto& f : freqs) f = rng.normal() / bandwidth;
        mean_score += mmd_split_score(left, right, freqs);
    }
    mean_score /= freq_seeds;
    CHECK(mean_score >= 0.9 * exact);
}

TEST_CASE("fourier scores rank candidate splits like the exact kernel") {
    Rng rng(9);
    const std::size_t n = 200;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = (i % 2 == 0 ? -1.5 : 1.5) + 0.8 * rng.normal();  // bimodal response
    const double bandwidth = median_heuristic_bandwidth(y);

    std::vector<double> fourier_scores, exact_scores;
    for (int split = 0; split < 100; ++split) {
        Rng srng(100 + static_cast<std::uint64_t>(split));
        const auto perm = srng.permutation(static_cast<std::uint32_t>(n));
        const std::size_t cut = 20 + srng.uniform_index(n - 40);
        std::vector<double> left, right;
        for (std::size_t i = 0; i < n; ++i)
            (i < cut ? left : right).push_back(y[perm[i]]);
        std::vector<double> freqs(50);
        for (auto& f : freqs) f = srng.normal() / bandwidth;
        fourier_scores.push_back(mmd_split_score(left, right, freqs));
        exact_scores.push_back(exact_weighted_mmd(left, right, bandwidth));
    }
    CHECK(spearman(fourier_scores, exact_scores) > 0.9);
}

TEST_CASE("config defaults match the documented settings and validate") {
    DrfConfig config;
    CHECK(config.num_trees == 2000);
    CHECK(config.min_node_size == 15);
    CHECK(config.num_fourier_features == 50);
    CHECK(config.subsample_fraction == 0.5);
    CHECK_NOTHROW(config.validate());
    config.min_node_size = 1;
    CHECK_THROWS_AS(config.validate(), InputError);
}

TEST_CASE("step response splits near the step") {
    Rng rng(11);
    const std::size_t n = 2000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(-1.0, 1.0);
        y[i] = x[i] > 0.0 ? 1.0 : 0.0;
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 200;
    config.seed = 5;
    const auto forest = fit_drf(y, preds, config);
    int near = 0;
    for (const auto& tree : forest.trees) {
        REQUIRE_FALSE(tree.nodes.empty());
        const auto& root = tree.nodes.front();
        if (root.split_predictor == 0 && std::abs(root.threshold) <= 0.1) ++near;
    }
    CHECK(near >= static_cast<int>(0.9 * static_cast<double>(forest.trees.size())));
}

TEST_CASE("hand-computable weights: one tree, one leaf") {
    const auto forest = hand_forest({5.0, 6.0, 7.0, 8.0, 9.0}, {{{1, 2, 3, 4}}}, {{}});
    const auto w = drf_weights(forest, {0.0});
    CHECK(w[0] == 0.0);
    for (int i = 1; i <= 4; ++i) CHECK(w[i] == doctest::Approx(0.25));
}

TEST_CASE("hand-computable weights: two trees average their leaf uniforms") {
    // query lands in leaves {1, 2} and {2, 3}
    const auto forest = hand_forest({0.0, 10.0, 20.0, 30.0},
                                    {{{1, 2}, {0, 3}}, {{2, 3}, {0, 1}}},
                                    {{100.0}, {100.0}});
    const auto w = drf_weights(forest, {0.0});
    CHECK(w[1] == doctest::Approx(0.25));
    CHECK(w[2] == doctest::Approx(0.5));
    CHECK(w[3] == doctest::Approx(0.25));
    CHECK(w[0] == 0.0);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("weights are a distribution at random queries of a fitted forest") {
    Rng rng(21);
    const std::size_t n = 500;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] + 0.3 * rng.normal();
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 50;
    config.seed = 2;
    const auto forest = fit_drf(y, preds, config);
    for (int q = 0; q < 100; ++q) {
        const auto w = drf_weights(forest, {rng.uniform(-2.0, 2.0)});
        CHECK(w.minCoeff() >= 0.0);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(drf_weights(forest, {1.0, 2.0}), InputError);
}

TEST_CASE("conditional sampling follows the weight distribution") {
    // point mass
    const auto point = hand_forest({5.0, 42.0}, {{{1}}}, {{}});
    Rng rng(3);
    for (int i = 0; i < 20; ++i) CHECK(conditional_sample(point, {0.0}, rng) == 42.0);

    // multinomial band check against the {0.25, 0.5, 0.25} hand case
    const auto forest = hand_forest({0.0, 10.0, 20.0, 30.0},
                                    {{{1, 2}, {0, 3}}, {{2, 3}, {0, 1}}},
                                    {{100.0}, {100.0}});
    const int draws = 100000;
    std::map<double, int> counts;
    Rng rng2(4);
    for (int i = 0; i < draws; ++i) counts[conditional_sample(forest, {0.0}, rng2)]++;
    const std::map<double, double> expected = {{10.0, 0.25}, {20.0, 0.5}, {30.0, 0.25}};
    for (const auto& [value, p] : expected) {
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        CHECK(std::abs(counts[value] - draws * p) <= 3.0 * sigma);
    }
}

TEST_CASE("conditional mean tracks a linear signal") {
    Rng rng(31);
    const std::size_t n = 2000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] + 0.2 * rng.normal();
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 200;
    config.seed = 17;
    const auto forest = fit_drf(y, preds, config);
    for (double q : {-0.5, 0.0, 0.5}) {
        const auto w = drf_weights(forest, {q});
        double mean = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i)
            mean += w[i] * forest.training_response[static_cast<std::size_t>(i)];
        CHECK(std::abs(mean - q) <= 0.15);
    }
}

TEST_CASE("worker count does not change the fitted forest") {
    Rng rng(43);
    const std::size_t n = 400;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = x[i] * x[i] + 0.3 * rng.normal();
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 30;
    config.seed = 11;
    setenv("CAUSALSYNTH_WORKERS", "1", 1);
    const auto serial = fit_drf(y, preds, config);
    setenv("CAUSALSYNTH_WORKERS", "4", 1);
    const auto pooled = fit_drf(y, preds, config);
    unsetenv("CAUSALSYNTH_WORKERS");
    REQUIRE(serial.trees.size() == pooled.trees.size());
    for (std::size_t t = 0; t < serial.trees.size(); ++t) {
        REQUIRE(serial.trees[t].nodes.size() == pooled.trees[t].nodes.size());
        for (std::size_t k = 0; k < serial.trees[t].nodes.size(); ++k)
            CHECK(serial.trees[t].nodes[k].threshold == pooled.trees[t].nodes[k].threshold);
        CHECK(serial.trees[t].leaves == pooled.trees[t].leaves);
    }
}

TEST_CASE("identical seeds grow bit-identical forests") {
    Rng rng(41);
    const std::size_t n = 300;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = std::sin(x[i]) + 0.2 * rng.normal();
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 40;
    config.seed = 77;
    const auto a = fit_drf(y, preds, config);
    const auto b = fit_drf(y, preds, config);
    REQUIRE(a.trees.size() == b.trees.size());
    CHECK(a.bandwidth == b.bandwidth);
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
        for (std::size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
            CHECK(a.trees[t].nodes[k].split_predictor == b.trees[t].nodes[k].split_predictor);
            CHECK(a.trees[t].nodes[k].threshold == b.trees[t].nodes[k].threshold);
        }
        CHECK(a.trees[t].leaves == b.trees[t].leaves);
    }
}

TEST_CASE("independent response keeps the conditional close to the marginal") {
    Rng rng(51);
    const std::size_t n = 5000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    PredictorSet preds;
    preds.names = {"x"};
    preds.columns = {&x};
    DrfConfig config;
    config.num_trees = 300;
    config.seed = 6;
    // split-selection reuses the rows that fill the leaves, so tiny leaves
    // latch onto spurious sample dependence; the marginal-recovery check runs
    // at a leaf size that smooths that out
    config.min_node_size = 80;
    const auto forest = fit_drf(y, preds, config);

    std::vector<double> sorted_y(y);
    std::sort(sorted_y.begin(), sorted_y.end());
    std::vector<std::size_t> rank(n);  // position of row i's response in the sort
    {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
        for (std::size_t i = 0; i < n; ++i) rank[idx[i]] = i;
    }
    double mean_ks = 0.0;
    for (int q = 0; q < 20; ++q) {
        const auto w = drf_weights(forest, {rng.uniform(-2.0, 2.0)});
        // weighted conditional CDF against the marginal ECDF, sup over the
        // sorted support
        std::vector<double> weight_at(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) weight_at[rank[i]] = w[static_cast<Eigen::Index>(i)];
        double acc = 0.0, sup = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weight_at[i];
            sup = std::max(sup, std::abs(acc - static_cast<double>(i + 1) / static_cast<double>(n)));
        }
        mean_ks += sup;
    }
    mean_ks /= 20.0;
    CHECK(mean_ks < 0.1);
}

}  // TEST_SUITE
