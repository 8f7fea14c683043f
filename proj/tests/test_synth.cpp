#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "causalsynth/discovery.hpp"
#include "causalsynth/synth.hpp"
#include "helpers.hpp"

using namespace causal;

namespace {

LayeredDag chain_dag() {
    return LayeredDag({"a", "b", "c"}, {1, 1, 1}, {1}, {{"a", "b"}, {"b", "c"}});
}

DatasetTable chain_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal();
        b[i] = 0.9 * a[i] + 0.6 * rng.normal();
        c[i] = 0.9 * b[i] + 0.6 * rng.normal();
    }
    DatasetTable data;
    data.add_column("a", std::move(a));
    data.add_column("b", std::move(b));
    data.add_column("c", std::move(c));
    return data;
}

PipelineConfig small_config(std::uint64_t seed, int trees = 120) {
    PipelineConfig config;
    config.seed = seed;
    config.drf.num_trees = trees;
    return config;
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "causalsynth_synth_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("silverman bandwidth formula and constant-column degeneracy") {
    std::vector<double> col = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
    std::vector<double> sorted(col);
    const double iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    const double expected =
        0.9 * std::min(stats::sd(col), iqr / 1.34) * std::pow(8.0, -0.2);
    CHECK(silverman_bandwidth(col) == doctest::Approx(expected));
    CHECK(silverman_bandwidth(std::vector<double>(10, 2.0)) == 0.0);
    // tied quartiles but non-constant: bandwidth stays positive
    std::vector<double> spiky(100, 1.0);
    spiky[0] = 0.0;
    spiky[99] = 2.0;
    CHECK(silverman_bandwidth(spiky) > 0.0);
}

TEST_CASE("fit_pipeline structure: edgeless graph is all sources") {
    LayeredDag dag({"a", "b", "c"}, {1, 1, 1}, {1}, {});
    DatasetTable data = chain_data(100, 1);
    const auto model = fit_pipeline(data, dag, small_config(0, 40));
    CHECK(model.sources().size() == 3);
    CHECK(model.conditionals().empty());
}

TEST_CASE("fit_pipeline structure: chain has one source and two forests") {
    const auto model = fit_pipeline(chain_data(200, 2), chain_dag(), small_config(0, 40));
    CHECK(model.sources().size() == 1);
    CHECK(model.sources().count("a") == 1);
    REQUIRE(model.conditionals().size() == 2);
    CHECK(model.conditionals().at("b").predictors == std::vector<NodeId>{"a"});
    CHECK(model.conditionals().at("c").predictors == std::vector<NodeId>{"b"});
}

TEST_CASE("fit_pipeline lists every missing column") {
    DatasetTable data;
    data.add_column("a", std::vector<double>(50, 1.0));
    CHECK_THROWS_WITH_AS(fit_pipeline(data, chain_dag(), small_config(0)),
                         doctest::Contains("b"), InputError);
}

TEST_CASE("sample boundaries and point-mass propagation") {
    const auto data = chain_data(400, 3);
    const auto model = fit_pipeline(data, chain_dag(), small_config(9, 80));
    Rng rng(1);
    CHECK_THROWS_AS(sample(model, 0, rng), InputError);
    const auto one = sample(model, 1, rng);
    CHECK(one.rows() == 1);
    CHECK(one.cols() == 3);

    const auto synth = sample(model, 500, rng);
    // non-source draws are exact training values
    std::set<double> b_values(data.column("b").begin(), data.column("b").end());
    std::set<double> c_values(data.column("c").begin(), data.column("c").end());
    for (double v : synth.column("b")) CHECK(b_values.count(v) == 1);
    for (double v : synth.column("c")) CHECK(c_values.count(v) == 1);
    // source draws stay within the jittered training support
    const auto& spec = model.sources().at("a");
    const auto [lo, hi] = std::minmax_element(spec.training_column.begin(), spec.training_column.end());
    for (double v : synth.column("a")) {
        CHECK(v >= *lo - 5.0 * spec.bandwidth);
        CHECK(v <= *hi + 5.0 * spec.bandwidth);
        CHECK(std::isfinite(v));
    }
}

TEST_CASE("degenerate conditionals propagate their point mass") {
    // hand-built model: forest for b always lands in a single-row leaf
    LayeredDag dag({"a", "b"}, {1, 1}, {1}, {{"a", "b"}});
    SmoothBootstrapSpec source;
    source.training_column = {0.0, 1.0, 2.0};
    source.bandwidth = 0.1;
    DistributionalForest forest;
    forest.target = "b";
    forest.predictors = {"a"};
    forest.training_response = {7.5, 7.5, 7.5};
    forest.bandwidth = 1.0;
    Tree tree;
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0});
    tree.leaves.push_back({0, 1, 2});
    forest.trees.push_back(tree);
    std::map<NodeId, SmoothBootstrapSpec> sources;
    sources.emplace("a", source);
    std::map<NodeId, DistributionalForest> conditionals;
    conditionals.emplace("b", forest);
    PipelineModel model(dag, {"a", "b"}, std::move(sources), std::move(conditionals), FitMeta{});
    Rng rng(5);
    const auto synth = sample(model, 50, rng);
    for (double v : synth.column("b")) CHECK(v == 7.5);
}

TEST_CASE("ks_statistic exact values and brute-force oracle") {
    CHECK(ks_statistic({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(ks_statistic({0.0, 1.0}, {10.0, 11.0}) == 1.0);

    const std::vector<double> a = {1.0, 2.0, 3.0};
    const std::vector<double> b = {2.0, 3.0, 4.0};
    // oracle: evaluate both ECDFs at every pooled point
    double oracle = 0.0;
    for (double t : {1.0, 2.0, 3.0, 4.0, 0.5, 3.5}) {
        double fa = 0.0, fb = 0.0;
        for (double v : a) fa += v <= t ? 1.0 : 0.0;
        for (double v : b) fb += v <= t ? 1.0 : 0.0;
        oracle = std::max(oracle, std::abs(fa - fb) / 3.0);
    }
    CHECK(oracle == doctest::Approx(1.0 / 3.0));
    CHECK(ks_statistic(a, b) == doctest::Approx(oracle));
    CHECK_THROWS_AS(ks_statistic({}, {1.0}), InputError);
}

TEST_CASE("fidelity against the generating model stays at two-sample noise") {
    const auto data = chain_data(3000, 7);
    const auto model = fit_pipeline(data, chain_dag(), small_config(11, 150));
    Rng rng(2);
    const DatasetTable first = sample(model, 5000, rng);
    Rng rng2(3);
    const auto report = fidelity_report(first, model, 5000, rng2);
    REQUIRE(report.entries.size() == 3);
    for (const auto& e : report.entries) CHECK(e.ks < 0.05);
    // ordering is descending
    for (std::size_t i = 1; i < report.entries.size(); ++i)
        CHECK(report.entries[i - 1].ks >= report.entries[i].ks);
}

TEST_CASE("fidelity of the fitted pipeline against its training data") {
    const auto data = chain_data(4000, 13);
    const auto model = fit_pipeline(data, chain_dag(), small_config(17, 200));
    Rng rng(4);
    const auto report = fidelity_report(data, model, 5000, rng);
    CHECK(report.max_non_source < 0.1);
    CHECK(report.mean_non_source <= report.max_non_source);
    CHECK(report.min_non_source >= 0.0);

    const auto path = (temp_dir() / "fidelity.json").string();
    save_fidelity_json(report, path);
    std::ifstream check(path);
    CHECK(check.good());
}

TEST_CASE("markov check on a linear-gaussian toy (seeded)") {
    // diamond with a tail: a -> b, a -> c, b -> d, c -> d, d -> e
    LayeredDag dag({"a", "b", "c", "d", "e"}, {1, 1, 1, 1, 1}, {1},
                   {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}, {"d", "e"}});
    Rng gen(19);
    const std::size_t n = 2000;
    std::vector<double> a(n), b(n), c(n), d(n), e(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = gen.normal();
        b[i] = 0.8 * a[i] + gen.normal();
        c[i] = -0.7 * a[i] + gen.normal();
        d[i] = 0.6 * b[i] + 0.6 * c[i] + gen.normal();
        e[i] = 0.9 * d[i] + gen.normal();
    }
    DatasetTable data;
    data.add_column("a", a);
    data.add_column("b", b);
    data.add_column("c", c);
    data.add_column("d", d);
    data.add_column("e", e);
    const auto model = fit_pipeline(data, dag, small_config(23, 150));
    Rng rng(6);
    const auto synth = sample(model, 4000, rng);

    const auto digraph = dag.as_digraph();
    const auto& nodes = digraph.nodes();
    int implied = 0, accepted = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            std::vector<NodeId> rest;
            for (std::size_t k = 0; k < nodes.size(); ++k)
                if (k != i && k != j) rest.push_back(nodes[k]);
            for (std::size_t mask = 0; mask < (1u << rest.size()); ++mask) {
                std::vector<NodeId> cond;
                for (std::size_t k = 0; k < rest.size(); ++k)
                    if (mask & (1u << k)) cond.push_back(rest[k]);
                if (!d_separated(digraph, {nodes[i]}, {nodes[j]}, cond)) continue;
                ++implied;
                if (fisher_z_test(synth, nodes[i], nodes[j], cond, 0.01).independent) ++accepted;
            }
        }
    }
    REQUIRE(implied > 0);
    CHECK(static_cast<double>(accepted) >= 0.9 * static_cast<double>(implied));
}

TEST_CASE("cell pipelines from a merged graph partition the node set") {
    // two stations, two processes each, one node per process
    LayeredDag merged({"a", "b", "c", "d"}, {1, 2, 3, 4}, {1, 1, 2, 2},
                      {{"a", "b"}, {"b", "c"}, {"c", "d"}});
    Rng gen(29);
    const std::size_t n = 300;
    std::vector<double> a(n), b(n), c(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = gen.normal();
        b[i] = a[i] + 0.5 * gen.normal();
        c[i] = b[i] + 0.5 * gen.normal();
        d[i] = c[i] + 0.5 * gen.normal();
    }
    DatasetTable data;
    data.add_column("a", a);
    data.add_column("b", b);
    data.add_column("c", c);
    data.add_column("d", d);
    const auto cells = fit_cell_pipelines(data, merged, small_config(31, 40));
    REQUIRE(cells.size() == 2);
    std::set<NodeId> seen;
    for (const auto& [station, model] : cells) {
        for (const auto& v : model.dag().nodes()) CHECK(seen.insert(v).second);
        // cross-station edge c->d ... b->c is dropped, within-station kept
    }
    CHECK(seen.size() == 4);
    CHECK(cells.at(1).dag().edges() == EdgeSet{{"a", "b"}});
    CHECK(cells.at(2).dag().edges() == EdgeSet{{"c", "d"}});
    // a station of sources only yields zero forests
    LayeredDag loose({"p", "q"}, {1, 2}, {1, 1}, {});
    DatasetTable pq;
    pq.add_column("p", data.column("a"));
    pq.add_column("q", data.column("b"));
    const auto single = fit_cell_pipelines(pq, loose, small_config(37, 40));
    CHECK(single.at(1).conditionals().empty());
}

TEST_CASE("model container round trip reproduces the sample stream") {
    const auto data = chain_data(300, 41);
    const auto model = fit_pipeline(data, chain_dag(), small_config(43, 60));
    const auto path = (temp_dir() / "model.bin").string();
    save_model(model, path);
    const auto loaded = load_model(path);

    CHECK(loaded.dag().nodes() == model.dag().nodes());
    CHECK(loaded.dag().edges() == model.dag().edges());
    CHECK(loaded.order() == model.order());
    CHECK(loaded.meta().data_fingerprint == model.meta().data_fingerprint);

    Rng rng_a(42), rng_b(42);
    const auto sample_a = sample(model, 200, rng_a);
    const auto sample_b = sample(loaded, 200, rng_b);
    for (std::size_t cindex = 0; cindex < sample_a.cols(); ++cindex) {
        const auto& ca = sample_a.column(cindex);
        const auto& cb = sample_b.column(cindex);
        REQUIRE(ca.size() == cb.size());
        for (std::size_t r = 0; r < ca.size(); ++r) CHECK(ca[r] == cb[r]);
    }
}

TEST_CASE("container corruption, truncation, and version drift are distinct errors") {
    const auto data = chain_data(200, 47);
    const auto model = fit_pipeline(data, chain_dag(), small_config(53, 40));
    const auto base = (temp_dir() / "container.bin").string();
    save_model(model, base);

    auto bytes = [&]() {
        std::ifstream in(base, std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }();

    // flip one payload byte -> checksum error
    {
        auto corrupted = bytes;
        corrupted[corrupted.size() / 2] ^= 0x40;
        const auto path = (temp_dir() / "corrupt.bin").string();
        std::ofstream(path, std::ios::binary).write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
        try {
            load_model(path);
            FAIL("corruption not detected");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::checksum);
        }
    }
    // bump the version field -> version error naming both versions
    {
        auto future = bytes;
        future[8] = 9;  // little-endian u32 version right after the magic
        const auto path = (temp_dir() / "future.bin").string();
        std::ofstream(path, std::ios::binary).write(future.data(), static_cast<std::streamsize>(future.size()));
        try {
            load_model(path);
            FAIL("version drift not detected");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::version);
            CHECK(std::string(e.what()).find("9") != std::string::npos);
            CHECK(std::string(e.what()).find("1") != std::string::npos);
        }
    }
    // cut the file short -> truncation error
    {
        auto cut = bytes;
        cut.resize(cut.size() / 3);
        const auto path = (temp_dir() / "short.bin").string();
        std::ofstream(path, std::ios::binary).write(cut.data(), static_cast<std::streamsize>(cut.size()));
        try {
            load_model(path);
            FAIL("truncation not detected");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::truncated);
        }
    }
}

TEST_CASE("data fingerprints move with the data") {
    const auto a = chain_data(100, 59);
    const auto b = chain_data(100, 61);
    const std::vector<NodeId> cols = {"a", "b", "c"};
    CHECK(data_fingerprint(a, cols) != data_fingerprint(b, cols));
    CHECK(data_fingerprint(a, cols) == data_fingerprint(a, cols));
}

}  // TEST_SUITE
