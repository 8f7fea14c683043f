#include <doctest.h>

#include <cmath>

#include "causalsynth/refline.hpp"
#include "helpers.hpp"

using namespace causal;

TEST_SUITE("refline") {

TEST_CASE("default line matches the documented station layout") {
    LineConfig config;
    config.seed = 7;
    const auto line = generate_line(config, 200);
    CHECK(line.truth.num_nodes() == 98);
    CHECK(line.truth.num_processes() == 10);
    const std::vector<int> expected_sizes = {6, 34, 16, 26, 16};
    for (int station = 1; station <= 5; ++station)
        CHECK(line.truth.nodes_in_station(station).size() ==
              static_cast<std::size_t>(expected_sizes[static_cast<std::size_t>(station - 1)]));
    for (const auto& [src, dst] : line.truth.edges())
        CHECK(line.truth.process_of(src) <= line.truth.process_of(dst));
    CHECK(line.data.rows() == 200);
    CHECK(line.data.cols() >= 98);
}

TEST_CASE("same seed regenerates the identical line and data") {
    LineConfig config;
    config.seed = 12;
    const auto a = generate_line(config, 150);
    const auto b = generate_line(config, 150);
    CHECK(a.truth.edges() == b.truth.edges());
    REQUIRE(a.data.cols() == b.data.cols());
    for (std::size_t c = 0; c < a.data.cols(); ++c) {
        CHECK(a.data.name(c) == b.data.name(c));
        const auto& ca = a.data.column(c);
        const auto& cb = b.data.column(c);
        for (std::size_t r = 0; r < ca.size(); ++r) REQUIRE(ca[r] == cb[r]);
    }
}

TEST_CASE("different seeds give different structure") {
    LineConfig a_cfg;
    a_cfg.seed = 1;
    LineConfig b_cfg;
    b_cfg.seed = 2;
    const auto a = generate_line(a_cfg, 50);
    const auto b = generate_line(b_cfg, 50);
    CHECK(a.truth.edges() != b.truth.edges());
}

TEST_CASE("zero cross density makes the prior the full truth") {
    LineConfig config;
    config.seed = 3;
    config.cross_edge_density = 0.0;
    const auto line = generate_line(config, 100);
    CHECK(line.truth.edges() == line.prior.union_graph().edges());
}

TEST_CASE("prior process graphs equal the truth restricted to each process") {
    LineConfig config;
    config.seed = 9;
    const auto line = generate_line(config, 100);
    for (const auto& pg : line.prior.process_graphs()) {
        const auto sub = line.truth.induced_subgraph(pg.nodes);
        CHECK(sub.edges() == pg.edges);
    }
    // generated values are finite and mechanism columns exist where declared
    for (std::size_t c = 0; c < line.data.cols(); ++c)
        for (double v : line.data.column(c)) REQUIRE(std::isfinite(v));
    for (const auto& m : line.prior.mechanisms()) {
        CHECK(line.data.has_column(m.prediction_column));
        CHECK_FALSE(m.inputs.empty());
    }
}

TEST_CASE("config violations are rejected") {
    LineConfig bad;
    bad.within_process_edge_density = 0.0;
    CHECK_THROWS_AS(generate_line(bad, 10), InputError);
    LineConfig bad2;
    bad2.cross_edge_density = 1.5;
    CHECK_THROWS_AS(generate_line(bad2, 10), InputError);
    LineConfig bad3;
    bad3.station_node_counts = {1};
    bad3.processes_per_station = 2;
    CHECK_THROWS_AS(generate_line(bad3, 10), InputError);
}

TEST_CASE("two-process fixture matches its documented shape") {
    const auto fixture = two_process_fixture();
    CHECK(fixture.truth.edges().size() == 5);
    EdgeSet prior_edges;
    for (const auto& pg : fixture.prior.process_graphs())
        prior_edges.insert(pg.edges.begin(), pg.edges.end());
    CHECK(prior_edges.size() == 3);
    CHECK(fixture.truth.nodes_in_process(1) == std::vector<NodeId>{"X1", "X2", "X3"});
    CHECK(fixture.truth.nodes_in_process(2) == std::vector<NodeId>{"X4", "X5", "X6"});

    const auto a = fixture.sample(100, 5);
    const auto b = fixture.sample(100, 5);
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r) REQUIRE(a.column(c)[r] == b.column(c)[r]);
}

}  // TEST_SUITE
