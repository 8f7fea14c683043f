#pragma once

#include <functional>

#include "causalsynth/dataset.hpp"
#include "causalsynth/graph.hpp"

namespace causal {

// Seeded synthetic assembly line: layered topology with stations of two
// consecutive processes each, additive mechanisms, and a prior that withholds
// the cross-process edges so the learning step has work to do.
struct LineConfig {
    std::vector<int> station_node_counts = {6, 34, 16, 26, 16};
    int processes_per_station = 2;
    double within_process_edge_density = 0.3;  // in (0, 1]
    double cross_edge_density = 0.01;          // in [0, 1]; 0 means no cross edges
    enum class Mechanism { linear, spline_nonlinear, mixed };
    Mechanism mechanism_family = Mechanism::spline_nonlinear;
    enum class Noise { gaussian, uniform, mixed };
    Noise noise_family = Noise::mixed;
    double mechanism_fraction = 0.5;  // share of eligible nodes given a known mechanism
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedLine {
    LayeredDag truth;      // includes the cross-process edges
    PriorKnowledge prior;  // within-process graphs plus known mechanisms only
    DatasetTable data;     // node columns plus mech_* prediction columns
};

GeneratedLine generate_line(const LineConfig& config, std::size_t rows = 15581);

// Six-node two-process demo line (three nodes per process, one cross pair of
// edges) with nonlinear additive mechanisms; the workhorse fixture of the
// cross-process learning tests.
struct TwoProcessFixture {
    LayeredDag truth;
    PriorKnowledge prior;
    std::function<DatasetTable(std::size_t rows, std::uint64_t seed)> sample;
};

TwoProcessFixture two_process_fixture();

// Two unconnected three-node processes; cross-process learning should come
// back empty on its data.
TwoProcessFixture independent_process_fixture();

}  // namespace causal
