#include "causalsynth/refline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace causal {

void LineConfig::validate() const {
    if (station_node_counts.empty()) throw InputError("station_node_counts must be nonempty");
    for (int c : station_node_counts)
        if (c < processes_per_station)
            throw InputError("each station needs at least one node per process");
    if (processes_per_station < 1) throw InputError("processes_per_station must be >= 1");
    if (!(within_process_edge_density > 0.0 && within_process_edge_density <= 1.0))
        throw InputError("within_process_edge_density must be in (0, 1]");
    if (!(cross_edge_density >= 0.0 && cross_edge_density <= 1.0))
        throw InputError("cross_edge_density must be in [0, 1]");
    if (!(mechanism_fraction >= 0.0 && mechanism_fraction <= 1.0))
        throw InputError("mechanism_fraction must be in [0, 1]");
}

namespace {

using MechanismFn = std::function<double(double)>;

MechanismFn draw_linear(Rng& rng) {
    const double w = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
    return [w](double x) { return w * x; };
}

MechanismFn draw_nonlinear(Rng& rng) {
    const double a = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.9, 1.7);
    const double b = rng.uniform(0.8, 1.5);
    switch (rng.uniform_index(3)) {
        case 0:
            return [a, b](double x) { return a * std::tanh(b * x); };
        case 1:
            return [a, b](double x) { return a * std::sin(b * x); };
        default:
            return [a, b](double x) { return a * b * x / (1.0 + std::abs(x)); };
    }
}

MechanismFn draw_mechanism(LineConfig::Mechanism family, Rng& rng, std::size_t fan_in) {
    MechanismFn f;
    switch (family) {
        case LineConfig::Mechanism::linear:
            f = draw_linear(rng);
            break;
        case LineConfig::Mechanism::spline_nonlinear:
            f = draw_nonlinear(rng);
            break;
        case LineConfig::Mechanism::mixed:
            f = rng.uniform() < 0.5 ? draw_linear(rng) : draw_nonlinear(rng);
            break;
    }
    if (fan_in > 1) {
        const double shrink = 1.0 / std::sqrt(static_cast<double>(fan_in));
        MechanismFn inner = std::move(f);
        f = [inner, shrink](double x) { return shrink * inner(x); };
    }
    return f;
}

struct NoiseSpec {
    bool gaussian = true;
    double scale = 1.0;

    double draw(Rng& rng) const {
        return gaussian ? scale * rng.normal() : rng.uniform(-scale, scale);
    }
};

NoiseSpec draw_noise(LineConfig::Noise family, Rng& rng) {
    NoiseSpec spec;
    switch (family) {
        case LineConfig::Noise::gaussian:
            spec.gaussian = true;
            spec.scale = rng.uniform(0.4, 1.0);
            break;
        case LineConfig::Noise::uniform:
            spec.gaussian = false;
            spec.scale = rng.uniform(0.7, 1.7);
            break;
        case LineConfig::Noise::mixed:
            spec.gaussian = rng.uniform() < 0.5;
            spec.scale = spec.gaussian ? rng.uniform(0.4, 1.0) : rng.uniform(0.7, 1.7);
            break;
    }
    return spec;
}

std::string node_name(int station, int process, int global_index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "Station%d_Process%02d_x%03d", station, process, global_index);
    return buf;
}

}  // namespace

GeneratedLine generate_line(const LineConfig& config, std::size_t rows) {
    config.validate();
    if (rows < 1) throw InputError("rows must be >= 1");

    Rng structure_rng(Rng::derive_seed(config.seed, 1));
    Rng mechanism_rng(Rng::derive_seed(config.seed, 2));
    Rng data_rng(Rng::derive_seed(config.seed, 3));

    // carve station node counts into consecutive processes
    std::vector<ProcessGraph> processes;
    std::vector<NodeId> nodes;
    std::vector<int> process_of;
    int process_index = 0;
    int global = 0;
    for (std::size_t s = 0; s < config.station_node_counts.size(); ++s) {
        const int station = static_cast<int>(s) + 1;
        const int total = config.station_node_counts[s];
        const int per = config.processes_per_station;
        for (int sub = 0; sub < per; ++sub) {
            ++process_index;
            const int count = total / per + (sub < total % per ? 1 : 0);
            ProcessGraph pg;
            pg.process_index = process_index;
            pg.station_index = station;
            for (int i = 0; i < count; ++i) {
                const NodeId v = node_name(station, process_index, global++);
                pg.nodes.push_back(v);
                nodes.push_back(v);
                process_of.push_back(process_index);
            }
            processes.push_back(std::move(pg));
        }
    }

    // within-process edges along each process's node order
    for (auto& pg : processes) {
        for (std::size_t i = 0; i < pg.nodes.size(); ++i)
            for (std::size_t j = i + 1; j < pg.nodes.size(); ++j)
                if (structure_rng.uniform() < config.within_process_edge_density)
                    pg.edges.insert({pg.nodes[i], pg.nodes[j]});
    }
    // cross-process edges from any earlier process to any later one
    EdgeSet cross;
    for (std::size_t a = 0; a < processes.size(); ++a)
        for (std::size_t b = a + 1; b < processes.size(); ++b)
            for (const auto& u : processes[a].nodes)
                for (const auto& v : processes[b].nodes)
                    if (structure_rng.uniform() < config.cross_edge_density) cross.insert({u, v});

    std::vector<int> stations;
    for (const auto& pg : processes) stations.push_back(pg.station_index);
    EdgeSet all_edges = cross;
    for (const auto& pg : processes) all_edges.insert(pg.edges.begin(), pg.edges.end());
    LayeredDag truth(nodes, process_of, stations, all_edges);

    // additive mechanisms per edge, noise per node
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
    std::map<Edge, MechanismFn> edge_fn;
    std::vector<NoiseSpec> noise(nodes.size());
    for (const auto& v : nodes) {
        const auto parents = truth.parents(v);
        for (const auto& p : parents)
            edge_fn.emplace(Edge{p, v},
                            draw_mechanism(config.mechanism_family, mechanism_rng, parents.size()));
        noise[index.at(v)] = draw_noise(config.noise_family, mechanism_rng);
    }

    // known mechanisms for a fraction of the nodes that have within-process
    // parents; the prediction is the within-process part of the truth
    std::set<NodeId> with_mechanism;
    for (const auto& v : nodes) {
        bool eligible = false;
        for (const auto& p : truth.parents(v))
            if (truth.process_of(p) == truth.process_of(v)) eligible = true;
        if (eligible && mechanism_rng.uniform() < config.mechanism_fraction) with_mechanism.insert(v);
    }

    // column-wise generation along the causal order
    std::vector<std::vector<double>> columns(nodes.size());
    std::vector<std::vector<double>> within_part(nodes.size());
    for (const auto& v : causal_order(truth)) {
        const std::size_t vi = index.at(v);
        const auto parents = truth.parents(v);
        std::vector<double>& col = columns[vi];
        col.resize(rows, 0.0);
        const bool track_within = with_mechanism.count(v) > 0;
        if (track_within) within_part[vi].assign(rows, 0.0);
        for (const auto& p : parents) {
            const auto& fn = edge_fn.at({p, v});
            const auto& pcol = columns[index.at(p)];
            const bool within = truth.process_of(p) == truth.process_of(v);
            for (std::size_t r = 0; r < rows; ++r) {
                const double term = fn(pcol[r]);
                col[r] += term;
                if (track_within && within) within_part[vi][r] += term;
            }
        }
        const NoiseSpec& nspec = noise[vi];
        for (std::size_t r = 0; r < rows; ++r) col[r] += nspec.draw(data_rng);
    }

    DatasetTable data;
    for (std::size_t i = 0; i < nodes.size(); ++i) data.add_column(nodes[i], std::move(columns[i]));
    std::vector<MechanismSpec> mechanisms;
    for (const auto& v : nodes) {
        if (!with_mechanism.count(v)) continue;
        MechanismSpec spec;
        spec.target = v;
        for (const auto& p : truth.parents(v))
            if (truth.process_of(p) == truth.process_of(v)) spec.inputs.push_back(p);
        spec.prediction_column = "mech_" + v;
        data.add_column(spec.prediction_column, std::move(within_part[index.at(v)]));
        mechanisms.push_back(std::move(spec));
    }

    GeneratedLine out{std::move(truth), PriorKnowledge(std::move(processes), std::move(mechanisms)),
                      std::move(data)};
    return out;
}

namespace {

TwoProcessFixture make_two_process(bool connected) {
    ProcessGraph p1;
    p1.process_index = 1;
    p1.station_index = 1;
    p1.nodes = {"X1", "X2", "X3"};
    p1.edges = {{"X1", "X2"}, {"X2", "X3"}};
    ProcessGraph p2;
    p2.process_index = 2;
    p2.station_index = 1;
    p2.nodes = {"X4", "X5", "X6"};
    p2.edges = {{"X5", "X6"}};
    PriorKnowledge prior({p1, p2});

    EdgeSet cross;
    if (connected) cross = {{"X2", "X4"}, {"X3", "X5"}};
    LayeredDag truth = merge_ground_truth(prior, cross);

    auto sampler = [connected](std::size_t rows, std::uint64_t seed) {
        Rng rng(seed);
        // heavy-tailed measurement noise (gaussian scale mixture), closer to
        // plant data than plain gaussians; moderate couplings keep the
        // penalized fits' shrinkage bias from leaking into ancestors
        auto noise = [&rng] { return rng.normal() * (rng.uniform() < 0.25 ? 1.3 : 0.55); };
        std::vector<double> x1(rows), x2(rows), x3(rows), x4(rows), x5(rows), x6(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            x1[r] = rng.normal();
            x2[r] = std::tanh(0.7 * x1[r]) + noise();
            x3[r] = std::tanh(0.7 * x2[r]) + noise();
            const double into4 = connected ? std::tanh(0.8 * x2[r]) : 0.0;
            const double into5 = connected ? std::tanh(0.7 * x3[r]) : 0.0;
            x4[r] = into4 + noise();
            x5[r] = into5 + noise();
            x6[r] = std::tanh(0.7 * x5[r]) + noise();
        }
        DatasetTable data;
        data.add_column("X1", std::move(x1));
        data.add_column("X2", std::move(x2));
        data.add_column("X3", std::move(x3));
        data.add_column("X4", std::move(x4));
        data.add_column("X5", std::move(x5));
        data.add_column("X6", std::move(x6));
        return data;
    };
    return TwoProcessFixture{std::move(truth), std::move(prior), std::move(sampler)};
}

}  // namespace

TwoProcessFixture two_process_fixture() { return make_two_process(true); }

TwoProcessFixture independent_process_fixture() { return make_two_process(false); }

}  // namespace causal
