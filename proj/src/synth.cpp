#include "causalsynth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

namespace causal {

double silverman_bandwidth(const std::vector<double>& column) {
    if (column.size() < 2) return 0.0;
    const double s = stats::sd(column);
    if (s <= 0.0) return 0.0;
    std::vector<double> sorted(column);
    std::sort(sorted.begin(), sorted.end());
    const double iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    double spread = std::min(s, iqr / 1.34);
    if (spread <= 0.0) spread = s;  // tied quartiles on a non-constant column
    return 0.9 * spread * std::pow(static_cast<double>(column.size()), -0.2);
}

std::uint64_t data_fingerprint(const DatasetTable& data, const std::vector<NodeId>& columns) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    auto mix_byte = [&](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    auto mix_u64 = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(v >> (8 * i)));
    };
    auto mix_double = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        mix_u64(bits);
    };
    mix_u64(data.rows());
    for (const auto& name : columns) {
        for (char c : name) mix_byte(static_cast<unsigned char>(c));
        mix_byte(0);
        const auto& col = data.column(name);
        mix_double(stats::mean(col));
        mix_double(col.size() > 1 ? stats::sd(col) : 0.0);
    }
    return h;
}

PipelineModel::PipelineModel(LayeredDag dag, std::vector<NodeId> order,
                             std::map<NodeId, SmoothBootstrapSpec> sources,
                             std::map<NodeId, DistributionalForest> conditionals, FitMeta meta)
    : dag_(std::move(dag)),
      order_(std::move(order)),
      sources_(std::move(sources)),
      conditionals_(std::move(conditionals)),
      meta_(meta) {
    if (order_.size() != dag_.num_nodes()) throw InputError("order does not cover the dag");
    std::unordered_map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order_.size(); ++i) pos[order_[i]] = i;
    for (const auto& [src, dst] : dag_.edges())
        if (pos.at(src) >= pos.at(dst)) throw StructuralError("order is not a causal order of the dag");
    for (const auto& v : dag_.nodes()) {
        const bool src_node = dag_.parents(v).empty();
        if (src_node && !sources_.count(v)) throw InputError("source node " + v + " lacks a bootstrap spec");
        if (!src_node && !conditionals_.count(v)) throw InputError("node " + v + " lacks a forest");
        if (src_node && conditionals_.count(v)) throw InputError("source node " + v + " has a forest");
    }
}

PipelineModel fit_pipeline(const DatasetTable& data, const LayeredDag& dag,
                           const PipelineConfig& config) {
    std::vector<NodeId> missing;
    for (const auto& v : dag.nodes())
        if (!data.has_column(v)) missing.push_back(v);
    if (!missing.empty()) {
        std::string msg = "data lacks columns:";
        for (const auto& v : missing) msg += " " + v;
        throw InputError(msg);
    }

    const auto order = causal_order(dag);
    std::map<NodeId, SmoothBootstrapSpec> sources;
    std::map<NodeId, DistributionalForest> conditionals;
    for (const auto& v : dag.nodes()) {
        auto parents = dag.parents(v);
        if (parents.empty()) {
            SmoothBootstrapSpec spec;
            spec.training_column = data.column(v);
            spec.bandwidth = silverman_bandwidth(spec.training_column);
            sources.emplace(v, std::move(spec));
        } else {
            std::sort(parents.begin(), parents.end(), [&](const NodeId& a, const NodeId& b) {
                return dag.index_of(a) < dag.index_of(b);
            });
            DrfConfig drf = config.drf;
            drf.seed = Rng::derive_seed(config.seed, dag.index_of(v));
            auto forest = fit_drf(data.column(v), PredictorSet::from_table(data, parents), drf);
            forest.target = v;
            conditionals.emplace(v, std::move(forest));
        }
    }
    FitMeta meta;
    meta.seed = config.seed;
    meta.data_fingerprint = data_fingerprint(data, dag.nodes());
    meta.drf = config.drf;
    return PipelineModel(dag.induced_subgraph(dag.nodes()), order, std::move(sources),
                         std::move(conditionals), meta);
}

DatasetTable sample(const PipelineModel& model, std::size_t n, Rng& rng) {
    if (n < 1) throw InputError("sample size must be >= 1");
    const auto& nodes = model.dag().nodes();
    std::vector<std::vector<double>> columns(nodes.size());
    for (auto& c : columns) c.reserve(n);
    std::unordered_map<NodeId, std::size_t> col_of;
    for (std::size_t i = 0; i < nodes.size(); ++i) col_of[nodes[i]] = i;

    std::vector<double> query;
    for (std::size_t r = 0; r < n; ++r) {
        for (const auto& v : model.order()) {
            double value;
            if (auto it = model.sources().find(v); it != model.sources().end()) {
                const auto& spec = it->second;
                const std::size_t pick = rng.uniform_index(spec.training_column.size());
                // jitter clamped at 5 bandwidths so sampled support stays a
                // bounded extension of the training support
                const double z = std::clamp(rng.normal(), -5.0, 5.0);
                value = spec.training_column[pick] + spec.bandwidth * z;
            } else {
                const auto& forest = model.conditionals().at(v);
                query.clear();
                for (const auto& p : forest.predictors) query.push_back(columns[col_of.at(p)][r]);
                value = conditional_sample(forest, query, rng);
            }
            columns[col_of.at(v)].push_back(value);
        }
    }
    DatasetTable out;
    for (std::size_t i = 0; i < nodes.size(); ++i) out.add_column(nodes[i], std::move(columns[i]));
    return out;
}

std::map<int, PipelineModel> fit_cell_pipelines(const DatasetTable& data, const LayeredDag& merged,
                                                const PipelineConfig& config) {
    std::map<int, PipelineModel> out;
    for (int station : merged.stations()) {
        const auto cell_dag = merged.induced_subgraph(merged.nodes_in_station(station));
        PipelineConfig cell_config = config;
        cell_config.seed = Rng::derive_seed(config.seed, static_cast<std::uint64_t>(station));
        out.emplace(station, fit_pipeline(data, cell_dag, cell_config));
    }
    return out;
}

std::map<int, PipelineModel> fit_cell_pipelines(const DatasetTable& data, const PriorKnowledge& prior,
                                                const PipelineConfig& config,
                                                const CrossLearnConfig& learn_config) {
    // group processes by station, preserving process order
    std::map<int, std::vector<ProcessGraph>> by_station;
    for (const auto& pg : prior.process_graphs()) by_station[pg.station_index].push_back(pg);

    std::map<int, PipelineModel> out;
    for (auto& [station, graphs] : by_station) {
        std::vector<ProcessGraph> local = graphs;
        std::map<int, int> renumber;
        for (std::size_t i = 0; i < local.size(); ++i) {
            renumber[local[i].process_index] = static_cast<int>(i + 1);
            local[i].process_index = static_cast<int>(i + 1);
        }
        std::vector<MechanismSpec> mechanisms;
        std::set<NodeId> members;
        for (const auto& pg : local) members.insert(pg.nodes.begin(), pg.nodes.end());
        for (const auto& m : prior.mechanisms())
            if (members.count(m.target)) mechanisms.push_back(m);
        std::optional<std::set<std::pair<int, int>>> process_edges;
        if (prior.has_process_level_graph()) {
            std::set<std::pair<int, int>> pe;
            for (const auto& [a, b] : prior.process_level_edges()) {
                auto ia = renumber.find(a), ib = renumber.find(b);
                if (ia != renumber.end() && ib != renumber.end()) pe.insert({ia->second, ib->second});
            }
            process_edges = std::move(pe);
        }
        PriorKnowledge cell_prior(std::move(local), std::move(mechanisms), std::move(process_edges));
        CrossLearnConfig cell_learn = learn_config;
        cell_learn.seed = Rng::derive_seed(learn_config.seed, static_cast<std::uint64_t>(station));
        const auto cross = learn_cross_process_edges(data, cell_prior, cell_learn);
        const auto cell_dag = merge_ground_truth(cell_prior, cross);
        PipelineConfig cell_config = config;
        cell_config.seed = Rng::derive_seed(config.seed, static_cast<std::uint64_t>(station));
        out.emplace(station, fit_pipeline(data, cell_dag, cell_config));
    }
    return out;
}

double ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw InputError("ks_statistic needs nonempty samples");
    std::vector<double> sa(a), sb(b);
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return sup;
}

FidelityReport fidelity_report(const DatasetTable& original, const PipelineModel& model,
                               std::size_t n, Rng& rng) {
    for (const auto& v : model.dag().nodes())
        if (!original.has_column(v)) throw InputError("original data lacks column " + v);
    const DatasetTable synth = sample(model, n, rng);
    FidelityReport report;
    report.sample_size = n;
    for (const auto& v : model.dag().nodes()) {
        FidelityEntry e;
        e.node = v;
        e.source = model.is_source(v);
        e.ks = ks_statistic(original.column(v), synth.column(v));
        report.entries.push_back(std::move(e));
    }
    std::sort(report.entries.begin(), report.entries.end(), [](const FidelityEntry& x, const FidelityEntry& y) {
        return x.ks != y.ks ? x.ks > y.ks : x.node < y.node;
    });
    double sum = 0.0;
    std::size_t count = 0;
    report.min_non_source = 1.0;
    for (const auto& e : report.entries) {
        if (e.source) continue;
        report.max_non_source = std::max(report.max_non_source, e.ks);
        report.min_non_source = std::min(report.min_non_source, e.ks);
        sum += e.ks;
        ++count;
    }
    if (count == 0) {
        report.min_non_source = 0.0;
    } else {
        report.mean_non_source = sum / static_cast<double>(count);
    }
    return report;
}

void save_fidelity_json(const FidelityReport& report, const std::string& path) {
    nlohmann::json j;
    j["sample_size"] = report.sample_size;
    j["summary"] = {{"max_non_source", report.max_non_source},
                    {"min_non_source", report.min_non_source},
                    {"mean_non_source", report.mean_non_source}};
    j["nodes"] = nlohmann::json::array();
    for (const auto& e : report.entries)
        j["nodes"].push_back({{"node", e.node}, {"ks", e.ks}, {"source", e.source}});
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::open, "cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Binary model container
//
// layout: magic "CSMODEL\n", u32 version, u32 section count, then per section
// u32 id, u64 payload length, u32 crc32, payload. Integers little-endian,
// doubles as IEEE-754 bit patterns. Sections: 1 graph, 2 meta, 3 sources,
// 4 forests.

namespace {

constexpr char kMagic[8] = {'C', 'S', 'M', 'O', 'D', 'E', 'L', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

struct BufWriter {
    std::vector<unsigned char> bytes;

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }
    void put_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_u64(bits);
    }
    void put_string(const std::string& s) {
        put_u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void put_doubles(const std::vector<double>& v) {
        put_u64(v.size());
        for (double x : v) put_f64(x);
    }
};

struct BufReader {
    const unsigned char* data;
    std::size_t size;
    std::size_t at = 0;

    void need(std::size_t k) const {
        if (at + k > size) throw IoError(IoError::Kind::truncated, "model file section truncated");
    }
    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[at + static_cast<std::size_t>(i)]) << (8 * i);
        at += 4;
        return v;
    }
    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[at + static_cast<std::size_t>(i)]) << (8 * i);
        at += 8;
        return v;
    }
    std::int32_t get_i32() { return static_cast<std::int32_t>(get_u32()); }
    double get_f64() {
        const std::uint64_t bits = get_u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string get_string() {
        const std::uint32_t len = get_u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(data + at), len);
        at += len;
        return s;
    }
    std::vector<double> get_doubles() {
        const std::uint64_t len = get_u64();
        need(len * 8);
        std::vector<double> v(len);
        for (auto& x : v) x = get_f64();
        return v;
    }
};

std::uint32_t crc_of(const std::vector<unsigned char>& bytes) {
    return static_cast<std::uint32_t>(
        crc32(0L, bytes.empty() ? Z_NULL : bytes.data(), static_cast<uInt>(bytes.size())));
}

void write_drf_config(BufWriter& w, const DrfConfig& c) {
    w.put_u32(static_cast<std::uint32_t>(c.num_trees));
    w.put_u32(static_cast<std::uint32_t>(c.min_node_size));
    w.put_u32(static_cast<std::uint32_t>(c.num_fourier_features));
    w.put_i32(c.mtry);
    w.put_f64(c.subsample_fraction);
    w.put_f64(c.bandwidth);
    w.put_u64(c.seed);
    w.put_u32(static_cast<std::uint32_t>(c.max_split_candidates));
}

DrfConfig read_drf_config(BufReader& r) {
    DrfConfig c;
    c.num_trees = static_cast<int>(r.get_u32());
    c.min_node_size = static_cast<int>(r.get_u32());
    c.num_fourier_features = static_cast<int>(r.get_u32());
    c.mtry = r.get_i32();
    c.subsample_fraction = r.get_f64();
    c.bandwidth = r.get_f64();
    c.seed = r.get_u64();
    c.max_split_candidates = static_cast<int>(r.get_u32());
    return c;
}

}  // namespace

void save_model(const PipelineModel& model, const std::string& path) {
    const auto& dag = model.dag();
    std::unordered_map<NodeId, std::uint32_t> node_index;
    for (std::size_t i = 0; i < dag.nodes().size(); ++i)
        node_index[dag.nodes()[i]] = static_cast<std::uint32_t>(i);

    BufWriter graph;
    graph.put_u32(static_cast<std::uint32_t>(dag.num_nodes()));
    for (const auto& v : dag.nodes()) {
        graph.put_string(v);
        graph.put_u32(static_cast<std::uint32_t>(dag.process_of(v)));
    }
    graph.put_u32(static_cast<std::uint32_t>(dag.num_processes()));
    for (int p = 1; p <= dag.num_processes(); ++p)
        graph.put_u32(static_cast<std::uint32_t>(dag.station_of_process(p)));
    graph.put_u64(dag.edges().size());
    for (const auto& [src, dst] : dag.edges()) {
        graph.put_u32(node_index.at(src));
        graph.put_u32(node_index.at(dst));
    }

    BufWriter meta;
    meta.put_u64(model.meta().seed);
    meta.put_u64(model.meta().data_fingerprint);
    write_drf_config(meta, model.meta().drf);
    meta.put_u32(static_cast<std::uint32_t>(model.order().size()));
    for (const auto& v : model.order()) meta.put_u32(node_index.at(v));

    BufWriter sources;
    sources.put_u32(static_cast<std::uint32_t>(model.sources().size()));
    for (const auto& [v, spec] : model.sources()) {
        sources.put_u32(node_index.at(v));
        sources.put_f64(spec.bandwidth);
        sources.put_doubles(spec.training_column);
    }

    BufWriter forests;
    forests.put_u32(static_cast<std::uint32_t>(model.conditionals().size()));
    for (const auto& [v, forest] : model.conditionals()) {
        forests.put_u32(node_index.at(v));
        forests.put_u32(static_cast<std::uint32_t>(forest.predictors.size()));
        for (const auto& p : forest.predictors) forests.put_u32(node_index.at(p));
        forests.put_f64(forest.bandwidth);
        forests.put_doubles(forest.training_response);
        forests.put_u32(static_cast<std::uint32_t>(forest.trees.size()));
        for (const auto& tree : forest.trees) {
            forests.put_u32(static_cast<std::uint32_t>(tree.nodes.size()));
            for (const auto& node : tree.nodes) {
                forests.put_i32(node.split_predictor);
                forests.put_f64(node.threshold);
                forests.put_i32(node.left);
                forests.put_i32(node.right);
                forests.put_i32(node.leaf);
            }
            forests.put_u32(static_cast<std::uint32_t>(tree.leaves.size()));
            for (const auto& leaf : tree.leaves) {
                forests.put_u32(static_cast<std::uint32_t>(leaf.size()));
                for (std::uint32_t row : leaf) forests.put_u32(row);
            }
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoError::Kind::open, "cannot write " + path);
    BufWriter header;
    header.bytes.insert(header.bytes.end(), kMagic, kMagic + sizeof kMagic);
    header.put_u32(kFormatVersion);
    header.put_u32(4);
    const BufWriter* sections[4] = {&graph, &meta, &sources, &forests};
    out.write(reinterpret_cast<const char*>(header.bytes.data()),
              static_cast<std::streamsize>(header.bytes.size()));
    for (std::uint32_t id = 1; id <= 4; ++id) {
        const auto& payload = sections[id - 1]->bytes;
        BufWriter sec;
        sec.put_u32(id);
        sec.put_u64(payload.size());
        sec.put_u32(crc_of(payload));
        out.write(reinterpret_cast<const char*>(sec.bytes.data()),
                  static_cast<std::streamsize>(sec.bytes.size()));
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size()));
    }
    if (!out) throw IoError(IoError::Kind::open, "write failed: " + path);
}

PipelineModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::open, "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    BufReader top{bytes.data(), bytes.size()};
    top.need(sizeof kMagic);
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw IoError(IoError::Kind::parse, path + ": not a model container");
    top.at = sizeof kMagic;
    const std::uint32_t version = top.get_u32();
    if (version != kFormatVersion)
        throw IoError(IoError::Kind::version, path + ": file format version " + std::to_string(version) +
                                                  ", this build reads version " +
                                                  std::to_string(kFormatVersion));
    const std::uint32_t sections = top.get_u32();
    std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> payload_at;  // id -> (offset, len)
    for (std::uint32_t s = 0; s < sections; ++s) {
        const std::uint32_t id = top.get_u32();
        const std::uint64_t len = top.get_u64();
        const std::uint32_t crc = top.get_u32();
        top.need(len);
        const std::uint32_t actual = static_cast<std::uint32_t>(
            crc32(0L, bytes.data() + top.at, static_cast<uInt>(len)));
        if (actual != crc)
            throw IoError(IoError::Kind::checksum,
                          path + ": section " + std::to_string(id) + " checksum mismatch");
        payload_at[id] = {top.at, static_cast<std::size_t>(len)};
        top.at += len;
    }
    for (std::uint32_t id = 1; id <= 4; ++id)
        if (!payload_at.count(id))
            throw IoError(IoError::Kind::truncated, path + ": missing section " + std::to_string(id));
    auto reader_for = [&](std::uint32_t id) {
        const auto& [off, len] = payload_at.at(id);
        return BufReader{bytes.data() + off, len};
    };

    BufReader graph = reader_for(1);
    const std::uint32_t n_nodes = graph.get_u32();
    std::vector<NodeId> nodes(n_nodes);
    std::vector<int> process_of(n_nodes);
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
        nodes[i] = graph.get_string();
        process_of[i] = static_cast<int>(graph.get_u32());
    }
    const std::uint32_t n_proc = graph.get_u32();
    std::vector<int> stations(n_proc);
    for (auto& s : stations) s = static_cast<int>(graph.get_u32());
    const std::uint64_t n_edges = graph.get_u64();
    EdgeSet edges;
    for (std::uint64_t e = 0; e < n_edges; ++e) {
        const std::uint32_t a = graph.get_u32();
        const std::uint32_t b = graph.get_u32();
        if (a >= n_nodes || b >= n_nodes) throw IoError(IoError::Kind::parse, path + ": bad edge index");
        edges.insert({nodes[a], nodes[b]});
    }
    LayeredDag dag(nodes, process_of, stations, edges);

    BufReader meta = reader_for(2);
    FitMeta fit_meta;
    fit_meta.seed = meta.get_u64();
    fit_meta.data_fingerprint = meta.get_u64();
    fit_meta.drf = read_drf_config(meta);
    const std::uint32_t order_len = meta.get_u32();
    std::vector<NodeId> order(order_len);
    for (auto& v : order) {
        const std::uint32_t i = meta.get_u32();
        if (i >= n_nodes) throw IoError(IoError::Kind::parse, path + ": bad order index");
        v = nodes[i];
    }

    BufReader src = reader_for(3);
    std::map<NodeId, SmoothBootstrapSpec> sources_map;
    const std::uint32_t n_sources = src.get_u32();
    for (std::uint32_t s = 0; s < n_sources; ++s) {
        const std::uint32_t node = src.get_u32();
        SmoothBootstrapSpec spec;
        spec.bandwidth = src.get_f64();
        spec.training_column = src.get_doubles();
        sources_map.emplace(nodes.at(node), std::move(spec));
    }

    BufReader fr = reader_for(4);
    std::map<NodeId, DistributionalForest> forests_map;
    const std::uint32_t n_forests = fr.get_u32();
    for (std::uint32_t f = 0; f < n_forests; ++f) {
        const std::uint32_t node = fr.get_u32();
        DistributionalForest forest;
        forest.target = nodes.at(node);
        const std::uint32_t n_pred = fr.get_u32();
        for (std::uint32_t p = 0; p < n_pred; ++p) forest.predictors.push_back(nodes.at(fr.get_u32()));
        forest.bandwidth = fr.get_f64();
        forest.training_response = fr.get_doubles();
        forest.config = fit_meta.drf;
        const std::uint32_t n_trees = fr.get_u32();
        forest.trees.resize(n_trees);
        for (auto& tree : forest.trees) {
            const std::uint32_t tn = fr.get_u32();
            tree.nodes.resize(tn);
            for (auto& tnode : tree.nodes) {
                tnode.split_predictor = fr.get_i32();
                tnode.threshold = fr.get_f64();
                tnode.left = fr.get_i32();
                tnode.right = fr.get_i32();
                tnode.leaf = fr.get_i32();
            }
            const std::uint32_t nl = fr.get_u32();
            tree.leaves.resize(nl);
            for (auto& leaf : tree.leaves) {
                const std::uint32_t len = fr.get_u32();
                leaf.resize(len);
                for (auto& row : leaf) row = fr.get_u32();
            }
        }
        forests_map.emplace(forest.target, std::move(forest));
    }

    return PipelineModel(std::move(dag), std::move(order), std::move(sources_map),
                         std::move(forests_map), fit_meta);
}

}  // namespace causal
