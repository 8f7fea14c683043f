#include "causalsynth/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <queue>

#include <json.hpp>

namespace causal {

namespace {

using IndexEdge = std::pair<std::size_t, std::size_t>;

std::unordered_map<NodeId, std::size_t> build_index(const std::vector<NodeId>& nodes) {
    std::unordered_map<NodeId, std::size_t> index;
    index.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!index.emplace(nodes[i], i).second) throw InputError("duplicate node: " + nodes[i]);
    }
    return index;
}

// Kahn topological sort over index adjacency; returns empty when cyclic and
// reports one cycle through `cycle` if requested.
bool topo_sort(std::size_t n, const std::vector<std::vector<std::size_t>>& children,
               std::vector<std::size_t>* order_out, std::vector<std::size_t>* cycle_out) {
    std::vector<std::size_t> indeg(n, 0);
    for (const auto& ch : children)
        for (std::size_t c : ch) ++indeg[c];
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        const std::size_t v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (std::size_t c : children[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != n) {
        if (cycle_out) {
            // walk parent pointers inside the residual graph to exhibit a cycle
            std::vector<std::size_t> stuck;
            for (std::size_t i = 0; i < n; ++i)
                if (indeg[i] > 0) stuck.push_back(i);
            std::vector<int> mark(n, -1);
            std::size_t v = stuck.front();
            std::vector<std::size_t> walk;
            while (mark[v] < 0) {
                mark[v] = static_cast<int>(walk.size());
                walk.push_back(v);
                for (std::size_t c : children[v]) {
                    if (indeg[c] > 0) {
                        v = c;
                        break;
                    }
                }
            }
            cycle_out->assign(walk.begin() + mark[v], walk.end());
        }
        return false;
    }
    if (order_out) *order_out = std::move(order);
    return true;
}

std::vector<std::vector<std::size_t>> children_lists(std::size_t n, const EdgeSet& edges,
                                                     const std::unordered_map<NodeId, std::size_t>& index) {
    std::vector<std::vector<std::size_t>> ch(n);
    for (const auto& [src, dst] : edges) {
        auto s = index.find(src), d = index.find(dst);
        if (s == index.end()) throw InputError("edge endpoint not a node: " + src);
        if (d == index.end()) throw InputError("edge endpoint not a node: " + dst);
        if (s->second == d->second) throw StructuralError("self-loop on " + src);
        ch[s->second].push_back(d->second);
    }
    return ch;
}

std::string cycle_message(const std::vector<NodeId>& nodes, const std::vector<std::size_t>& cycle) {
    std::string msg = "cycle detected: ";
    for (std::size_t v : cycle) msg += nodes[v] + " -> ";
    msg += nodes[cycle.front()];
    return msg;
}

}  // namespace

// ---------------------------------------------------------------------------
// Digraph

Digraph::Digraph(std::vector<NodeId> nodes, const EdgeSet& edges)
    : nodes_(std::move(nodes)), edges_(edges), index_(build_index(nodes_)) {
    for (const auto& [src, dst] : edges_) {
        if (!index_.count(src)) throw InputError("edge endpoint not a node: " + src);
        if (!index_.count(dst)) throw InputError("edge endpoint not a node: " + dst);
        if (src == dst) throw StructuralError("self-loop on " + src);
    }
}

std::size_t Digraph::index_of(const NodeId& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw InputError("unknown node: " + v);
    return it->second;
}

void Digraph::add_edge(const NodeId& src, const NodeId& dst) {
    index_of(src);
    index_of(dst);
    if (src == dst) throw StructuralError("self-loop on " + src);
    edges_.insert({src, dst});
}

void Digraph::remove_edge(const NodeId& src, const NodeId& dst) { edges_.erase({src, dst}); }

std::vector<NodeId> Digraph::parents(const NodeId& v) const {
    index_of(v);
    std::vector<NodeId> out;
    for (const auto& [src, dst] : edges_)
        if (dst == v) out.push_back(src);
    return out;
}

std::vector<NodeId> Digraph::children(const NodeId& v) const {
    index_of(v);
    std::vector<NodeId> out;
    for (const auto& [src, dst] : edges_)
        if (src == v) out.push_back(dst);
    return out;
}

bool Digraph::is_acyclic() const {
    return topo_sort(nodes_.size(), children_lists(nodes_.size(), edges_, index_), nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// LayeredDag

LayeredDag::LayeredDag(std::vector<NodeId> nodes, std::vector<int> process_of_node,
                       std::vector<int> station_of_process, const EdgeSet& edges)
    : nodes_(std::move(nodes)),
      process_of_node_(std::move(process_of_node)),
      station_of_process_(std::move(station_of_process)),
      edges_(edges),
      index_(build_index(nodes_)) {
    if (process_of_node_.size() != nodes_.size())
        throw InputError("process_of_node size mismatch");
    const int k = static_cast<int>(station_of_process_.size());
    if (k == 0) throw InputError("layered dag needs at least one process");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const int p = process_of_node_[i];
        if (p < 1 || p > k)
            throw InputError("node " + nodes_[i] + " assigned to process " + std::to_string(p) +
                             ", expected 1.." + std::to_string(k));
    }
    for (const auto& [src, dst] : edges_) {
        const int ps = process_of(src), pd = process_of(dst);
        if (ps > pd)
            throw StructuralError("layer violation: edge " + src + " -> " + dst + " runs from process " +
                                  std::to_string(ps) + " to earlier process " + std::to_string(pd));
    }
    std::vector<std::size_t> cycle;
    if (!topo_sort(nodes_.size(), children_lists(nodes_.size(), edges_, index_), nullptr, &cycle))
        throw StructuralError(cycle_message(nodes_, cycle));
}

std::size_t LayeredDag::index_of(const NodeId& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw InputError("unknown node: " + v);
    return it->second;
}

int LayeredDag::process_of(const NodeId& v) const { return process_of_node_[index_of(v)]; }

int LayeredDag::station_of_process(int process) const {
    if (process < 1 || process > num_processes())
        throw InputError("process index out of range: " + std::to_string(process));
    return station_of_process_[static_cast<std::size_t>(process - 1)];
}

std::vector<int> LayeredDag::stations() const {
    std::set<int> s(station_of_process_.begin(), station_of_process_.end());
    return {s.begin(), s.end()};
}

std::vector<NodeId> LayeredDag::nodes_in_process(int process) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (process_of_node_[i] == process) out.push_back(nodes_[i]);
    return out;
}

std::vector<NodeId> LayeredDag::nodes_in_station(int station) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (station_of_process(process_of_node_[i]) == station) out.push_back(nodes_[i]);
    return out;
}

std::vector<NodeId> LayeredDag::parents(const NodeId& v) const {
    index_of(v);
    std::vector<NodeId> out;
    for (const auto& [src, dst] : edges_)
        if (dst == v) out.push_back(src);
    return out;
}

std::vector<NodeId> LayeredDag::children(const NodeId& v) const {
    index_of(v);
    std::vector<NodeId> out;
    for (const auto& [src, dst] : edges_)
        if (src == v) out.push_back(dst);
    return out;
}

LayeredDag LayeredDag::induced_subgraph(const std::vector<NodeId>& keep) const {
    std::set<NodeId> keep_set(keep.begin(), keep.end());
    std::vector<NodeId> nodes;
    std::vector<int> procs;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (keep_set.count(nodes_[i])) {
            nodes.push_back(nodes_[i]);
            procs.push_back(process_of_node_[i]);
        }
    }
    if (nodes.size() != keep_set.size()) {
        for (const auto& v : keep)
            if (!index_.count(v)) throw InputError("unknown node: " + v);
    }
    EdgeSet edges;
    for (const auto& e : edges_)
        if (keep_set.count(e.first) && keep_set.count(e.second)) edges.insert(e);
    return LayeredDag(std::move(nodes), std::move(procs), station_of_process_, edges);
}

// ---------------------------------------------------------------------------
// PriorKnowledge

PriorKnowledge::PriorKnowledge(std::vector<ProcessGraph> process_graphs,
                               std::vector<MechanismSpec> mechanisms,
                               std::optional<std::set<std::pair<int, int>>> process_level_edges)
    : process_graphs_(std::move(process_graphs)),
      mechanisms_(std::move(mechanisms)),
      process_level_edges_(std::move(process_level_edges)) {
    const int k = static_cast<int>(process_graphs_.size());
    if (k == 0) throw InputError("prior needs at least one process graph");
    std::sort(process_graphs_.begin(), process_graphs_.end(),
              [](const ProcessGraph& a, const ProcessGraph& b) { return a.process_index < b.process_index; });
    for (int i = 0; i < k; ++i) {
        if (process_graphs_[i].process_index != i + 1)
            throw InputError("process indices must be consecutive 1..K");
    }
    for (const auto& pg : process_graphs_) {
        std::set<NodeId> members(pg.nodes.begin(), pg.nodes.end());
        if (members.size() != pg.nodes.size())
            throw InputError("duplicate node inside process " + std::to_string(pg.process_index));
        for (const auto& [src, dst] : pg.edges) {
            if (!members.count(src) || !members.count(dst))
                throw InputError("process " + std::to_string(pg.process_index) + " edge " + src + " -> " +
                                 dst + " leaves its node set");
        }
        for (const auto& v : pg.nodes) {
            if (!process_of_node_.emplace(v, pg.process_index).second)
                throw InputError("node " + v + " appears in more than one process");
            all_nodes_.push_back(v);
        }
    }
    if (process_level_edges_) {
        for (const auto& [j, t] : *process_level_edges_) {
            if (j < 1 || j > k || t < 1 || t > k)
                throw InputError("process-level edge endpoint out of range");
            if (j >= t)
                throw StructuralError("process-level edge " + std::to_string(j) + " -> " + std::to_string(t) +
                                      " violates the process ordering");
        }
    }
    for (std::size_t i = 0; i < mechanisms_.size(); ++i) {
        const auto& m = mechanisms_[i];
        auto it = process_of_node_.find(m.target);
        if (it == process_of_node_.end()) throw InputError("mechanism target unknown: " + m.target);
        const auto parents = within_process_parents(m.target);
        std::set<NodeId> parent_set(parents.begin(), parents.end());
        for (const auto& in : m.inputs)
            if (!parent_set.count(in))
                throw InputError("mechanism for " + m.target + " uses " + in +
                                 " which is not a within-process parent");
        if (m.prediction_column.empty())
            throw InputError("mechanism for " + m.target + " lacks a prediction column");
        if (!mechanism_index_.emplace(m.target, i).second)
            throw InputError("duplicate mechanism for " + m.target);
    }
    // validated against layering/acyclicity once, through the union graph
    (void)union_graph();
}

const MechanismSpec* PriorKnowledge::mechanism_for(const NodeId& target) const {
    auto it = mechanism_index_.find(target);
    return it == mechanism_index_.end() ? nullptr : &mechanisms_[it->second];
}

std::vector<NodeId> PriorKnowledge::within_process_parents(const NodeId& v) const {
    const int p = process_of(v);
    const auto& pg = process_graphs_[static_cast<std::size_t>(p - 1)];
    std::vector<NodeId> out;
    for (const auto& [src, dst] : pg.edges)
        if (dst == v) out.push_back(src);
    return out;
}

int PriorKnowledge::process_of(const NodeId& v) const {
    auto it = process_of_node_.find(v);
    if (it == process_of_node_.end()) throw InputError("unknown node: " + v);
    return it->second;
}

LayeredDag PriorKnowledge::union_graph() const {
    std::vector<NodeId> nodes;
    std::vector<int> procs;
    std::vector<int> stations;
    EdgeSet edges;
    for (const auto& pg : process_graphs_) {
        stations.push_back(pg.station_index);
        for (const auto& v : pg.nodes) {
            nodes.push_back(v);
            procs.push_back(pg.process_index);
        }
        edges.insert(pg.edges.begin(), pg.edges.end());
    }
    return LayeredDag(std::move(nodes), std::move(procs), std::move(stations), edges);
}

// ---------------------------------------------------------------------------
// Cpdag

Cpdag make_cpdag(std::vector<NodeId> nodes, const EdgeSet& directed,
                 const std::set<std::pair<NodeId, NodeId>>& undirected) {
    Cpdag c;
    c.nodes = std::move(nodes);
    const auto index = build_index(c.nodes);
    std::set<std::pair<NodeId, NodeId>> seen_pairs;
    auto pair_of = [](const NodeId& a, const NodeId& b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    for (const auto& [src, dst] : directed) {
        if (!index.count(src) || !index.count(dst)) throw InputError("cpdag edge endpoint not a node");
        if (src == dst) throw StructuralError("self-loop on " + src);
        if (!seen_pairs.insert(pair_of(src, dst)).second)
            throw StructuralError("node pair appears twice in cpdag: " + src + ", " + dst);
        c.directed.insert({src, dst});
    }
    for (const auto& [a, b] : undirected) {
        if (!index.count(a) || !index.count(b)) throw InputError("cpdag edge endpoint not a node");
        if (a == b) throw StructuralError("self-loop on " + a);
        if (!seen_pairs.insert(pair_of(a, b)).second)
            throw StructuralError("node pair appears twice in cpdag: " + a + ", " + b);
        c.undirected.insert(pair_of(a, b));
    }
    return c;
}

// ---------------------------------------------------------------------------
// causal_order

namespace {

// Kahn with a (process, name) min-heap: deterministic, layer-clustered,
// lexicographic within ties.
std::vector<NodeId> ordered_topo(const std::vector<NodeId>& nodes,
                                 const std::vector<int>& process_of_node, const EdgeSet& edges,
                                 const std::unordered_map<NodeId, std::size_t>& index) {
    const std::size_t n = nodes.size();
    auto children = children_lists(n, edges, index);
    std::vector<std::size_t> cycle;
    if (!topo_sort(n, children, nullptr, &cycle)) throw StructuralError(cycle_message(nodes, cycle));

    std::vector<int> indeg(n, 0);
    for (const auto& ch : children)
        for (std::size_t c : ch) ++indeg[c];
    using Key = std::pair<int, NodeId>;
    std::priority_queue<std::pair<Key, std::size_t>, std::vector<std::pair<Key, std::size_t>>,
                        std::greater<>>
        ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push({{process_of_node[i], nodes[i]}, i});
    std::vector<NodeId> order;
    order.reserve(n);
    while (!ready.empty()) {
        const std::size_t v = ready.top().second;
        ready.pop();
        order.push_back(nodes[v]);
        for (std::size_t c : children[v])
            if (--indeg[c] == 0) ready.push({{process_of_node[c], nodes[c]}, c});
    }
    return order;
}

}  // namespace

std::vector<NodeId> causal_order(const LayeredDag& dag) {
    std::vector<int> procs;
    procs.reserve(dag.num_nodes());
    for (const auto& v : dag.nodes()) procs.push_back(dag.process_of(v));
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < dag.nodes().size(); ++i) index[dag.nodes()[i]] = i;
    return ordered_topo(dag.nodes(), procs, dag.edges(), index);
}

std::vector<NodeId> causal_order(const Digraph& dag) {
    std::vector<int> procs(dag.num_nodes(), 1);
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < dag.nodes().size(); ++i) index[dag.nodes()[i]] = i;
    return ordered_topo(dag.nodes(), procs, dag.edges(), index);
}

// ---------------------------------------------------------------------------
// d-separation

namespace {

bool d_separated_impl(const std::vector<NodeId>& nodes, const EdgeSet& edges,
                      const std::unordered_map<NodeId, std::size_t>& index,
                      const std::vector<NodeId>& a, const std::vector<NodeId>& b,
                      const std::vector<NodeId>& s) {
    const std::size_t n = nodes.size();
    auto idx = [&](const NodeId& v) {
        auto it = index.find(v);
        if (it == index.end()) throw InputError("unknown node: " + v);
        return it->second;
    };
    std::vector<int> role(n, 0);  // 1 = a, 2 = b, 3 = s
    for (const auto& v : a) role[idx(v)] = 1;
    for (const auto& v : b) {
        const std::size_t i = idx(v);
        if (role[i] != 0) throw InputError("d-separation sets must be disjoint: " + v);
        role[i] = 2;
    }
    for (const auto& v : s) {
        const std::size_t i = idx(v);
        if (role[i] != 0) throw InputError("d-separation sets must be disjoint: " + v);
        role[i] = 3;
    }
    if (a.empty() || b.empty()) return true;

    std::vector<std::vector<std::size_t>> pa(n), ch(n);
    for (const auto& [src, dst] : edges) {
        pa[idx(dst)].push_back(idx(src));
        ch[idx(src)].push_back(idx(dst));
    }

    // ancestral closure of a, b, s
    std::vector<char> keep(n, 0);
    std::deque<std::size_t> work;
    for (std::size_t i = 0; i < n; ++i)
        if (role[i] != 0) {
            keep[i] = 1;
            work.push_back(i);
        }
    while (!work.empty()) {
        const std::size_t v = work.front();
        work.pop_front();
        for (std::size_t p : pa[v])
            if (!keep[p]) {
                keep[p] = 1;
                work.push_back(p);
            }
    }

    // moralize the kept subgraph, cut out s, test connectivity from a to b
    std::vector<std::vector<std::size_t>> adj(n);
    auto connect = [&](std::size_t u, std::size_t v) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (!keep[v]) continue;
        for (std::size_t p : pa[v]) {
            if (!keep[p]) continue;
            connect(p, v);
        }
        for (std::size_t i = 0; i < pa[v].size(); ++i)
            for (std::size_t j = i + 1; j < pa[v].size(); ++j)
                if (keep[pa[v][i]] && keep[pa[v][j]]) connect(pa[v][i], pa[v][j]);
    }
    std::vector<char> visited(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (role[i] == 1) {
            visited[i] = 1;
            work.push_back(i);
        }
    while (!work.empty()) {
        const std::size_t v = work.front();
        work.pop_front();
        if (role[v] == 2) return false;
        for (std::size_t u : adj[v]) {
            if (visited[u] || role[u] == 3) continue;
            visited[u] = 1;
            work.push_back(u);
        }
    }
    return true;
}

}  // namespace

bool d_separated(const LayeredDag& dag, const std::vector<NodeId>& a, const std::vector<NodeId>& b,
                 const std::vector<NodeId>& s) {
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < dag.nodes().size(); ++i) index[dag.nodes()[i]] = i;
    return d_separated_impl(dag.nodes(), dag.edges(), index, a, b, s);
}

bool d_separated(const Digraph& dag, const std::vector<NodeId>& a, const std::vector<NodeId>& b,
                 const std::vector<NodeId>& s) {
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < dag.nodes().size(); ++i) index[dag.nodes()[i]] = i;
    return d_separated_impl(dag.nodes(), dag.edges(), index, a, b, s);
}

// ---------------------------------------------------------------------------
// merge_ground_truth

LayeredDag merge_ground_truth(const PriorKnowledge& prior, const EdgeSet& cross_edges) {
    for (const auto& [src, dst] : cross_edges) {
        const int ps = prior.process_of(src);
        const int pd = prior.process_of(dst);
        if (ps == pd)
            throw StructuralError("cross edge " + src + " -> " + dst + " stays inside process " +
                                  std::to_string(ps));
        if (ps > pd)
            throw StructuralError("cross edge " + src + " -> " + dst + " runs from process " +
                                  std::to_string(ps) + " back to process " + std::to_string(pd));
    }
    std::vector<NodeId> nodes;
    std::vector<int> procs;
    std::vector<int> stations;
    EdgeSet edges;
    for (const auto& pg : prior.process_graphs()) {
        stations.push_back(pg.station_index);
        for (const auto& v : pg.nodes) {
            nodes.push_back(v);
            procs.push_back(pg.process_index);
        }
        edges.insert(pg.edges.begin(), pg.edges.end());
    }
    edges.insert(cross_edges.begin(), cross_edges.end());
    return LayeredDag(std::move(nodes), std::move(procs), std::move(stations), edges);
}

// ---------------------------------------------------------------------------
// dag_from_cpdag: iterated Dor-Tarsi extension with shuffled candidates

Digraph dag_from_cpdag(const Cpdag& cpdag, Rng& rng) {
    const std::size_t n = cpdag.nodes.size();
    const auto index = build_index(cpdag.nodes);
    // adjacency matrices over the working PDAG
    std::vector<std::vector<char>> dir(n, std::vector<char>(n, 0));
    std::vector<std::vector<char>> und(n, std::vector<char>(n, 0));
    for (const auto& [src, dst] : cpdag.directed) dir[index.at(src)][index.at(dst)] = 1;
    for (const auto& [a, b] : cpdag.undirected) {
        und[index.at(a)][index.at(b)] = 1;
        und[index.at(b)][index.at(a)] = 1;
    }
    EdgeSet out_edges(cpdag.directed);

    std::vector<char> removed(n, 0);
    auto adjacent = [&](std::size_t u, std::size_t v) {
        return dir[u][v] || dir[v][u] || und[u][v];
    };
    std::size_t remaining = n;
    while (remaining > 0) {
        // a vertex x is eligible when it is a sink (no outgoing directed edge)
        // and every undirected neighbor of x is adjacent to all other
        // neighbors of x; orient its undirected edges into x and remove it
        const auto perm = rng.permutation(static_cast<std::uint32_t>(n));
        bool found = false;
        for (std::uint32_t cand : perm) {
            const std::size_t x = cand;
            if (removed[x]) continue;
            bool sink = true;
            for (std::size_t v = 0; v < n && sink; ++v)
                if (!removed[v] && dir[x][v]) sink = false;
            if (!sink) continue;
            bool ok = true;
            for (std::size_t y = 0; y < n && ok; ++y) {
                if (removed[y] || !und[x][y]) continue;
                for (std::size_t z = 0; z < n && ok; ++z) {
                    if (removed[z] || z == y || z == x) continue;
                    if (adjacent(x, z) && !adjacent(y, z)) ok = false;
                }
            }
            if (!ok) continue;
            for (std::size_t y = 0; y < n; ++y) {
                if (removed[y] || !und[x][y]) continue;
                und[x][y] = und[y][x] = 0;
                out_edges.insert({cpdag.nodes[y], cpdag.nodes[x]});
            }
            removed[x] = 1;
            --remaining;
            found = true;
            break;
        }
        if (!found)
            throw StructuralError("cpdag admits no consistent DAG extension");
    }
    Digraph result(cpdag.nodes, out_edges);
    if (!result.is_acyclic()) throw StructuralError("cpdag extension produced a cycle");
    return result;
}

// ---------------------------------------------------------------------------
// JSON io

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::open, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::parse, path + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::open, "cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(IoError::Kind::open, "write failed: " + path);
}

struct ParsedGraphFile {
    std::vector<ProcessGraph> processes;  // edges split per process where possible
    EdgeSet all_edges;
    std::vector<MechanismSpec> mechanisms;
    std::optional<std::set<std::pair<int, int>>> process_edges;
};

ParsedGraphFile parse_graph_json(const std::string& path) {
    const json j = read_json_file(path);
    ParsedGraphFile out;
    try {
        if (!j.contains("processes") || !j["processes"].is_array() || j["processes"].empty())
            throw IoError(IoError::Kind::parse, path + ": missing processes array");
        std::unordered_map<NodeId, int> proc_of;
        for (const auto& p : j["processes"]) {
            ProcessGraph pg;
            pg.process_index = p.at("index").get<int>();
            pg.station_index = p.at("station").get<int>();
            for (const auto& v : p.at("nodes")) {
                const NodeId id = v.get<NodeId>();
                if (!proc_of.emplace(id, pg.process_index).second)
                    throw IoError(IoError::Kind::parse, path + ": duplicate node " + id);
                pg.nodes.push_back(id);
            }
            out.processes.push_back(std::move(pg));
        }
        if (j.contains("edges")) {
            for (const auto& e : j["edges"]) {
                if (!e.is_array() || e.size() != 2)
                    throw IoError(IoError::Kind::parse, path + ": edge must be a [src, tgt] pair");
                const NodeId src = e[0].get<NodeId>();
                const NodeId dst = e[1].get<NodeId>();
                if (!proc_of.count(src) || !proc_of.count(dst))
                    throw IoError(IoError::Kind::parse,
                                  path + ": dangling edge endpoint in " + src + " -> " + dst);
                out.all_edges.insert({src, dst});
            }
        }
        for (auto& pg : out.processes) {
            std::set<NodeId> members(pg.nodes.begin(), pg.nodes.end());
            for (const auto& e : out.all_edges)
                if (members.count(e.first) && members.count(e.second)) pg.edges.insert(e);
        }
        if (j.contains("mechanisms")) {
            for (const auto& m : j["mechanisms"]) {
                MechanismSpec spec;
                spec.target = m.at("target").get<NodeId>();
                if (m.contains("inputs"))
                    for (const auto& v : m["inputs"]) spec.inputs.push_back(v.get<NodeId>());
                spec.prediction_column = m.at("prediction_column").get<std::string>();
                out.mechanisms.push_back(std::move(spec));
            }
        }
        if (j.contains("process_edges")) {
            std::set<std::pair<int, int>> pe;
            for (const auto& e : j["process_edges"]) {
                if (!e.is_array() || e.size() != 2)
                    throw IoError(IoError::Kind::parse, path + ": process edge must be a pair");
                pe.insert({e[0].get<int>(), e[1].get<int>()});
            }
            out.process_edges = std::move(pe);
        }
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::parse, path + ": " + e.what());
    }
    return out;
}

json graph_common_json(const std::vector<ProcessGraph>& processes, const EdgeSet& edges) {
    json j;
    j["processes"] = json::array();
    for (const auto& pg : processes) {
        json p;
        p["index"] = pg.process_index;
        p["station"] = pg.station_index;
        p["nodes"] = pg.nodes;
        j["processes"].push_back(std::move(p));
    }
    j["edges"] = json::array();
    for (const auto& [src, dst] : edges) j["edges"].push_back(json::array({src, dst}));
    return j;
}

std::vector<ProcessGraph> process_views(const LayeredDag& dag) {
    std::vector<ProcessGraph> out;
    for (int p = 1; p <= dag.num_processes(); ++p) {
        ProcessGraph pg;
        pg.process_index = p;
        pg.station_index = dag.station_of_process(p);
        pg.nodes = dag.nodes_in_process(p);
        out.push_back(std::move(pg));
    }
    return out;
}

}  // namespace

LayeredDag load_layered_dag_json(const std::string& path) {
    const auto parsed = parse_graph_json(path);
    std::vector<NodeId> nodes;
    std::vector<int> procs;
    std::vector<int> stations;
    std::vector<ProcessGraph> sorted = parsed.processes;
    std::sort(sorted.begin(), sorted.end(),
              [](const ProcessGraph& a, const ProcessGraph& b) { return a.process_index < b.process_index; });
    for (const auto& pg : sorted) {
        stations.push_back(pg.station_index);
        for (const auto& v : pg.nodes) {
            nodes.push_back(v);
            procs.push_back(pg.process_index);
        }
    }
    return LayeredDag(std::move(nodes), std::move(procs), std::move(stations), parsed.all_edges);
}

void save_layered_dag_json(const LayeredDag& dag, const std::string& path) {
    write_json_file(graph_common_json(process_views(dag), dag.edges()), path);
}

PriorKnowledge load_prior_json(const std::string& path) {
    auto parsed = parse_graph_json(path);
    // every edge must live inside one process graph
    std::size_t within = 0;
    for (const auto& pg : parsed.processes) within += pg.edges.size();
    if (within != parsed.all_edges.size())
        throw IoError(IoError::Kind::parse, path + ": prior contains cross-process edges");
    return PriorKnowledge(std::move(parsed.processes), std::move(parsed.mechanisms),
                          std::move(parsed.process_edges));
}

void save_prior_json(const PriorKnowledge& prior, const std::string& path) {
    EdgeSet edges;
    for (const auto& pg : prior.process_graphs()) edges.insert(pg.edges.begin(), pg.edges.end());
    json j = graph_common_json(prior.process_graphs(), edges);
    if (!prior.mechanisms().empty()) {
        j["mechanisms"] = json::array();
        for (const auto& m : prior.mechanisms()) {
            json mj;
            mj["target"] = m.target;
            mj["inputs"] = m.inputs;
            mj["prediction_column"] = m.prediction_column;
            j["mechanisms"].push_back(std::move(mj));
        }
    }
    if (prior.has_process_level_graph()) {
        j["process_edges"] = json::array();
        for (const auto& [a, b] : prior.process_level_edges())
            j["process_edges"].push_back(json::array({a, b}));
    }
    write_json_file(j, path);
}

Digraph load_digraph_json(const std::string& path) {
    const json j = read_json_file(path);
    try {
        std::vector<NodeId> nodes;
        for (const auto& v : j.at("nodes")) nodes.push_back(v.get<NodeId>());
        EdgeSet edges;
        if (j.contains("edges"))
            for (const auto& e : j["edges"]) edges.insert({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
        return Digraph(std::move(nodes), edges);
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::parse, path + ": " + e.what());
    }
}

void save_digraph_json(const Digraph& g, const std::string& path) {
    json j;
    j["nodes"] = g.nodes();
    j["edges"] = json::array();
    for (const auto& [src, dst] : g.edges()) j["edges"].push_back(json::array({src, dst}));
    write_json_file(j, path);
}

}  // namespace causal
