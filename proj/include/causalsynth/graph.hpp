#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "causalsynth/common.hpp"

namespace causal {

using NodeId = std::string;
using Edge = std::pair<NodeId, NodeId>;
using EdgeSet = std::set<Edge>;

// Plain directed graph over named nodes. Used for learned structures and as
// the common currency of the metrics module; acyclicity is not enforced here.
class Digraph {
public:
    Digraph() = default;
    Digraph(std::vector<NodeId> nodes, const EdgeSet& edges);

    const std::vector<NodeId>& nodes() const { return nodes_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const EdgeSet& edges() const { return edges_; }

    bool has_node(const NodeId& v) const { return index_.count(v) > 0; }
    std::size_t index_of(const NodeId& v) const;
    bool has_edge(const NodeId& src, const NodeId& dst) const { return edges_.count({src, dst}) > 0; }
    void add_edge(const NodeId& src, const NodeId& dst);
    void remove_edge(const NodeId& src, const NodeId& dst);

    std::vector<NodeId> parents(const NodeId& v) const;
    std::vector<NodeId> children(const NodeId& v) const;

    bool is_acyclic() const;

private:
    std::vector<NodeId> nodes_;
    EdgeSet edges_;
    std::unordered_map<NodeId, std::size_t> index_;
};

// DAG whose vertex set is partitioned into consecutively numbered processes
// 1..K, each assigned to a station; edges never point from a later process to
// an earlier one. Immutable after construction; construction validates
// acyclicity and layer monotonicity.
class LayeredDag {
public:
    // process_of_node[i] in 1..K for node i; station_of_process[k-1] gives the
    // station of process k.
    LayeredDag(std::vector<NodeId> nodes, std::vector<int> process_of_node,
               std::vector<int> station_of_process, const EdgeSet& edges);

    const std::vector<NodeId>& nodes() const { return nodes_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    const EdgeSet& edges() const { return edges_; }
    int num_processes() const { return static_cast<int>(station_of_process_.size()); }

    bool has_node(const NodeId& v) const { return index_.count(v) > 0; }
    std::size_t index_of(const NodeId& v) const;
    int process_of(const NodeId& v) const;
    int station_of_process(int process) const;
    std::vector<int> stations() const;  // distinct station indices, ascending
    std::vector<NodeId> nodes_in_process(int process) const;
    std::vector<NodeId> nodes_in_station(int station) const;

    std::vector<NodeId> parents(const NodeId& v) const;
    std::vector<NodeId> children(const NodeId& v) const;

    Digraph as_digraph() const { return Digraph(nodes_, edges_); }

    // Induced subgraph on a node subset; processes/stations are inherited.
    LayeredDag induced_subgraph(const std::vector<NodeId>& keep) const;

private:
    std::vector<NodeId> nodes_;
    std::vector<int> process_of_node_;
    std::vector<int> station_of_process_;
    EdgeSet edges_;
    std::unordered_map<NodeId, std::size_t> index_;
};

// Known functional mechanism for a target node, supplied as a per-row
// prediction column in the training table (the closed-form physics is not
// part of the interface).
struct MechanismSpec {
    NodeId target;
    std::vector<NodeId> inputs;
    std::string prediction_column;
};

// One expert-supplied within-process DAG.
struct ProcessGraph {
    int process_index = 0;
    int station_index = 0;
    std::vector<NodeId> nodes;
    EdgeSet edges;  // endpoints must stay inside `nodes`
};

// Expert prior: per-process graphs, optional known mechanisms, and an
// optional process-level DAG on {1..K} restricting which earlier processes
// may feed a later one.
class PriorKnowledge {
public:
    PriorKnowledge(std::vector<ProcessGraph> process_graphs,
                   std::vector<MechanismSpec> mechanisms = {},
                   std::optional<std::set<std::pair<int, int>>> process_level_edges = std::nullopt);

    const std::vector<ProcessGraph>& process_graphs() const { return process_graphs_; }
    int num_processes() const { return static_cast<int>(process_graphs_.size()); }
    const std::vector<NodeId>& all_nodes() const { return all_nodes_; }

    const MechanismSpec* mechanism_for(const NodeId& target) const;
    const std::vector<MechanismSpec>& mechanisms() const { return mechanisms_; }

    bool has_process_level_graph() const { return process_level_edges_.has_value(); }
    const std::set<std::pair<int, int>>& process_level_edges() const { return *process_level_edges_; }

    // Parents of a node inside its own process graph (P*_k).
    std::vector<NodeId> within_process_parents(const NodeId& v) const;
    int process_of(const NodeId& v) const;

    // Union of the process graphs with no cross edges, as a LayeredDag.
    LayeredDag union_graph() const;

private:
    std::vector<ProcessGraph> process_graphs_;
    std::vector<MechanismSpec> mechanisms_;
    std::optional<std::set<std::pair<int, int>>> process_level_edges_;
    std::vector<NodeId> all_nodes_;
    std::unordered_map<NodeId, int> process_of_node_;
    std::unordered_map<std::string, std::size_t> mechanism_index_;
};

// Completed partially directed acyclic graph: a Markov equivalence class.
struct Cpdag {
    std::vector<NodeId> nodes;
    EdgeSet directed;
    std::set<std::pair<NodeId, NodeId>> undirected;  // stored with first < second

    bool operator==(const Cpdag& other) const = default;
};

Cpdag make_cpdag(std::vector<NodeId> nodes, const EdgeSet& directed,
                 const std::set<std::pair<NodeId, NodeId>>& undirected);

// Topological order: edge sources precede targets, processes stay clustered,
// ties broken lexicographically on NodeId.
std::vector<NodeId> causal_order(const LayeredDag& dag);
std::vector<NodeId> causal_order(const Digraph& dag);

// Standard d-separation of node sets a and b given s, via reachability in the
// moralized ancestral subgraph.
bool d_separated(const LayeredDag& dag, const std::vector<NodeId>& a,
                 const std::vector<NodeId>& b, const std::vector<NodeId>& s);
bool d_separated(const Digraph& dag, const std::vector<NodeId>& a,
                 const std::vector<NodeId>& b, const std::vector<NodeId>& s);

// G*_partial: union of all within-process edges with learned cross-process
// edges. Every cross edge must run from a strictly earlier process to a later
// one; offending edges are rejected by name.
LayeredDag merge_ground_truth(const PriorKnowledge& prior, const EdgeSet& cross_edges);

// Random consistent DAG extension of a CPDAG (iterated Dor-Tarsi with a
// shuffled candidate order; the draw is over MEC members but not necessarily
// uniform). Throws StructuralError if the CPDAG admits no extension.
Digraph dag_from_cpdag(const Cpdag& cpdag, Rng& rng);

// Graph JSON: {"processes":[{"index":1,"station":1,"nodes":[...]}, ...],
//              "edges":[["src","tgt"], ...],
//              "mechanisms":[{"target":...,"inputs":[...],"prediction_column":...}],
//              "process_edges":[[1,2], ...]}   (optional, process-level DAG)
// The loader rejects duplicate nodes, dangling edge endpoints, and layer
// violations.
LayeredDag load_layered_dag_json(const std::string& path);
void save_layered_dag_json(const LayeredDag& dag, const std::string& path);
PriorKnowledge load_prior_json(const std::string& path);
void save_prior_json(const PriorKnowledge& prior, const std::string& path);

// Digraph JSON for learned graphs: {"nodes":[...], "edges":[[src,tgt],...]}.
Digraph load_digraph_json(const std::string& path);
void save_digraph_json(const Digraph& g, const std::string& path);

}  // namespace causal
