#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "causalsynth/dataset.hpp"
#include "causalsynth/graph.hpp"

namespace testutil {

using causal::DatasetTable;
using causal::Digraph;
using causal::Edge;
using causal::EdgeSet;
using causal::LayeredDag;
using causal::NodeId;
using causal::Rng;

inline std::vector<NodeId> numbered_nodes(std::size_t p, const std::string& prefix = "n") {
    std::vector<NodeId> nodes;
    for (std::size_t i = 0; i < p; ++i) nodes.push_back(prefix + std::to_string(i));
    return nodes;
}

// Random DAG: shuffled order, each forward pair an edge with prob edge_prob.
inline Digraph random_dag(Rng& rng, std::size_t p, double edge_prob) {
    const auto nodes = numbered_nodes(p);
    const auto perm = rng.permutation(static_cast<std::uint32_t>(p));
    EdgeSet edges;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (rng.uniform() < edge_prob) edges.insert({nodes[perm[i]], nodes[perm[j]]});
    return Digraph(nodes, edges);
}

inline LayeredDag single_process_dag(const Digraph& g) {
    return LayeredDag(g.nodes(), std::vector<int>(g.num_nodes(), 1), {1}, g.edges());
}

// Brute-force d-separation: enumerate every simple undirected path and apply
// the blocking rules directly (non-collider in S blocks; collider blocks
// unless it or a descendant lies in S).
inline bool d_separated_oracle(const Digraph& g, const std::vector<NodeId>& a,
                               const std::vector<NodeId>& b, const std::vector<NodeId>& s) {
    const auto& nodes = g.nodes();
    const std::size_t p = nodes.size();
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < p; ++i) index[nodes[i]] = i;
    std::vector<std::vector<char>> parent(p, std::vector<char>(p, 0));
    for (const auto& [src, dst] : g.edges()) parent[index.at(dst)][index.at(src)] = 1;

    std::set<std::size_t> sa, sb, ss;
    for (const auto& v : a) sa.insert(index.at(v));
    for (const auto& v : b) sb.insert(index.at(v));
    for (const auto& v : s) ss.insert(index.at(v));

    // descendant closure for the collider rule
    std::vector<std::set<std::size_t>> desc(p);
    for (std::size_t v = 0; v < p; ++v) {
        std::vector<std::size_t> stack = {v};
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t w = 0; w < p; ++w)
                if (parent[w][u] && desc[v].insert(w).second) stack.push_back(w);
        }
        desc[v].insert(v);
    }
    auto collider_open = [&](std::size_t c) {
        for (std::size_t d : desc[c])
            if (ss.count(d)) return true;
        return false;
    };

    std::vector<std::size_t> path;
    std::vector<char> used(p, 0);
    bool found_active = false;
    std::function<void(std::size_t)> extend = [&](std::size_t v) {
        if (found_active) return;
        if (sb.count(v)) {
            // blocking rules over the middle vertices of the realized path
            bool blocked = false;
            for (std::size_t i = 1; i + 1 <= path.size() - 1; ++i) {
                const std::size_t prev = path[i - 1], mid = path[i], next = path[i + 1];
                const bool collider = parent[mid][prev] && parent[mid][next];
                if (collider) {
                    if (!collider_open(mid)) blocked = true;
                } else if (ss.count(mid)) {
                    blocked = true;
                }
            }
            if (!blocked) found_active = true;
            return;
        }
        for (std::size_t w = 0; w < p; ++w) {
            if (used[w]) continue;
            if (!parent[v][w] && !parent[w][v]) continue;
            if (sa.count(w)) continue;
            used[w] = 1;
            path.push_back(w);
            extend(w);
            path.pop_back();
            used[w] = 0;
        }
    };
    for (std::size_t start : sa) {
        std::fill(used.begin(), used.end(), 0);
        used[start] = 1;
        path = {start};
        extend(start);
        if (found_active) return false;
    }
    return true;
}

// All DAGs in the Markov equivalence class of `dag`, by brute force over
// orientations of its skeleton: same skeleton, same v-structures, acyclic.
inline std::vector<Digraph> mec_members_oracle(const Digraph& dag) {
    std::vector<std::pair<NodeId, NodeId>> skeleton;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& [src, dst] : dag.edges()) {
        auto key = src < dst ? std::make_pair(src, dst) : std::make_pair(dst, src);
        if (seen.insert(key).second) skeleton.push_back(key);
    }
    auto v_structures = [](const Digraph& g) {
        std::set<std::tuple<NodeId, NodeId, NodeId>> out;
        for (const auto& z : g.nodes()) {
            auto parents = g.parents(z);
            std::sort(parents.begin(), parents.end());
            for (std::size_t i = 0; i < parents.size(); ++i)
                for (std::size_t j = i + 1; j < parents.size(); ++j)
                    if (!g.has_edge(parents[i], parents[j]) && !g.has_edge(parents[j], parents[i]))
                        out.insert({parents[i], z, parents[j]});
        }
        return out;
    };
    const auto target_v = v_structures(dag);
    std::vector<Digraph> members;
    const std::size_t m = skeleton.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        EdgeSet edges;
        for (std::size_t e = 0; e < m; ++e) {
            const auto& [a, b] = skeleton[e];
            if (mask & (std::size_t{1} << e))
                edges.insert({a, b});
            else
                edges.insert({b, a});
        }
        Digraph candidate(dag.nodes(), edges);
        if (!candidate.is_acyclic()) continue;
        if (v_structures(candidate) != target_v) continue;
        members.push_back(std::move(candidate));
    }
    return members;
}

// Linear SEM sampler: x_v = sum_parents w * x_p + noise. Weight and noise
// callbacks let tests pin distributions.
struct LinearSem {
    Digraph dag;
    std::map<Edge, double> weights;
    std::function<double(Rng&)> noise = [](Rng& rng) { return rng.normal(); };

    DatasetTable sample(std::size_t rows, Rng& rng) const {
        const auto order = causal_order(dag);
        std::map<NodeId, std::vector<double>> columns;
        for (const auto& v : order) {
            std::vector<double> col(rows, 0.0);
            for (const auto& p : dag.parents(v)) {
                const double w = weights.at({p, v});
                const auto& pcol = columns.at(p);
                for (std::size_t r = 0; r < rows; ++r) col[r] += w * pcol[r];
            }
            for (std::size_t r = 0; r < rows; ++r) col[r] += noise(rng);
            columns.emplace(v, std::move(col));
        }
        DatasetTable data;
        for (const auto& v : dag.nodes()) data.add_column(v, columns.at(v));
        return data;
    }
};

inline LinearSem chain_sem(std::size_t p, double weight = 1.0) {
    const auto nodes = numbered_nodes(p, "v");
    EdgeSet edges;
    LinearSem sem;
    for (std::size_t i = 0; i + 1 < p; ++i) {
        edges.insert({nodes[i], nodes[i + 1]});
        sem.weights[{nodes[i], nodes[i + 1]}] = weight;
    }
    sem.dag = Digraph(nodes, edges);
    return sem;
}

}  // namespace testutil
