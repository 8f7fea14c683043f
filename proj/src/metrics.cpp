#include "causalsynth/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace causal {

namespace {

void require_same_nodes(const Digraph& a, const Digraph& b) {
    std::set<NodeId> sa(a.nodes().begin(), a.nodes().end());
    std::set<NodeId> sb(b.nodes().begin(), b.nodes().end());
    if (sa != sb) throw InputError("graphs are over different node sets");
}

}  // namespace

std::size_t shd(const Digraph& truth, const Digraph& learned) {
    require_same_nodes(truth, learned);
    std::size_t count = 0;
    std::set<std::pair<NodeId, NodeId>> pairs;
    auto key = [](const Edge& e) {
        return e.first < e.second ? std::make_pair(e.first, e.second)
                                  : std::make_pair(e.second, e.first);
    };
    for (const auto& e : truth.edges()) pairs.insert(key(e));
    for (const auto& e : learned.edges()) pairs.insert(key(e));
    for (const auto& [a, b] : pairs) {
        const bool t_ab = truth.has_edge(a, b), t_ba = truth.has_edge(b, a);
        const bool l_ab = learned.has_edge(a, b), l_ba = learned.has_edge(b, a);
        const bool in_truth = t_ab || t_ba;
        const bool in_learned = l_ab || l_ba;
        if (in_truth != in_learned) {
            ++count;  // insertion or deletion
        } else if (in_truth && in_learned && t_ab != l_ab) {
            ++count;  // reversal, one operation
        }
    }
    return count;
}

StructuralScore precision_recall_f1(const Digraph& truth, const Digraph& learned) {
    require_same_nodes(truth, learned);
    StructuralScore score;
    score.true_edges = truth.num_edges();
    score.learned_edges = learned.num_edges();
    score.shd = shd(truth, learned);
    std::size_t tp = 0;
    for (const auto& e : learned.edges())
        if (truth.edges().count(e)) ++tp;
    if (score.learned_edges == 0) {
        score.precision = 0.0;
        score.precision_undefined = true;
    } else {
        score.precision = static_cast<double>(tp) / static_cast<double>(score.learned_edges);
    }
    if (score.true_edges == 0) {
        score.recall = 0.0;
        score.recall_undefined = true;
    } else {
        score.recall = static_cast<double>(tp) / static_cast<double>(score.true_edges);
    }
    const double pr = score.precision + score.recall;
    score.f1 = pr > 0.0 ? 2.0 * score.precision * score.recall / pr : 0.0;
    return score;
}

double varsortability(const DatasetTable& data, const Digraph& truth) {
    const std::size_t p = truth.num_nodes();
    if (p < 2) throw InputError("varsortability needs at least 2 nodes");
    if (!truth.is_acyclic()) throw StructuralError("varsortability requires an acyclic truth");
    std::vector<double> var(p);
    for (std::size_t i = 0; i < p; ++i) {
        var[i] = stats::variance(data.column(truth.nodes()[i]));
        if (var[i] <= 0.0)
            throw NumericError("zero-variance column: " + truth.nodes()[i]);
    }
    std::vector<std::vector<char>> adj(p, std::vector<char>(p, 0));
    for (const auto& [src, dst] : truth.edges())
        adj[truth.index_of(src)][truth.index_of(dst)] = 1;

    // positive-entry indicator of A^k for k = 1..p-1
    std::vector<std::vector<char>> power = adj;
    double agree = 0.0, total = 0.0;
    // variance ties are half credit; a relative epsilon keeps standardized
    // columns (variance 1 up to float noise) counted as ties
    auto credit = [&](std::size_t i, std::size_t j) {
        const double scale = std::max({std::abs(var[i]), std::abs(var[j]), 1e-300});
        if (std::abs(var[i] - var[j]) <= 1e-9 * scale) return 0.5;
        return var[i] < var[j] ? 1.0 : 0.0;
    };
    for (std::size_t len = 1; len < p; ++len) {
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (power[i][j]) {
                    agree += credit(i, j);
                    total += 1.0;
                }
        if (len + 1 < p) {
            std::vector<std::vector<char>> next(p, std::vector<char>(p, 0));
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t k = 0; k < p; ++k)
                    if (power[i][k])
                        for (std::size_t j = 0; j < p; ++j)
                            if (adj[k][j]) next[i][j] = 1;
            power = std::move(next);
        }
    }
    if (total == 0.0) return 1.0;  // edgeless graph: vacuously sorted
    return agree / total;
}

}  // namespace causal
