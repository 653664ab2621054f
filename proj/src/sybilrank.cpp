#include "ghostmap/sybilrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace ghostmap {

WeightedAdjacency WeightedAdjacency::from(const ProximityGraph& graph) {
    WeightedAdjacency adj;
    const auto n = graph.node_count();
    adj.offsets.assign(n + 1, 0);
    adj.degree.assign(n, 0.0);
    for (NodeId u = 0; u < n; ++u) adj.offsets[u + 1] = adj.offsets[u] + graph.neighbors(u).size();
    adj.targets.resize(adj.offsets[n]);
    adj.weights.resize(adj.offsets[n]);

    std::vector<std::pair<NodeId, Weight>> row;
    for (NodeId u = 0; u < n; ++u) {
        const auto& nbrs = graph.neighbors(u);
        row.assign(nbrs.begin(), nbrs.end());
        std::sort(row.begin(), row.end());
        auto at = adj.offsets[u];
        for (const auto& [v, w] : row) {
            adj.targets[at] = v;
            adj.weights[at] = static_cast<double>(w);
            ++at;
        }
        adj.degree[u] = static_cast<double>(graph.weighted_degree(u));
    }
    return adj;
}

double TrustVector::total() const { return std::accumulate(trust.begin(), trust.end(), 0.0); }

std::size_t default_iterations(std::size_t node_count) {
    if (node_count <= 1) return 1;
    return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(node_count))));
}

TrustVector propagate_trust(const WeightedAdjacency& adj, std::size_t honest_count,
                            std::span<const NodeId> trusted, const SybilRankOptions& options) {
    const auto n = adj.node_count();
    if (trusted.empty()) throw std::invalid_argument("SybilRank needs at least one trusted node");
    for (NodeId t : trusted) {
        if (t >= n) throw std::out_of_range("trusted node outside graph");
    }

    TrustVector out;
    out.iterations = options.iterations ? options.iterations : default_iterations(n);
    out.initial_total = static_cast<double>(honest_count);
    out.trust.assign(n, 0.0);
    const double share = out.initial_total / static_cast<double>(trusted.size());
    for (NodeId t : trusted) out.trust[t] += share;

    std::vector<double> next(n);
    for (std::size_t it = 0; it < out.iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (NodeId u = 0; u < n; ++u) {
            const double t = out.trust[u];
            if (t == 0.0) continue;
            if (adj.degree[u] == 0.0) {
                out.lost += t;
                continue;
            }
            double outgoing = t;
            if (options.lazy) {
                next[u] += 0.5 * t;
                outgoing = 0.5 * t;
            }
            const double per_weight = outgoing / adj.degree[u];
            for (auto k = adj.offsets[u]; k < adj.offsets[u + 1]; ++k) {
                next[adj.targets[k]] += per_weight * adj.weights[k];
            }
        }
        out.trust.swap(next);
    }
    return out;
}

TrustVector propagate_trust(const ProximityGraph& graph, std::span<const NodeId> trusted,
                            const SybilRankOptions& options) {
    return propagate_trust(WeightedAdjacency::from(graph), graph.honest_count(), trusted, options);
}

std::size_t RankedList::sybil_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const RankedEntry& e) { return e.sybil; }));
}

namespace {

// Scores equal to 1e-12 of the top score count as tied; rounding noise in
// the power iteration would otherwise split exact ties at random.
std::vector<std::int64_t> tie_keys(const std::vector<RankedEntry>& e) {
    double top = 0.0;
    for (const auto& x : e) top = std::max(top, x.score);
    const double scale = top > 0.0 ? 1e12 / top : 1.0;
    std::vector<std::int64_t> keys;
    keys.reserve(e.size());
    for (const auto& x : e) keys.push_back(std::llround(x.score * scale));
    return keys;
}

}  // namespace

RankedList rank_nodes(const ProximityGraph& graph, const TrustVector& trust) {
    if (trust.trust.size() != graph.node_count()) {
        throw std::invalid_argument("trust vector does not match graph");
    }
    RankedList ranked;
    ranked.entries.reserve(graph.node_count());
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        const auto deg = static_cast<double>(graph.weighted_degree(u));
        const double t = trust.trust[u];
        ranked.entries.push_back(RankedEntry{u, graph.node(u).kind == NodeKind::Sybil, t, deg,
                                             deg > 0.0 ? t / deg : 0.0});
    }
    // entries are still in node order, so keys index by node id
    const auto keys = tie_keys(ranked.entries);
    std::sort(ranked.entries.begin(), ranked.entries.end(),
              [&keys](const RankedEntry& a, const RankedEntry& b) {
                  return keys[a.node] != keys[b.node] ? keys[a.node] < keys[b.node] : a.node < b.node;
              });
    return ranked;
}

double auc(const RankedList& ranked) {
    const auto& e = ranked.entries;
    const auto sybils = static_cast<double>(ranked.sybil_count());
    const auto honest = static_cast<double>(e.size()) - sybils;
    if (sybils == 0.0 || honest == 0.0) {
        throw std::invalid_argument("AUC needs both Sybil and honest nodes");
    }
    // For each tie group, every Sybil beats all honest nodes in earlier
    // groups and half of the honest nodes in its own group. The list is
    // sorted ascending, so count pairs with sybil below honest.
    const auto keys = tie_keys(e);
    double wins = 0.0;
    double honest_after = honest;
    for (std::size_t i = 0; i < e.size();) {
        std::size_t j = i;
        double grp_sybil = 0.0;
        double grp_honest = 0.0;
        while (j < e.size() && keys[j] == keys[i]) {
            (e[j].sybil ? grp_sybil : grp_honest) += 1.0;
            ++j;
        }
        honest_after -= grp_honest;
        wins += grp_sybil * (honest_after + 0.5 * grp_honest);
        i = j;
    }
    return wins / (sybils * honest);
}

ErrorRates fp_fn_at_cutoff(const RankedList& ranked, double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0)) {
        throw std::invalid_argument("cutoff fraction must be in (0, 1)");
    }
    const auto& e = ranked.entries;
    const auto flagged = static_cast<std::size_t>(
        std::floor(cutoff_fraction * static_cast<double>(e.size()) + 1e-9));
    const auto sybils = ranked.sybil_count();
    const auto honest = e.size() - sybils;
    std::size_t honest_flagged = 0;
    std::size_t sybil_flagged = 0;
    for (std::size_t i = 0; i < flagged; ++i) (e[i].sybil ? sybil_flagged : honest_flagged)++;
    ErrorRates r{};
    r.false_positive = honest ? static_cast<double>(honest_flagged) / static_cast<double>(honest) : 0.0;
    r.false_negative =
        sybils ? static_cast<double>(sybils - sybil_flagged) / static_cast<double>(sybils) : 0.0;
    return r;
}

}  // namespace ghostmap
