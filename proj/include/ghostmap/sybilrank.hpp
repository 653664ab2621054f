#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ghostmap/proximity.hpp"

namespace ghostmap {

/// Compressed adjacency snapshot used by the power iteration. Neighbors of
/// each node are sorted by id so floating-point summation order is fixed.
struct WeightedAdjacency {
    std::vector<std::size_t> offsets;
    std::vector<NodeId> targets;
    std::vector<double> weights;
    std::vector<double> degree;

    static WeightedAdjacency from(const ProximityGraph& graph);

    [[nodiscard]] std::size_t node_count() const { return degree.size(); }
};

struct TrustVector {
    std::vector<double> trust;
    std::size_t iterations = 0;
    double initial_total = 0.0;
    /// Trust stranded on zero-degree nodes (seeded but unable to propagate).
    double lost = 0.0;

    [[nodiscard]] double total() const;
};

struct SybilRankOptions {
    /// 0 selects ceil(log2(n)).
    std::size_t iterations = 0;
    /// Keep half of each node's trust at home every round.
    bool lazy = false;
};

std::size_t default_iterations(std::size_t node_count);

/// Weighted SybilRank power iteration. Total trust equals the honest node
/// count and starts split evenly over `trusted`; every round each node hands
/// its trust to its neighbors in proportion to edge weight.
TrustVector propagate_trust(const WeightedAdjacency& adjacency, std::size_t honest_count,
                            std::span<const NodeId> trusted, const SybilRankOptions& options = {});

TrustVector propagate_trust(const ProximityGraph& graph, std::span<const NodeId> trusted,
                            const SybilRankOptions& options = {});

struct RankedEntry {
    NodeId node;
    bool sybil;
    double trust;
    double degree;
    double score;
};

/// Nodes in ascending order of degree-normalized trust (ties by node id).
/// Zero-degree nodes score 0.
struct RankedList {
    std::vector<RankedEntry> entries;

    [[nodiscard]] std::size_t sybil_count() const;
    [[nodiscard]] std::size_t honest_count() const { return entries.size() - sybil_count(); }
};

RankedList rank_nodes(const ProximityGraph& graph, const TrustVector& trust);

/// Mann-Whitney estimate of P(score_sybil < score_honest), ties counting 1/2.
double auc(const RankedList& ranked);

struct ErrorRates {
    double false_positive;
    double false_negative;
};

/// Flags the bottom floor(cutoff * N) ranked nodes as Sybils.
ErrorRates fp_fn_at_cutoff(const RankedList& ranked, double cutoff_fraction);

}  // namespace ghostmap
