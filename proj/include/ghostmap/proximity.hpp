#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ghostmap/rng.hpp"

namespace ghostmap {

using NodeId = std::uint32_t;
using Weight = std::uint64_t;

enum class NodeKind { Honest, Sybil };

struct Node {
    NodeKind kind = NodeKind::Honest;
    bool trusted = false;
    /// Sybil backed by a physical radio; the only kind of Sybil that can pass
    /// a collocation challenge against an honest device.
    bool gateway = false;
    /// Encounter propensity drawn from the power law (0 when not sampled).
    double activity = 0.0;
};

struct Edge {
    NodeId u;
    NodeId v;
    Weight weight;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected device graph whose edge weights count successful collocations.
class ProximityGraph {
public:
    ProximityGraph() = default;

    NodeId add_node(NodeKind kind, bool gateway = false, double activity = 0.0);

    /// Adds `w` to the weight of edge {u, v}, creating it if needed.
    void add_encounter(NodeId u, NodeId v, Weight w = 1);

    void set_trusted(NodeId u, bool trusted);

    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const { return edge_count_; }
    [[nodiscard]] std::size_t honest_count() const { return honest_count_; }
    [[nodiscard]] std::size_t sybil_count() const { return nodes_.size() - honest_count_; }

    [[nodiscard]] const Node& node(NodeId u) const { return nodes_.at(u); }
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] Weight weight(NodeId u, NodeId v) const;
    [[nodiscard]] Weight weighted_degree(NodeId u) const { return degree_.at(u); }
    [[nodiscard]] Weight total_weight() const { return total_weight_; }
    [[nodiscard]] const std::unordered_map<NodeId, Weight>& neighbors(NodeId u) const {
        return adj_.at(u);
    }
    [[nodiscard]] std::vector<NodeId> trusted_nodes() const;

    /// All edges with u < v, sorted by (u, v).
    [[nodiscard]] std::vector<Edge> edges() const;

    /// Size of the largest connected component.
    [[nodiscard]] std::size_t largest_component() const;

private:
    std::vector<Node> nodes_;
    std::vector<std::unordered_map<NodeId, Weight>> adj_;
    std::vector<Weight> degree_;
    std::size_t edge_count_ = 0;
    std::size_t honest_count_ = 0;
    Weight total_weight_ = 0;
};

/// Number of edges joining an honest node to a Sybil that is not a gateway.
/// Zero for every graph the model can produce.
std::size_t count_gateway_violations(const ProximityGraph& graph);

// ---------------------------------------------------------------------------
// WiFi tethering challenge

enum class ChallengeMode { Static, Driving };

struct ChallengeContext {
    double distance_m = 0.0;
    ChallengeMode mode = ChallengeMode::Static;
};

/// Piecewise-linear fit of the measured beacon decode rate.
///   Static:  1.0 up to 80 m, linear down to 0 at 160 m.
///   Driving: 0.98 up to 80 m, linear to 0.10 at 140 m, linear to 0 at 160 m.
double challenge_success_prob(const ChallengeContext& ctx);

/// Runs one collocation challenge between u and v; on success the edge
/// weight grows by one. Sybil pairs collude and always pass. An honest device
/// can only be fooled by a gateway Sybil (a real radio), at the same
/// distance-dependent rate as two honest devices.
bool attempt_collocation(ProximityGraph& graph, NodeId u, NodeId v, const ChallengeContext& ctx,
                         Rng& rng);

// ---------------------------------------------------------------------------
// Encounter process

struct EncounterModel {
    std::size_t n = 10000;
    double alpha = 2.0;
    double connectivity_target = 0.999;
    /// 0 means the default guard of 10^4 * n events.
    std::uint64_t max_events = 0;
};

/// Power-law encounter propensities: u^(-1/(alpha-1)), u ~ U(0,1], capped at n.
std::vector<double> draw_encounter_weights(std::size_t n, double alpha, Rng& rng);

/// Grows an honest proximity graph by repeated pairwise encounters, each pair
/// drawn with probability proportional to w_i * w_j, and returns the snapshot
/// taken when the largest component first covers `connectivity_target` of
/// the nodes.
ProximityGraph grow_honest_graph(const EncounterModel& model, Rng& rng);

enum class TrustedPlacement { Random, DegreeSpread };

/// Flags k honest nodes as trusted and returns them in ascending id order.
/// DegreeSpread splits honest nodes into k weighted-degree quantile bands and
/// picks one node from each.
std::vector<NodeId> seed_trusted(ProximityGraph& graph, std::size_t k, TrustedPlacement placement,
                                 Rng& rng);

/// Infrastructure check-ins: each event links one honest user, chosen in
/// proportion to its encounter propensity, to a uniformly chosen trusted node.
void add_trusted_visits(ProximityGraph& graph, std::uint64_t events, Rng& rng);

}  // namespace ghostmap
