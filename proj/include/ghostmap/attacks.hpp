#pragma once

#include <cstddef>
#include <vector>

#include "ghostmap/proximity.hpp"
#include "ghostmap/rng.hpp"

namespace ghostmap {

/// How non-gateway Sybils hang off their gateway.
enum class SybilTopology {
    /// Direct edge from every non-gateway Sybil to its gateway.
    GatewayStar,
    /// Activity-weighted random tree rooted at each gateway.
    GatewayTree,
};

struct SybilPlan {
    std::size_t sybil_count = 1000;
    double inner_avg_degree = 10.0;
    /// Sybils backed by real devices. Local ids [0, gateway_count) in the region.
    std::size_t gateway_count = 1;
    std::size_t attack_edge_total = 0;
    /// Collocations per attack edge; > 1 models repeated meetings with a victim.
    Weight attack_edge_weight = 1;
    double inner_alpha = 2.0;
    SybilTopology topology = SybilTopology::GatewayTree;
};

/// Sybil-only subgraph in local ids [0, count).
struct SybilRegion {
    std::size_t count = 0;
    std::size_t gateway_count = 0;
    std::vector<double> activity;
    std::vector<Edge> edges;

    [[nodiscard]] Weight total_weight() const;
};

void validate(const SybilPlan& plan);

/// Builds the colluding Sybil subgraph. Non-gateway Sybils are dealt
/// round-robin to gateways; with GatewayTree each one links to an earlier
/// member of its gateway's group picked by activity, with GatewayStar it links
/// to the gateway itself. Gateways are chained into a tree, and the rest of
/// the weight budget (count * inner_avg_degree / 2) is spent on power-law
/// pair encounters. The result is connected with the requested mean weighted
/// degree.
SybilRegion build_sybil_region(const SybilPlan& plan, Rng& rng);

/// Appends the region to a copy of the honest graph and creates
/// attack_edge_total attack edges from gateways (round-robin) to uniformly
/// random honest users. Repeated (gateway, victim) pairs merge into one
/// heavier edge.
ProximityGraph attach_gateways(const ProximityGraph& honest, const SybilRegion& region,
                               const SybilPlan& plan, Rng& rng);

/// Sum of weights on honest-Sybil edges.
Weight attack_edge_weight_total(const ProximityGraph& graph);

}  // namespace ghostmap
