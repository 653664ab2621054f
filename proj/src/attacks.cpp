#include "ghostmap/attacks.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace ghostmap {

Weight SybilRegion::total_weight() const {
    Weight total = 0;
    for (const auto& e : edges) total += e.weight;
    return total;
}

void validate(const SybilPlan& plan) {
    if (plan.sybil_count == 0) throw std::invalid_argument("sybil_count must be >= 1");
    if (plan.gateway_count == 0 || plan.gateway_count > plan.sybil_count) {
        throw std::invalid_argument("gateway_count must be in [1, sybil_count]");
    }
    if (plan.attack_edge_weight == 0) throw std::invalid_argument("attack edge weight must be >= 1");
    if (!(plan.inner_avg_degree >= 0.0)) throw std::invalid_argument("inner degree must be >= 0");
    if (plan.sybil_count > 1) {
        const auto n = static_cast<double>(plan.sybil_count);
        if (plan.inner_avg_degree > n - 1.0) {
            throw std::invalid_argument("inner degree " + std::to_string(plan.inner_avg_degree) +
                                        " infeasible for " + std::to_string(plan.sybil_count) +
                                        " Sybils");
        }
        if (plan.inner_avg_degree * n / 2.0 < n - 1.0) {
            throw std::invalid_argument("inner degree too low to keep the Sybil region connected");
        }
    }
}

SybilRegion build_sybil_region(const SybilPlan& plan, Rng& rng) {
    validate(plan);
    SybilRegion region;
    region.count = plan.sybil_count;
    region.gateway_count = plan.gateway_count;
    region.activity = draw_encounter_weights(plan.sybil_count, plan.inner_alpha, rng);
    if (plan.sybil_count == 1) return region;

    const auto n = plan.sybil_count;
    const auto g = plan.gateway_count;
    const auto budget = static_cast<Weight>(
        std::llround(plan.inner_avg_degree * static_cast<double>(n) / 2.0));

    std::map<std::pair<NodeId, NodeId>, Weight> weights;
    const auto link = [&](NodeId a, NodeId b) {
        if (a > b) std::swap(a, b);
        ++weights[{a, b}];
    };

    const auto attach_to_earlier = [&](NodeId node, const std::vector<NodeId>& members) {
        std::vector<double> w;
        w.reserve(members.size());
        for (NodeId m : members) w.push_back(region.activity[m]);
        std::discrete_distribution<std::size_t> choose(w.begin(), w.end());
        link(node, members[choose(rng)]);
    };

    if (plan.topology == SybilTopology::GatewayStar) {
        // every non-gateway Sybil links straight to its gateway
        for (auto j = static_cast<NodeId>(g); j < n; ++j) {
            link(j, static_cast<NodeId>((j - g) % g));
        }
    } else {
        // each gateway roots a tree grown by activity-weighted attachment
        std::vector<std::vector<NodeId>> groups(g);
        for (NodeId k = 0; k < g; ++k) groups[k].push_back(k);
        for (auto j = static_cast<NodeId>(g); j < n; ++j) {
            auto& members = groups[(j - g) % g];
            attach_to_earlier(j, members);
            members.push_back(j);
        }
    }
    std::vector<NodeId> chained{0};
    for (NodeId k = 1; k < g; ++k) {
        attach_to_earlier(k, chained);
        chained.push_back(k);
    }

    std::discrete_distribution<NodeId> pick(region.activity.begin(), region.activity.end());
    for (Weight spent = n - 1; spent < budget; ++spent) {
        const NodeId a = pick(rng);
        NodeId b = pick(rng);
        while (b == a) b = pick(rng);
        link(a, b);
    }

    region.edges.reserve(weights.size());
    for (const auto& [key, w] : weights) region.edges.push_back(Edge{key.first, key.second, w});
    return region;
}

ProximityGraph attach_gateways(const ProximityGraph& honest, const SybilRegion& region,
                               const SybilPlan& plan, Rng& rng) {
    validate(plan);
    if (region.count != plan.sybil_count || region.gateway_count != plan.gateway_count) {
        throw std::invalid_argument("Sybil region does not match plan");
    }
    if (honest.sybil_count() != 0) throw std::invalid_argument("base graph already has Sybils");
    const auto honest_n = honest.node_count();
    if (plan.attack_edge_total > 0 && honest_n == 0) {
        throw std::invalid_argument("no honest users to attack");
    }

    ProximityGraph merged = honest;
    const auto base = static_cast<NodeId>(honest_n);
    for (std::size_t i = 0; i < region.count; ++i) {
        merged.add_node(NodeKind::Sybil, i < region.gateway_count, region.activity[i]);
    }
    for (const auto& e : region.edges) merged.add_encounter(base + e.u, base + e.v, e.weight);

    for (std::size_t k = 0; k < plan.attack_edge_total; ++k) {
        const auto gateway = base + static_cast<NodeId>(k % plan.gateway_count);
        const auto victim = static_cast<NodeId>(uniform_index(rng, honest_n));
        merged.add_encounter(gateway, victim, plan.attack_edge_weight);
    }
    return merged;
}

Weight attack_edge_weight_total(const ProximityGraph& graph) {
    Weight total = 0;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        if (graph.node(u).kind != NodeKind::Sybil) continue;
        for (const auto& [v, w] : graph.neighbors(u)) {
            if (graph.node(v).kind == NodeKind::Honest) total += w;
        }
    }
    return total;
}

}  // namespace ghostmap
