#include "ghostmap/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace ghostmap {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns the size of the merged set.
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return size_[a];
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return size_[a];
    }

    std::size_t size_of(std::size_t x) { return size_[find(x)]; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

}  // namespace

NodeId ProximityGraph::add_node(NodeKind kind, bool gateway, double activity) {
    if (kind == NodeKind::Honest && gateway) {
        throw std::invalid_argument("only Sybil nodes can be gateways");
    }
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{kind, false, gateway, activity});
    adj_.emplace_back();
    degree_.push_back(0);
    if (kind == NodeKind::Honest) ++honest_count_;
    return id;
}

void ProximityGraph::add_encounter(NodeId u, NodeId v, Weight w) {
    if (u >= nodes_.size() || v >= nodes_.size()) {
        throw std::out_of_range("encounter references unknown node");
    }
    if (u == v) throw std::invalid_argument("self-loop encounter");
    if (w == 0) throw std::invalid_argument("encounter weight must be >= 1");
    auto [it, inserted] = adj_[u].try_emplace(v, 0);
    it->second += w;
    adj_[v][u] += w;
    if (inserted) ++edge_count_;
    degree_[u] += w;
    degree_[v] += w;
    total_weight_ += w;
}

void ProximityGraph::set_trusted(NodeId u, bool trusted) {
    auto& n = nodes_.at(u);
    if (trusted && n.kind != NodeKind::Honest) {
        throw std::invalid_argument("trusted nodes must be honest");
    }
    n.trusted = trusted;
}

Weight ProximityGraph::weight(NodeId u, NodeId v) const {
    const auto& nbrs = adj_.at(u);
    const auto it = nbrs.find(v);
    return it == nbrs.end() ? 0 : it->second;
}

std::vector<NodeId> ProximityGraph::trusted_nodes() const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < nodes_.size(); ++u) {
        if (nodes_[u].trusted) out.push_back(u);
    }
    return out;
}

std::vector<Edge> ProximityGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < adj_.size(); ++u) {
        for (const auto& [v, w] : adj_[u]) {
            if (u < v) out.push_back(Edge{u, v, w});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    return out;
}

std::size_t ProximityGraph::largest_component() const {
    DisjointSets sets(nodes_.size());
    std::size_t best = nodes_.empty() ? 0 : 1;
    for (NodeId u = 0; u < adj_.size(); ++u) {
        for (const auto& [v, w] : adj_[u]) {
            if (u < v) best = std::max(best, sets.unite(u, v));
        }
    }
    return best;
}

std::size_t count_gateway_violations(const ProximityGraph& graph) {
    std::size_t bad = 0;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        const auto& nu = graph.node(u);
        if (nu.kind != NodeKind::Sybil || nu.gateway) continue;
        for (const auto& [v, w] : graph.neighbors(u)) {
            if (graph.node(v).kind == NodeKind::Honest) ++bad;
        }
    }
    return bad;
}

double challenge_success_prob(const ChallengeContext& ctx) {
    const double d = ctx.distance_m;
    if (!(d >= 0.0)) throw std::invalid_argument("challenge distance must be >= 0");
    const auto lerp = [](double x, double x0, double y0, double x1, double y1) {
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    };
    if (ctx.mode == ChallengeMode::Static) {
        if (d <= 80.0) return 1.0;
        if (d >= 160.0) return 0.0;
        return lerp(d, 80.0, 1.0, 160.0, 0.0);
    }
    if (d <= 80.0) return 0.98;
    if (d <= 140.0) return lerp(d, 80.0, 0.98, 140.0, 0.10);
    if (d >= 160.0) return 0.0;
    return lerp(d, 140.0, 0.10, 160.0, 0.0);
}

bool attempt_collocation(ProximityGraph& graph, NodeId u, NodeId v, const ChallengeContext& ctx,
                         Rng& rng) {
    if (u == v) throw std::invalid_argument("collocation needs two distinct devices");
    const Node& a = graph.node(u);
    const Node& b = graph.node(v);

    bool success = false;
    if (a.kind == NodeKind::Sybil && b.kind == NodeKind::Sybil) {
        success = true;
    } else {
        const bool fake_radio = (a.kind == NodeKind::Sybil && !a.gateway) ||
                                (b.kind == NodeKind::Sybil && !b.gateway);
        if (!fake_radio) {
            success = std::bernoulli_distribution(challenge_success_prob(ctx))(rng);
        }
    }
    if (success) graph.add_encounter(u, v);
    return success;
}

std::vector<double> draw_encounter_weights(std::size_t n, double alpha, Rng& rng) {
    if (!(alpha > 1.0)) throw std::invalid_argument("power-law exponent must exceed 1");
    const double cap = static_cast<double>(n);
    std::vector<double> w(n);
    for (auto& x : w) {
        x = std::min(std::pow(uniform_open_closed(rng), -1.0 / (alpha - 1.0)), cap);
    }
    return w;
}

ProximityGraph grow_honest_graph(const EncounterModel& model, Rng& rng) {
    if (model.n < 2) throw std::invalid_argument("encounter model needs n >= 2");
    if (!(model.connectivity_target > 0.0 && model.connectivity_target <= 1.0)) {
        throw std::invalid_argument("connectivity target must be in (0, 1]");
    }
    const auto weights = draw_encounter_weights(model.n, model.alpha, rng);

    ProximityGraph graph;
    for (double w : weights) graph.add_node(NodeKind::Honest, false, w);

    const auto needed = static_cast<std::size_t>(
        std::ceil(model.connectivity_target * static_cast<double>(model.n) - 1e-9));
    const std::uint64_t guard = model.max_events ? model.max_events : 10000ULL * model.n;

    // Drawing both endpoints independently in proportion to w and rejecting
    // i == j gives P(i,j) proportional to w_i * w_j over distinct pairs.
    std::discrete_distribution<NodeId> pick(weights.begin(), weights.end());
    DisjointSets sets(model.n);
    std::size_t largest = 1;
    for (std::uint64_t event = 0; largest < needed; ++event) {
        if (event >= guard) {
            throw std::runtime_error("encounter process did not reach connectivity target after " +
                                     std::to_string(guard) + " events");
        }
        const NodeId i = pick(rng);
        NodeId j = pick(rng);
        while (j == i) j = pick(rng);
        graph.add_encounter(i, j);
        largest = std::max(largest, sets.unite(i, j));
    }
    return graph;
}

std::vector<NodeId> seed_trusted(ProximityGraph& graph, std::size_t k, TrustedPlacement placement,
                                 Rng& rng) {
    if (k == 0) throw std::invalid_argument("at least one trusted node is required");
    std::vector<NodeId> honest;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        if (graph.node(u).kind == NodeKind::Honest) honest.push_back(u);
    }
    if (k > honest.size()) {
        throw std::invalid_argument("cannot trust " + std::to_string(k) + " nodes out of " +
                                    std::to_string(honest.size()) + " honest");
    }

    std::vector<NodeId> chosen;
    chosen.reserve(k);
    if (placement == TrustedPlacement::Random) {
        // partial Fisher-Yates
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = i + uniform_index(rng, honest.size() - i);
            std::swap(honest[i], honest[j]);
            chosen.push_back(honest[i]);
        }
    } else {
        std::stable_sort(honest.begin(), honest.end(), [&](NodeId a, NodeId b) {
            return graph.weighted_degree(a) < graph.weighted_degree(b);
        });
        for (std::size_t band = 0; band < k; ++band) {
            const auto lo = band * honest.size() / k;
            const auto hi = (band + 1) * honest.size() / k;
            chosen.push_back(honest[lo + uniform_index(rng, hi - lo)]);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    for (NodeId u : chosen) graph.set_trusted(u, true);
    return chosen;
}

void add_trusted_visits(ProximityGraph& graph, std::uint64_t events, Rng& rng) {
    const auto trusted = graph.trusted_nodes();
    if (trusted.empty()) throw std::invalid_argument("no trusted nodes to visit");
    if (events == 0) return;

    std::vector<double> propensity(graph.node_count(), 0.0);
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        const auto& n = graph.node(u);
        if (n.kind != NodeKind::Honest || n.trusted) continue;
        propensity[u] = n.activity > 0.0 ? n.activity
                                         : static_cast<double>(graph.weighted_degree(u));
    }
    if (std::all_of(propensity.begin(), propensity.end(), [](double p) { return p == 0.0; })) {
        return;
    }
    std::discrete_distribution<NodeId> visitor(propensity.begin(), propensity.end());
    for (std::uint64_t e = 0; e < events; ++e) {
        const NodeId hub = trusted[uniform_index(rng, trusted.size())];
        graph.add_encounter(visitor(rng), hub);
    }
}

}  // namespace ghostmap
