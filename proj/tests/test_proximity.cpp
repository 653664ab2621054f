#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ghostmap/attacks.hpp"
#include "ghostmap/proximity.hpp"

using namespace ghostmap;

namespace {

// Discrete power-law MLE (continuous approximation with the -1/2 shift)
// with x_min picked by the smallest Kolmogorov-Smirnov distance.
double powerlaw_tail_exponent(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    std::vector<double> candidates(x.begin(), x.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_ks = 1e9, best_alpha = 0.0;
    for (double xmin : candidates) {
        if (xmin < 1.0) continue;
        const auto first = std::lower_bound(x.begin(), x.end(), xmin);
        const auto tail = static_cast<std::size_t>(x.end() - first);
        if (tail < 100) break;
        double s = 0.0;
        for (auto it = first; it != x.end(); ++it) s += std::log(*it / (xmin - 0.5));
        const double alpha = 1.0 + static_cast<double>(tail) / s;
        double ks = 0.0;
        for (std::size_t i = 0; i < tail; ++i) {
            const double v = *(first + static_cast<std::ptrdiff_t>(i));
            const double model = 1.0 - std::pow(v / xmin, 1.0 - alpha);
            ks = std::max(ks, std::abs(static_cast<double>(i) / static_cast<double>(tail) - model));
        }
        if (ks < best_ks) {
            best_ks = ks;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

}  // namespace

TEST_CASE("challenge success model") {
    CHECK(challenge_success_prob({50, ChallengeMode::Static}) == 1.0);
    CHECK(challenge_success_prob({80, ChallengeMode::Static}) == 1.0);
    CHECK(challenge_success_prob({120, ChallengeMode::Static}) == doctest::Approx(0.5));
    CHECK(challenge_success_prob({160, ChallengeMode::Static}) == 0.0);
    CHECK(challenge_success_prob({200, ChallengeMode::Static}) == 0.0);
    CHECK(challenge_success_prob({50, ChallengeMode::Driving}) == doctest::Approx(0.98));
    CHECK(challenge_success_prob({140, ChallengeMode::Driving}) == doctest::Approx(0.10));
    CHECK(challenge_success_prob({150, ChallengeMode::Driving}) == doctest::Approx(0.05));
    CHECK(challenge_success_prob({110, ChallengeMode::Driving}) == doctest::Approx((0.98 + 0.10) / 2.0));
    CHECK(challenge_success_prob({200, ChallengeMode::Driving}) == 0.0);
    CHECK_THROWS_AS(challenge_success_prob({-1, ChallengeMode::Static}), std::invalid_argument);
}

TEST_CASE("property: challenge success never rises with distance") {
    for (auto mode : {ChallengeMode::Static, ChallengeMode::Driving}) {
        double prev = 1.0;
        for (double d = 0.0; d <= 250.0; d += 0.25) {
            const double p = challenge_success_prob({d, mode});
            CHECK(p <= prev);
            CHECK(p >= 0.0);
            prev = p;
        }
    }
}

TEST_CASE("collocation challenges by device kind") {
    ProximityGraph g;
    const auto a = g.add_node(NodeKind::Honest);
    const auto b = g.add_node(NodeKind::Honest);
    const auto fake = g.add_node(NodeKind::Sybil);
    const auto fake2 = g.add_node(NodeKind::Sybil);
    const auto gw = g.add_node(NodeKind::Sybil, true);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) CHECK_FALSE(attempt_collocation(g, a, fake, {10, ChallengeMode::Static}, rng));
    CHECK(g.weight(a, fake) == 0);
    CHECK(attempt_collocation(g, fake, fake2, {5000, ChallengeMode::Driving}, rng));
    CHECK(g.weight(fake, fake2) == 1);
    CHECK(attempt_collocation(g, a, gw, {10, ChallengeMode::Static}, rng));
    CHECK_FALSE(attempt_collocation(g, a, b, {300, ChallengeMode::Static}, rng));
    int wins = 0;
    const int tries = 20000;
    for (int i = 0; i < tries; ++i) wins += attempt_collocation(g, a, b, {50, ChallengeMode::Driving}, rng);
    const double se = std::sqrt(0.98 * 0.02 / tries);
    CHECK(std::abs(wins / double(tries) - 0.98) < 4 * se);
    CHECK(g.weight(a, b) == static_cast<Weight>(wins));
    CHECK(count_gateway_violations(g) == 0);
    CHECK_THROWS_AS(attempt_collocation(g, a, a, {1, ChallengeMode::Static}, rng), std::invalid_argument);
}

TEST_CASE("graph bookkeeping") {
    ProximityGraph g;
    const auto a = g.add_node(NodeKind::Honest);
    const auto b = g.add_node(NodeKind::Honest);
    const auto s = g.add_node(NodeKind::Sybil);
    g.add_encounter(a, b);
    g.add_encounter(b, a, 2);
    CHECK(g.weight(a, b) == 3);
    CHECK(g.edge_count() == 1);
    CHECK(g.weighted_degree(a) == 3);
    CHECK(g.total_weight() == 3);
    CHECK_THROWS(g.add_encounter(a, a));
    CHECK_THROWS(g.add_encounter(a, b, 0));
    CHECK_THROWS(g.set_trusted(s, true));
    CHECK_THROWS(g.add_node(NodeKind::Honest, true));
    g.add_encounter(a, s);  // structural violation: s is not a gateway
    CHECK(count_gateway_violations(g) == 1);
}

TEST_CASE("two users connect on the first encounter") {
    EncounterModel m;
    m.n = 2;
    Rng rng(1);
    const auto g = grow_honest_graph(m, rng);
    CHECK(g.edge_count() == 1);
    CHECK(g.total_weight() == 1);
    CHECK(g.largest_component() == 2);
    m.n = 1;
    CHECK_THROWS(grow_honest_graph(m, rng));
}

TEST_CASE("power-law encounter weights") {
    Rng rng(3);
    const auto w = draw_encounter_weights(10000, 2.0, rng);
    CHECK(w.size() == 10000);
    for (double x : w) {
        CHECK(x >= 1.0);
        CHECK(x <= 10000.0);
    }
    // P(w > x) = 1/x for alpha = 2
    const auto above10 = std::count_if(w.begin(), w.end(), [](double x) { return x > 10.0; });
    CHECK(std::abs(static_cast<double>(above10) / 10000.0 - 0.1) < 0.015);
    CHECK_THROWS(draw_encounter_weights(10, 1.0, rng));
}

TEST_CASE("honest graph at 10^4 users: connected snapshot with a heavy tail") {
    EncounterModel m;
    Rng rng(12);
    const auto g = grow_honest_graph(m, rng);
    CHECK(g.node_count() == 10000);
    CHECK(static_cast<double>(g.largest_component()) >= 0.999 * 10000);
    std::vector<double> degree;
    for (NodeId u = 0; u < g.node_count(); ++u) degree.push_back(static_cast<double>(g.weighted_degree(u)));
    const double alpha = powerlaw_tail_exponent(degree);
    INFO("tail exponent " << alpha);
    CHECK(std::abs(alpha - 2.0) <= 0.3);
    for (const auto& e : g.edges()) {
        CHECK(e.weight >= 1);
        CHECK(e.u != e.v);
    }
}

TEST_CASE("property: the encounter process is reproducible and monotone") {
    EncounterModel m;
    m.n = 2000;
    Rng a(77), b(77);
    const auto g1 = grow_honest_graph(m, a);
    const auto g2 = grow_honest_graph(m, b);
    CHECK(g1.edges() == g2.edges());

    // Same stream run to a denser target: a continuation of the same process.
    EncounterModel denser = m;
    denser.connectivity_target = 0.9999;
    Rng c(77);
    const auto g3 = grow_honest_graph(denser, c);
    CHECK(g3.total_weight() > g1.total_weight());
    for (const auto& e : g1.edges()) CHECK(g3.weight(e.u, e.v) >= e.weight);
}

TEST_CASE("trusted seeding") {
    EncounterModel m;
    m.n = 500;
    Rng rng(5);
    auto g = grow_honest_graph(m, rng);
    const auto t = seed_trusted(g, 10, TrustedPlacement::Random, rng);
    CHECK(t.size() == 10);
    CHECK(std::set<NodeId>(t.begin(), t.end()).size() == 10);
    CHECK(g.trusted_nodes() == t);
    CHECK_THROWS(seed_trusted(g, 0, TrustedPlacement::Random, rng));
    CHECK_THROWS(seed_trusted(g, 501, TrustedPlacement::Random, rng));

    auto g2 = grow_honest_graph(m, rng);
    const auto spread = seed_trusted(g2, 10, TrustedPlacement::DegreeSpread, rng);
    std::vector<Weight> deg;
    for (auto u : spread) deg.push_back(g2.weighted_degree(u));
    std::sort(deg.begin(), deg.end());
    CHECK(deg.front() < deg.back());
}

TEST_CASE("trusted visits add edges to trusted nodes only") {
    EncounterModel m;
    m.n = 300;
    Rng rng(6);
    auto g = grow_honest_graph(m, rng);
    const auto before = g.total_weight();
    const auto t = seed_trusted(g, 3, TrustedPlacement::Random, rng);
    add_trusted_visits(g, 100, rng);
    CHECK(g.total_weight() == before + 100);
}

TEST_CASE("Sybil region construction") {
    SybilPlan p;
    p.sybil_count = 1000;
    p.inner_avg_degree = 10;
    Rng rng(1);
    const auto r = build_sybil_region(p, rng);
    const double mean_degree = 2.0 * static_cast<double>(r.total_weight()) / 1000.0;
    CHECK(std::abs(mean_degree - 10.0) <= 0.5);
    CHECK(r.edges.size() < 1000 * 999 / 2);
    // about 5000 collocations in total
    CHECK(r.total_weight() == doctest::Approx(5000).epsilon(0.05));

    ProximityGraph alone;
    for (std::size_t i = 0; i < r.count; ++i) alone.add_node(NodeKind::Sybil, i < r.gateway_count);
    for (const auto& e : r.edges) alone.add_encounter(e.u, e.v, e.weight);
    CHECK(alone.largest_component() == 1000);

    SybilPlan one;
    one.sybil_count = 1;
    one.inner_avg_degree = 0;
    CHECK(build_sybil_region(one, rng).edges.empty());

    SybilPlan small;
    small.sybil_count = 20;
    small.inner_avg_degree = 10;
    CHECK_NOTHROW(build_sybil_region(small, rng));
    small.inner_avg_degree = 25;
    CHECK_THROWS_AS(build_sybil_region(small, rng), std::invalid_argument);
    small.inner_avg_degree = 10;
    small.gateway_count = 21;
    CHECK_THROWS_AS(build_sybil_region(small, rng), std::invalid_argument);
}

TEST_CASE("property: Sybil regions are connected with the planned mean degree") {
    Rng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        SybilPlan p;
        p.sybil_count = 20 + rng() % 400;
        p.inner_avg_degree = (rng() & 1) ? 5.0 : 10.0;
        p.gateway_count = 1 + rng() % p.sybil_count;
        p.topology = (rng() & 1) ? SybilTopology::GatewayTree : SybilTopology::GatewayStar;
        const auto r = build_sybil_region(p, rng);
        const double mean_degree = 2.0 * static_cast<double>(r.total_weight()) / static_cast<double>(p.sybil_count);
        CHECK(std::abs(mean_degree - p.inner_avg_degree) <= 0.05 * p.inner_avg_degree);
        ProximityGraph g;
        for (std::size_t i = 0; i < r.count; ++i) g.add_node(NodeKind::Sybil);
        for (const auto& e : r.edges) g.add_encounter(e.u, e.v, e.weight);
        CHECK(g.largest_component() == p.sybil_count);
    }
}

TEST_CASE("gateway attachment") {
    EncounterModel m;
    m.n = 1000;
    Rng rng(2);
    const auto honest = grow_honest_graph(m, rng);

    SUBCASE("single gateway carries every attack edge") {
        SybilPlan p;
        p.sybil_count = 100;
        p.attack_edge_total = 5000;
        const auto region = build_sybil_region(p, rng);
        const auto g = attach_gateways(honest, region, p, rng);
        const NodeId gw = 1000;
        CHECK(g.node(gw).gateway);
        Weight to_honest = 0;
        for (const auto& [v, w] : g.neighbors(gw)) {
            if (g.node(v).kind == NodeKind::Honest) to_honest += w;
        }
        CHECK(to_honest == 5000);
        CHECK(attack_edge_weight_total(g) == 5000);
        CHECK(count_gateway_violations(g) == 0);
    }
    SUBCASE("edges split evenly over 500 gateways") {
        SybilPlan p;
        p.sybil_count = 1000;
        p.gateway_count = 500;
        p.attack_edge_total = 5000;
        const auto region = build_sybil_region(p, rng);
        const auto g = attach_gateways(honest, region, p, rng);
        for (NodeId s = 1000; s < 2000; ++s) {
            Weight to_honest = 0;
            for (const auto& [v, w] : g.neighbors(s)) {
                if (g.node(v).kind == NodeKind::Honest) to_honest += w;
            }
            CHECK(to_honest == (g.node(s).gateway ? 10u : 0u));
        }
    }
    SUBCASE("honest edges survive unchanged and weights multiply") {
        SybilPlan p;
        p.sybil_count = 50;
        p.gateway_count = 7;
        p.attack_edge_total = 333;
        p.attack_edge_weight = 3;
        const auto region = build_sybil_region(p, rng);
        const auto g = attach_gateways(honest, region, p, rng);
        for (const auto& e : honest.edges()) CHECK(g.weight(e.u, e.v) == e.weight);
        CHECK(attack_edge_weight_total(g) == 999);
        CHECK(count_gateway_violations(g) == 0);
    }
}
