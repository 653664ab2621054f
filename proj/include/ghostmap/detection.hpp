#pragma once

#include <cstdint>
#include <vector>

#include "ghostmap/attacks.hpp"
#include "ghostmap/graph_io.hpp"
#include "ghostmap/proximity.hpp"
#include "ghostmap/sybilrank.hpp"

namespace ghostmap {

struct DetectionSetup {
    SybilPlan plan;
    std::size_t trusted = 10;
    TrustedPlacement placement = TrustedPlacement::Random;
    std::uint64_t trusted_visits = 0;
    SybilRankOptions rank;
    double cutoff = 0.1;
};

struct DetectionRun {
    ProximityGraph graph;
    std::vector<NodeId> trusted;
    TrustVector trust;
    RankedList ranked;
    DetectionMetrics metrics;
};

/// Attack, seed, rank and score one honest graph. Each stage draws from its
/// own stream derived from `seed`, so changing the trusted count leaves the
/// Sybil region and its attack edges untouched (and trusted sets nest).
DetectionRun run_detection(const ProximityGraph& honest, const DetectionSetup& setup, std::uint64_t seed);

}  // namespace ghostmap
