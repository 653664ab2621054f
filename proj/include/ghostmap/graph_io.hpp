#pragma once

#include <iosfwd>

#include <json.hpp>

#include "ghostmap/proximity.hpp"
#include "ghostmap/sybilrank.hpp"

namespace ghostmap {

/// One line per node: `node_id kind trusted_flag`, kind being honest, sybil
/// or gateway. Encounter propensities are not stored.
void write_node_manifest(std::ostream& out, const ProximityGraph& graph);

/// One line per edge, u < v ascending: `src_id dst_id weight`.
void write_edge_list(std::ostream& out, const ProximityGraph& graph);

/// Inverse of the two writers. Node ids must be 0..n-1 in order.
ProximityGraph read_graph(std::istream& nodes, std::istream& edges);

/// node_id,kind,trusted,trust,weighted_degree,score,rank (rank 1 = least trusted)
void write_ranked_csv(std::ostream& out, const ProximityGraph& graph, const RankedList& ranked);

struct DetectionMetrics {
    double auc = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double cutoff = 0.1;
    std::size_t iterations = 0;
};

DetectionMetrics evaluate_detection(const RankedList& ranked, const TrustVector& trust, double cutoff);
nlohmann::json to_json(const DetectionMetrics& m);

}  // namespace ghostmap
