#include "ghostmap/graph_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ghostmap/format.hpp"

namespace ghostmap {

namespace {

std::string_view kind_label(const Node& n) {
    if (n.kind == NodeKind::Honest) return "honest";
    return n.gateway ? "gateway" : "sybil";
}

}  // namespace

void write_node_manifest(std::ostream& out, const ProximityGraph& graph) {
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        const auto& n = graph.node(u);
        out << u << ' ' << kind_label(n) << ' ' << (n.trusted ? 1 : 0) << '\n';
    }
}

void write_edge_list(std::ostream& out, const ProximityGraph& graph) {
    for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
}

ProximityGraph read_graph(std::istream& nodes, std::istream& edges) {
    ProximityGraph g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(nodes, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream in(line);
        NodeId id;
        std::string kind;
        int trusted;
        if (!(in >> id >> kind >> trusted) || (trusted != 0 && trusted != 1)) {
            throw std::runtime_error("bad node manifest line " + std::to_string(lineno));
        }
        if (id != g.node_count()) {
            throw std::runtime_error("node manifest line " + std::to_string(lineno) + ": ids must be consecutive");
        }
        if (kind == "honest") {
            g.add_node(NodeKind::Honest);
        } else if (kind == "sybil" || kind == "gateway") {
            g.add_node(NodeKind::Sybil, kind == "gateway");
        } else {
            throw std::runtime_error("node manifest line " + std::to_string(lineno) + ": unknown kind " + kind);
        }
        if (trusted) g.set_trusted(id, true);
    }
    lineno = 0;
    while (std::getline(edges, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream in(line);
        NodeId u, v;
        Weight w;
        if (!(in >> u >> v >> w)) throw std::runtime_error("bad edge line " + std::to_string(lineno));
        if (u < v ? g.weight(u, v) : g.weight(v, u)) {
            throw std::runtime_error("edge line " + std::to_string(lineno) + ": duplicate edge");
        }
        g.add_encounter(u, v, w);
    }
    return g;
}

void write_ranked_csv(std::ostream& out, const ProximityGraph& graph, const RankedList& ranked) {
    out << "node_id,kind,trusted,trust,weighted_degree,score,rank\n";
    std::size_t rank = 0;
    for (const auto& e : ranked.entries) {
        const auto& n = graph.node(e.node);
        out << e.node << ',' << kind_label(n) << ',' << (n.trusted ? 1 : 0) << ',' << fixed(e.trust, 9) << ','
            << fixed(e.degree, 0) << ',' << fixed(e.score, 9) << ',' << ++rank << '\n';
    }
}

DetectionMetrics evaluate_detection(const RankedList& ranked, const TrustVector& trust, double cutoff) {
    const auto rates = fp_fn_at_cutoff(ranked, cutoff);
    return DetectionMetrics{auc(ranked), rates.false_positive, rates.false_negative, cutoff, trust.iterations};
}

nlohmann::json to_json(const DetectionMetrics& m) {
    return nlohmann::json{
        {"auc", m.auc}, {"fp", m.fp}, {"fn", m.fn}, {"cutoff", m.cutoff}, {"iterations", m.iterations}};
}

}  // namespace ghostmap
