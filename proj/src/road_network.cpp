#include "ghostmap/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ghostmap {

double default_speed_limit(RoadClass road_class) {
    switch (road_class) {
        case RoadClass::Highway: return 65.0;
        case RoadClass::Local: return 45.0;
        case RoadClass::Residential: return 25.0;
    }
    throw std::invalid_argument("unknown road class");
}

double congestion_threshold(RoadClass road_class) {
    switch (road_class) {
        case RoadClass::Highway: return 40.0;
        case RoadClass::Local: return 20.0;
        case RoadClass::Residential: return 15.0;
    }
    throw std::invalid_argument("unknown road class");
}

std::string_view to_string(RoadClass road_class) {
    switch (road_class) {
        case RoadClass::Highway: return "highway";
        case RoadClass::Local: return "local";
        case RoadClass::Residential: return "residential";
    }
    return "?";
}

RoadClass parse_road_class(std::string_view text) {
    if (text == "highway") return RoadClass::Highway;
    if (text == "local") return RoadClass::Local;
    if (text == "residential") return RoadClass::Residential;
    throw std::invalid_argument("unknown road class '" + std::string(text) + "'");
}

double distance_mi(const Point& a, const Point& b) {
    return std::hypot(a.x_mi - b.x_mi, a.y_mi - b.y_mi);
}

LocalProjection::LocalProjection(GeoPoint origin)
    : origin_(origin),
      mi_per_deg_lon_(kMilesPerDegreeLat * std::cos(origin.lat * std::numbers::pi / 180.0)) {
    if (!(mi_per_deg_lon_ > 0.0)) throw std::invalid_argument("projection origin too close to a pole");
}

GeoPoint LocalProjection::to_geo(const Point& p) const {
    return GeoPoint{origin_.lat + p.y_mi / kMilesPerDegreeLat, origin_.lon + p.x_mi / mi_per_deg_lon_};
}

Point LocalProjection::to_plane(const GeoPoint& g) const {
    return Point{(g.lon - origin_.lon) * mi_per_deg_lon_, (g.lat - origin_.lat) * kMilesPerDegreeLat};
}

void RoadNetwork::add_junction(std::string id, Point position) {
    if (id.empty()) throw std::invalid_argument("junction id must be non-empty");
    if (junction_index_.contains(id)) throw std::invalid_argument("duplicate junction '" + id + "'");
    junction_index_.emplace(id, junctions_.size());
    junctions_.push_back(Junction{std::move(id), position});
    incident_.emplace_back();
}

const RoadSegment& RoadNetwork::add_segment(std::string id, RoadClass road_class,
                                            const std::string& from, const std::string& to,
                                            double length_mi, double speed_limit_mph) {
    if (id.empty()) throw std::invalid_argument("segment id must be non-empty");
    if (segment_index_.contains(id)) throw std::invalid_argument("duplicate segment '" + id + "'");
    const auto a = junction_index_.find(from);
    const auto b = junction_index_.find(to);
    if (a == junction_index_.end() || b == junction_index_.end()) {
        throw std::invalid_argument("segment '" + id + "' references an unknown junction");
    }
    if (a->second == b->second) throw std::invalid_argument("segment '" + id + "' is a loop");

    if (length_mi <= 0.0) {
        length_mi = distance_mi(junctions_[a->second].position, junctions_[b->second].position);
    }
    if (speed_limit_mph <= 0.0) speed_limit_mph = default_speed_limit(road_class);
    if (!(length_mi > 0.0)) throw std::invalid_argument("segment '" + id + "' has zero length");

    const auto index = segments_.size();
    segment_index_.emplace(id, index);
    segments_.push_back(RoadSegment{std::move(id), road_class, speed_limit_mph, length_mi, from, to});
    incident_[a->second].push_back(index);
    incident_[b->second].push_back(index);
    return segments_.back();
}

bool RoadNetwork::has_segment(std::string_view id) const {
    return segment_index_.contains(std::string(id));
}

bool RoadNetwork::has_junction(std::string_view id) const {
    return junction_index_.contains(std::string(id));
}

std::size_t RoadNetwork::segment_index(std::string_view id) const {
    const auto it = segment_index_.find(std::string(id));
    if (it == segment_index_.end()) throw std::out_of_range("unknown segment '" + std::string(id) + "'");
    return it->second;
}

const RoadSegment& RoadNetwork::segment(std::string_view id) const {
    return segments_[segment_index(id)];
}

const Junction& RoadNetwork::junction(std::string_view id) const {
    const auto it = junction_index_.find(std::string(id));
    if (it == junction_index_.end()) throw std::out_of_range("unknown junction '" + std::string(id) + "'");
    return junctions_[it->second];
}

const std::vector<std::size_t>& RoadNetwork::incident(std::string_view junction) const {
    const auto it = junction_index_.find(std::string(junction));
    if (it == junction_index_.end()) {
        throw std::out_of_range("unknown junction '" + std::string(junction) + "'");
    }
    return incident_[it->second];
}

const std::string& RoadNetwork::other_end(const RoadSegment& segment,
                                          std::string_view junction) const {
    if (segment.from == junction) return segment.to;
    if (segment.to == junction) return segment.from;
    throw std::invalid_argument("segment '" + segment.id + "' does not touch junction '" +
                                std::string(junction) + "'");
}

Point RoadNetwork::locate(const SegmentPosition& pos) const {
    const auto& seg = segment(pos.segment);
    const Point a = junction(seg.from).position;
    const Point b = junction(seg.to).position;
    const double f = std::clamp(pos.offset_mi / seg.length_mi, 0.0, 1.0);
    return Point{a.x_mi + (b.x_mi - a.x_mi) * f, a.y_mi + (b.y_mi - a.y_mi) * f};
}

bool RoadNetwork::connected() const {
    if (junctions_.empty()) return true;
    std::vector<bool> seen(junctions_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const auto j = stack.back();
        stack.pop_back();
        for (auto s : incident_[j]) {
            const auto& seg = segments_[s];
            const auto k = junction_index_.at(seg.from == junctions_[j].id ? seg.to : seg.from);
            if (!seen[k]) {
                seen[k] = true;
                ++reached;
                stack.push_back(k);
            }
        }
    }
    return reached == junctions_.size();
}

}  // namespace ghostmap
