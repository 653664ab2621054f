#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ghostmap {

enum class RoadClass { Highway, Local, Residential };

double default_speed_limit(RoadClass road_class);
/// Aggregate speed below which a segment is shown as congested.
double congestion_threshold(RoadClass road_class);

std::string_view to_string(RoadClass road_class);
RoadClass parse_road_class(std::string_view text);

inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kMilesPerDegreeLat = 69.0;

/// Planar position in miles relative to the network origin.
struct Point {
    double x_mi = 0.0;
    double y_mi = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

double distance_mi(const Point& a, const Point& b);

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Equirectangular projection around a fixed origin. Only used at the
/// boundary (query layer, CSV output); the simulation itself stays planar.
class LocalProjection {
public:
    LocalProjection() : LocalProjection(GeoPoint{34.05, -118.25}) {}
    explicit LocalProjection(GeoPoint origin);

    [[nodiscard]] GeoPoint to_geo(const Point& p) const;
    [[nodiscard]] Point to_plane(const GeoPoint& g) const;
    [[nodiscard]] const GeoPoint& origin() const { return origin_; }
    [[nodiscard]] double miles_per_degree_lon() const { return mi_per_deg_lon_; }

private:
    GeoPoint origin_;
    double mi_per_deg_lon_;
};

struct Junction {
    std::string id;
    Point position;
};

struct RoadSegment {
    std::string id;
    RoadClass road_class = RoadClass::Local;
    double speed_limit_mph = 0.0;
    double length_mi = 0.0;
    std::string from;
    std::string to;
};

/// A location on the road: distance in miles from the segment's `from` end.
struct SegmentPosition {
    std::string segment;
    double offset_mi = 0.0;

    friend bool operator==(const SegmentPosition&, const SegmentPosition&) = default;
};

/// Undirected road graph. Segments are two-way.
class RoadNetwork {
public:
    RoadNetwork() = default;
    explicit RoadNetwork(LocalProjection projection) : projection_(projection) {}

    void add_junction(std::string id, Point position);

    /// speed_limit_mph <= 0 selects the class default; length_mi <= 0 uses the
    /// straight-line distance between the endpoints.
    const RoadSegment& add_segment(std::string id, RoadClass road_class, const std::string& from,
                                   const std::string& to, double length_mi = 0.0,
                                   double speed_limit_mph = 0.0);

    [[nodiscard]] bool has_segment(std::string_view id) const;
    [[nodiscard]] bool has_junction(std::string_view id) const;
    [[nodiscard]] const RoadSegment& segment(std::string_view id) const;
    [[nodiscard]] const RoadSegment& segment_at(std::size_t index) const { return segments_.at(index); }
    [[nodiscard]] std::size_t segment_index(std::string_view id) const;
    [[nodiscard]] const Junction& junction(std::string_view id) const;

    [[nodiscard]] const std::vector<RoadSegment>& segments() const { return segments_; }
    [[nodiscard]] const std::vector<Junction>& junctions() const { return junctions_; }

    /// Segment indices touching a junction, in insertion order.
    [[nodiscard]] const std::vector<std::size_t>& incident(std::string_view junction) const;

    /// The junction at the far end of `segment` when entering from `junction`.
    [[nodiscard]] const std::string& other_end(const RoadSegment& segment,
                                               std::string_view junction) const;

    [[nodiscard]] Point locate(const SegmentPosition& pos) const;
    [[nodiscard]] bool connected() const;

    [[nodiscard]] const LocalProjection& projection() const { return projection_; }

private:
    LocalProjection projection_;
    std::vector<Junction> junctions_;
    std::vector<RoadSegment> segments_;
    std::unordered_map<std::string, std::size_t> junction_index_;
    std::unordered_map<std::string, std::size_t> segment_index_;
    std::vector<std::vector<std::size_t>> incident_;
};

}  // namespace ghostmap
