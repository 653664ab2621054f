#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "ghostmap/road_network.hpp"
#include "ghostmap/world.hpp"

namespace ghostmap {

/// Road network from
///   {"origin": {"lat", "lon"}?, "junctions": [{"id", "x_mi", "y_mi"}],
///    "segments": [{"id", "class", "from", "to", "length_mi"?, "speed_limit_mph"?}]}
RoadNetwork road_network_from_json(const nlohmann::json& doc);

VehicleSpec vehicle_from_json(const nlohmann::json& doc);

/// Network plus "vehicles" roster and optional "event_ttl_s" / "merge_radius_m".
World world_from_json(const nlohmann::json& doc, std::uint64_t seed);

void write_gps_csv_header(std::ostream& out);
void write_gps_csv(std::ostream& out, const RoadNetwork& network, const std::vector<GpsReport>& reports);

}  // namespace ghostmap
