#include "ghostmap/world_io.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

#include "ghostmap/format.hpp"

namespace ghostmap {

using nlohmann::json;

namespace {

Point point_from(const json& j) {
    if (j.is_array() && j.size() == 2) return Point{j[0].get<double>(), j[1].get<double>()};
    return Point{j.at("x_mi").get<double>(), j.at("y_mi").get<double>()};
}

}  // namespace

RoadNetwork road_network_from_json(const json& doc) {
    LocalProjection projection;
    if (doc.contains("origin")) {
        const auto& o = doc.at("origin");
        projection = LocalProjection(GeoPoint{o.at("lat").get<double>(), o.at("lon").get<double>()});
    }
    RoadNetwork net(projection);
    for (const auto& j : doc.at("junctions")) {
        net.add_junction(j.at("id").get<std::string>(), point_from(j));
    }
    for (const auto& s : doc.at("segments")) {
        net.add_segment(s.at("id").get<std::string>(),
                        parse_road_class(s.value("class", std::string("local"))),
                        s.at("from").get<std::string>(), s.at("to").get<std::string>(),
                        s.value("length_mi", 0.0), s.value("speed_limit_mph", 0.0));
    }
    return net;
}

VehicleSpec vehicle_from_json(const json& doc) {
    VehicleSpec v;
    v.id = doc.at("id").get<std::string>();
    v.kind = parse_vehicle_kind(doc.value("kind", std::string("honest")));
    v.route = doc.value("route", std::vector<std::string>{});
    v.origin = doc.value("origin", std::string{});
    for (const auto& step : doc.value("speed_script", json::array())) {
        v.speed_script.push_back(SpeedStep{step.at(0).get<double>(), step.at(1).get<double>()});
    }
    v.app_state = parse_app_state(doc.value("app_state", std::string("foreground")));
    v.visible = doc.value("visible", true);
    v.account_creation_time = doc.value("account_creation_time", std::int64_t{0});
    v.nickname = doc.value("nickname", std::string{});
    v.depart_s = doc.value("depart_s", 0.0);
    for (const auto& s : doc.value("sessions", json::array())) {
        AppSession session{s.at(0).get<double>()};
        if (s.size() > 1 && !s.at(1).is_null()) session.close_s = s.at(1).get<double>();
        v.sessions.push_back(session);
    }
    if (doc.contains("parked")) v.parked = point_from(doc.at("parked"));
    v.loop_period_s = doc.value("loop_period_s", 0.0);
    v.report_interval_s = doc.value("report_interval_s", 0.0);
    for (const auto& f : doc.value("forged", json::array())) {
        v.forged.push_back(ForgedReport{f.at("time_s").get<double>(), Location::at(point_from(f.at("at"))),
                                        f.value("speed_mph", 0.0)});
    }
    return v;
}

World world_from_json(const json& doc, std::uint64_t seed) {
    WorldConfig cfg;
    cfg.seed = seed;
    cfg.event_ttl_s = doc.value("event_ttl_s", cfg.event_ttl_s);
    cfg.merge_radius_m = doc.value("merge_radius_m", cfg.merge_radius_m);
    cfg.start_time_s = doc.value("start_time_s", cfg.start_time_s);
    World world(road_network_from_json(doc), cfg);
    for (const auto& v : doc.value("vehicles", json::array())) world.add_vehicle(vehicle_from_json(v));
    return world;
}

void write_gps_csv_header(std::ostream& out) {
    out << "time_s,vehicle_id,kind,lat,lon,speed_mph\n";
}

void write_gps_csv(std::ostream& out, const RoadNetwork& network, const std::vector<GpsReport>& reports) {
    for (const auto& r : reports) {
        const GeoPoint g = network.projection().to_geo(r.location.xy);
        out << fixed(r.time_s, 1) << ',' << r.vehicle_id << ',' << to_string(r.kind) << ','
            << fixed(g.lat, 7) << ',' << fixed(g.lon, 7) << ',' << fixed(r.speed_mph, 3) << '\n';
    }
}

}  // namespace ghostmap
