#include "ghostmap/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ghostmap/world.hpp"

namespace ghostmap {

void TrackConfig::validate(double report_interval_s) const {
    if (!(area_width_mi > 0.0) || !(area_height_mi > 0.0)) {
        throw std::invalid_argument("search area must have positive extent");
    }
    if (query_agents == 0) throw std::invalid_argument("tracking needs at least one query agent");
    if (!(round_interval_s > 0.0)) throw std::invalid_argument("round interval must be positive");
    if (!(query_latency_s >= 0.0)) throw std::invalid_argument("query latency must be >= 0");
    if (!(max_target_speed_mph > 0.0)) throw std::invalid_argument("max target speed must be positive");
    if (max_rounds_without_capture == 0) throw std::invalid_argument("round budget must be positive");
    const double reach = max_target_speed_mph * report_interval_s / 3600.0;
    if (reach > std::max(area_width_mi, area_height_mi)) {
        throw std::invalid_argument("search area too small: a target at max speed covers " +
                                    std::to_string(reach) + " mi between reports");
    }
}

std::int64_t bootstrap_target(const ServerCluster& cluster, const LocalProjection& projection, Point where,
                              double radius_mi, double t_from, double t_to, double now, Rng& rng) {
    if (!(radius_mi > 0.0)) throw std::invalid_argument("bootstrap radius must be positive");
    const auto area = SearchArea::centered(projection, where, 2 * radius_mi, 2 * radius_mi);
    std::vector<std::int64_t> matches;
    for (const auto& r : merge_server_views(cluster, area, now, 1, rng)) {
        if (r.gps_timestamp < t_from || r.gps_timestamp > t_to) continue;
        if (distance_mi(projection.to_plane(r.gps), where) > radius_mi) continue;
        matches.push_back(r.account_creation_time);
    }
    if (matches.empty()) throw BootstrapError("no visible user at the bootstrap location", {});
    if (matches.size() > 1) {
        std::string list;
        for (auto id : matches) list += (list.empty() ? "" : ", ") + std::to_string(id);
        throw BootstrapError("ambiguous bootstrap, candidates: " + list, matches);
    }
    return matches.front();
}

double TrackTrace::mean_delay_s() const {
    if (captured.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& c : captured) sum += c.delay_s;
    return sum / static_cast<double>(captured.size());
}

Tracker::Tracker(std::int64_t target, TrackConfig config, const LocalProjection& projection, Point start,
                 double start_time, std::uint64_t seed)
    : config_(config), projection_(projection), last_pos_(start), last_fix_time_(start_time) {
    if (config_.query_agents == 0) throw std::invalid_argument("tracking needs at least one query agent");
    trace_.target = target;
    // One stream per agent: what an agent sees does not depend on who ran first.
    for (std::size_t i = 0; i < config_.query_agents; ++i) agent_rngs_.emplace_back(derive_seed(seed, i));
}

Point Tracker::predicted_position(double now) const {
    if (!velocity_) return last_pos_;
    const double dt = now - last_fix_time_;
    return Point{last_pos_.x_mi + velocity_->x_mi * dt, last_pos_.y_mi + velocity_->y_mi * dt};
}

SearchArea Tracker::area_at(double now) const {
    return SearchArea::centered(projection_, predicted_position(now), config_.area_width_mi,
                                config_.area_height_mi);
}

void Tracker::step(const ServerCluster& cluster, double now) {
    if (trace_.lost) return;
    const auto area = area_at(now);
    const auto servers = cluster.server_count();

    const UserRecord* best = nullptr;
    std::size_t best_server = 0;
    std::vector<std::vector<UserRecord>> results(config_.query_agents);
    for (std::size_t i = 0; i < config_.query_agents; ++i) {
        const std::size_t server = home_ ? *home_ : (i + trace_.rounds) % servers;
        results[i] = cluster.query(server, area, now, agent_rngs_[i]);
        ++trace_.queries;
        for (const auto& r : results[i]) {
            if (r.account_creation_time != trace_.target || r.gps_timestamp <= last_fix_time_) continue;
            if (!best || r.gps_timestamp > best->gps_timestamp) {
                best = &r;
                best_server = server;
            }
        }
    }
    ++trace_.rounds;

    if (!best) {
        if (++dry_rounds_ > config_.max_rounds_without_capture) trace_.lost = true;
        return;
    }
    dry_rounds_ = 0;
    const double captured_at = now + config_.query_latency_s;
    trace_.captured.push_back(
        Capture{best->gps, best->gps_timestamp, captured_at, captured_at - best->gps_timestamp, best_server});
    // Only the home server can hold a fix younger than the shortest sync delay.
    if (!home_ && now - best->gps_timestamp < cluster.options().sync_delay_min_s) home_ = best_server;

    const Point pos = projection_.to_plane(best->gps);
    const double dt = best->gps_timestamp - last_fix_time_;
    if (dt > 0.0) {
        Point v{(pos.x_mi - last_pos_.x_mi) / dt, (pos.y_mi - last_pos_.y_mi) / dt};
        const double speed = std::hypot(v.x_mi, v.y_mi);
        const double cap = config_.max_target_speed_mph / 3600.0;
        if (speed > cap) {
            v.x_mi *= cap / speed;
            v.y_mi *= cap / speed;
        }
        velocity_ = v;
    }
    last_pos_ = pos;
    last_fix_time_ = best->gps_timestamp;
}

TrackTrace Tracker::finish(std::size_t emitted_reports) const {
    TrackTrace t = trace_;
    t.emitted = emitted_reports;
    t.missed = emitted_reports > t.captured.size() ? emitted_reports - t.captured.size() : 0;
    t.followed_to_destination = !t.lost && !t.captured.empty();
    return t;
}

TrackingScenario highway_tracking_defaults() {
    TrackingScenario s;
    s.route = TrackRoute::Highway;
    s.route_length_mi = 36.6;
    s.target_reports = 20;
    s.user_density_per_mi2 = 2.8;
    return s;
}

TrackingScenario city_tracking_defaults() {
    TrackingScenario s;
    s.route = TrackRoute::City;
    s.route_length_mi = 12.8;
    s.target_reports = 18;
    s.user_density_per_mi2 = 56.6;
    return s;
}

namespace {

std::vector<Point> route_points(TrackRoute kind, double length_mi) {
    std::vector<Point> pts{Point{0.0, 0.0}};
    if (kind == TrackRoute::Highway) {
        // gently curving highway heading north-east
        constexpr int kLegs = 6;
        for (int i = 1; i <= kLegs; ++i) {
            const double heading = (25.0 + 8.0 * (i % 2)) * std::numbers::pi / 180.0;
            const auto& p = pts.back();
            const double d = length_mi / kLegs;
            pts.push_back(Point{p.x_mi + d * std::cos(heading), p.y_mi + d * std::sin(heading)});
        }
    } else {
        // Manhattan staircase: alternating east and north blocks
        constexpr int kLegs = 8;
        for (int i = 1; i <= kLegs; ++i) {
            const auto& p = pts.back();
            const double d = length_mi / kLegs;
            pts.push_back(i % 2 ? Point{p.x_mi + d, p.y_mi} : Point{p.x_mi, p.y_mi + d});
        }
    }
    return pts;
}

}  // namespace

TrackingResult run_tracking(const TrackingScenario& sc, std::uint64_t seed) {
    if (!(sc.route_length_mi > 0.0) || sc.target_reports == 0) {
        throw std::invalid_argument("tracking route needs positive length and at least one report");
    }
    if (!(sc.user_density_per_mi2 >= 0.0)) throw std::invalid_argument("user density must be >= 0");
    if (!(sc.warmup_s >= 2 * kForegroundReportInterval)) {
        throw std::invalid_argument("warmup must cover two report intervals");
    }
    sc.config.validate(kForegroundReportInterval);

    const auto pts = route_points(sc.route, sc.route_length_mi);
    RoadNetwork net;
    std::vector<std::string> route;
    for (std::size_t i = 0; i < pts.size(); ++i) net.add_junction("j" + std::to_string(i), pts[i]);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        route.push_back("r" + std::to_string(i));
        net.add_segment(route.back(), sc.route == TrackRoute::Highway ? RoadClass::Highway : RoadClass::Local,
                        "j" + std::to_string(i), "j" + std::to_string(i + 1));
    }
    double length = 0.0;
    for (const auto& seg : net.segments()) length += seg.length_mi;

    const double travel_s = static_cast<double>(sc.target_reports) * kForegroundReportInterval;
    const double mph = length / travel_s * 3600.0;

    WorldConfig wc;
    wc.seed = derive_seed(seed, 1);
    World world(std::move(net), wc);

    constexpr std::int64_t kTarget = 1'300'000'000;
    VehicleSpec target;
    target.id = "target";
    target.route = route;
    target.origin = "j0";
    target.speed_script = {SpeedStep{0.0, mph}};
    target.account_creation_time = kTarget;
    target.depart_s = sc.warmup_s;
    // App opened while still parked so the attacker can confirm the target
    // in person before the trip starts.
    target.sessions = {AppSession{sc.warmup_s - 2 * kForegroundReportInterval}};
    world.add_vehicle(target);

    // Ambient users cover every area the tracker could look at.
    double x0 = pts[0].x_mi, x1 = x0, y0 = pts[0].y_mi, y1 = y0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x_mi);
        x1 = std::max(x1, p.x_mi);
        y0 = std::min(y0, p.y_mi);
        y1 = std::max(y1, p.y_mi);
    }
    const double mx = sc.config.area_width_mi / 2 + 1.0;
    const double my = sc.config.area_height_mi / 2 + 1.0;
    x0 -= mx, x1 += mx, y0 -= my, y1 += my;
    Rng ambient_rng(derive_seed(seed, 2));
    const auto ambient = static_cast<std::size_t>(std::llround(sc.user_density_per_mi2 * (x1 - x0) * (y1 - y0)));
    std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1), phase(0.0, kForegroundReportInterval);
    for (std::size_t i = 0; i < ambient; ++i) {
        VehicleSpec v;
        v.id = "u" + std::to_string(i);
        v.account_creation_time = 1'400'000'000 + static_cast<std::int64_t>(i) * 37;
        const double x = ux(ambient_rng);
        const double y = uy(ambient_rng);
        v.parked = Point{x, y};
        v.depart_s = std::floor(phase(ambient_rng));
        world.add_vehicle(std::move(v));
    }

    ServerCluster cluster(sc.cluster, derive_seed(seed, 3));
    const auto& proj = world.network().projection();
    Rng bootstrap_rng(derive_seed(seed, 4));

    std::optional<Tracker> tracker;
    std::size_t emitted = 0;
    std::optional<GpsReport> latest;
    std::optional<double> arrived_at;
    const double bootstrap_at = sc.warmup_s;
    const auto ticks_per_round = static_cast<long>(std::llround(sc.config.round_interval_s));
    if (ticks_per_round < 1 || std::abs(sc.config.round_interval_s - static_cast<double>(ticks_per_round)) > 1e-9) {
        throw std::invalid_argument("round interval must be a whole number of seconds");
    }

    for (long tick = 1;; ++tick) {
        const auto reports = world.advance(1.0);
        const double now = world.now();
        for (const auto& r : reports) {
            if (r.vehicle_id != "target") continue;
            if (r.time_s > sc.warmup_s) ++emitted;
            latest = r;
        }
        cluster.ingest(world, reports);
        cluster.advance(now);

        if (!tracker && now >= bootstrap_at) {
            const auto id = bootstrap_target(cluster, proj, pts[0], 0.01, bootstrap_at - 1.0, now, now,
                                             bootstrap_rng);
            tracker.emplace(id, sc.config, proj, pts[0], now, derive_seed(seed, 5));
        } else if (tracker && tick % ticks_per_round == 0 && !tracker->lost()) {
            tracker->step(cluster, now);
            // Lost once an uncaught fix lies outside the area being searched.
            const auto& caps = tracker->trace().captured;
            const double caught_up_to = caps.empty() ? bootstrap_at : caps.back().gps_timestamp;
            if (latest && latest->time_s > caught_up_to &&
                !tracker->area_at(now).contains(proj.to_geo(latest->location.xy))) {
                tracker->mark_lost();
            }
        }

        if (!arrived_at && world.agent("target").arrived()) arrived_at = now;
        if (arrived_at && now >= *arrived_at + sc.grace_s) break;
    }

    TrackingResult res;
    res.trace = tracker->finish(emitted);
    res.route_length_mi = length;
    res.travel_time_min = (*arrived_at - sc.warmup_s) / 60.0;
    res.user_density_per_mi2 = sc.user_density_per_mi2;
    res.ambient_users = ambient;
    return res;
}

nlohmann::json track_report_json(const TrackingResult& r) {
    return nlohmann::json{
        {"route_length_mi", r.route_length_mi},
        {"travel_time_min", r.travel_time_min},
        {"gps_sent", r.trace.emitted},
        {"gps_captured", r.trace.captured.size()},
        {"followed", r.trace.followed_to_destination},
        {"avg_delay_s", r.trace.mean_delay_s()},
        {"user_density_per_mi2", r.user_density_per_mi2},
    };
}

}  // namespace ghostmap
