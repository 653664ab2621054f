#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghostmap/query.hpp"
#include "ghostmap/rng.hpp"
#include "ghostmap/road_network.hpp"

namespace ghostmap {

struct TrackConfig {
    /// East-west by north-south extent of each search area.
    double area_width_mi = 6.0;
    double area_height_mi = 8.0;
    std::size_t query_agents = 20;
    double max_target_speed_mph = 160.0;
    /// Every agent issues one query per round.
    double round_interval_s = 2.0;
    /// Added to the round time when stamping a capture.
    double query_latency_s = 1.0;
    /// Rounds in a row without a fresh fix before the attacker gives up.
    /// 270 rounds of 2 s: two report intervals plus the longest sync delay.
    std::size_t max_rounds_without_capture = 270;

    /// Throws unless the target, at max speed, cannot cross the long side of
    /// the area between two reports `report_interval_s` apart.
    void validate(double report_interval_s) const;
};

class BootstrapError : public std::runtime_error {
public:
    BootstrapError(const std::string& what, std::vector<std::int64_t> candidates)
        : std::runtime_error(what), candidates_(std::move(candidates)) {}
    [[nodiscard]] const std::vector<std::int64_t>& candidates() const { return candidates_; }

private:
    std::vector<std::int64_t> candidates_;
};

/// Finds the one visible user whose fix lies within `radius_mi` of `where`
/// and was taken in [t_from, t_to]. Throws BootstrapError when there is no
/// such user or more than one.
std::int64_t bootstrap_target(const ServerCluster& cluster, const LocalProjection& projection, Point where,
                              double radius_mi, double t_from, double t_to, double now, Rng& rng);

struct Capture {
    GeoPoint gps;
    double gps_timestamp = 0.0;
    double captured_at = 0.0;
    double delay_s = 0.0;
    std::size_t server = 0;
};

struct TrackTrace {
    std::int64_t target = 0;
    std::vector<Capture> captured;
    std::size_t emitted = 0;
    std::size_t missed = 0;
    bool lost = false;
    bool followed_to_destination = false;
    std::size_t rounds = 0;
    std::size_t queries = 0;

    [[nodiscard]] double mean_delay_s() const;
};

/// Follows one persistent id through the query API only.
class Tracker {
public:
    Tracker(std::int64_t target, TrackConfig config, const LocalProjection& projection, Point start,
            double start_time, std::uint64_t seed);

    /// One round: every agent queries once at time `now`.
    void step(const ServerCluster& cluster, double now);

    [[nodiscard]] SearchArea area_at(double now) const;
    [[nodiscard]] Point predicted_position(double now) const;
    [[nodiscard]] std::optional<std::size_t> home_server() const { return home_; }
    [[nodiscard]] bool lost() const { return trace_.lost; }
    /// For the harness, which knows when the target left the search area
    /// before its fix was caught.
    void mark_lost() { trace_.lost = true; }
    [[nodiscard]] const TrackTrace& trace() const { return trace_; }

    /// Closes the trace given how many reports the target actually sent.
    TrackTrace finish(std::size_t emitted_reports) const;

private:
    TrackConfig config_;
    LocalProjection projection_;
    std::vector<Rng> agent_rngs_;
    TrackTrace trace_;
    Point last_pos_;
    double last_fix_time_;
    std::optional<Point> velocity_;  // miles per second
    std::optional<std::size_t> home_;
    std::size_t dry_rounds_ = 0;
};

enum class TrackRoute { Highway, City };

struct TrackingScenario {
    TrackRoute route = TrackRoute::Highway;
    double route_length_mi = 36.6;
    std::size_t target_reports = 20;
    double user_density_per_mi2 = 2.8;
    double warmup_s = 300.0;
    /// Time allowed after arrival for the last fix to be picked up.
    double grace_s = 150.0;
    TrackConfig config;
    ClusterOptions cluster;
};

TrackingScenario highway_tracking_defaults();
TrackingScenario city_tracking_defaults();

struct TrackingResult {
    TrackTrace trace;
    double route_length_mi = 0.0;
    double travel_time_min = 0.0;
    double user_density_per_mi2 = 0.0;
    std::size_t ambient_users = 0;
};

TrackingResult run_tracking(const TrackingScenario& scenario, std::uint64_t seed);

/// {route_length_mi, travel_time_min, gps_sent, gps_captured, followed,
///  avg_delay_s, user_density_per_mi2}
nlohmann::json track_report_json(const TrackingResult& result);

}  // namespace ghostmap
