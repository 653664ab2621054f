#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ghostmap/road_network.hpp"
#include "ghostmap/world.hpp"

namespace ghostmap {

struct SpeedCohorts {
    std::size_t n_slow = 0;
    double s_slow = 0.0;
    std::size_t n_fast = 0;
    double s_fast = 0.0;
};

/// Which cohort counts as the majority when N_s == N_f.
enum class TieBreak { Slower, Faster };

/// Majority-weighted speed:
///   S = (S_max * max(N_s, N_f) + S_avg * min(N_s, N_f)) / (N_s + N_f)
/// with S_avg the plain mean and S_max the majority cohort's speed.
double aggregate_speed(const SpeedCohorts& c, TieBreak tie = TieBreak::Slower);

/// Threshold: slow means strictly below the class threshold.
/// Midpoint: slow means strictly below (min + max) / 2 of the samples.
enum class CohortSplit { Threshold, Midpoint };

/// An empty cohort takes the other cohort's speed so that s_slow <= s_fast
/// always holds.
SpeedCohorts partition_cohorts(std::span<const double> samples, double threshold,
                               CohortSplit mode = CohortSplit::Threshold);

struct HotspotTiming {
    double dismissal_delay_s = 180.0;
    double persistence_ttl_s = 1800.0;
};

struct SegmentTrafficState {
    std::string segment_id;
    std::optional<double> aggregate_speed;
    bool hotspot = false;
    std::optional<double> hotspot_since;
    /// Start of the current run of at-or-above-threshold aggregates.
    std::optional<double> normal_since;
    std::optional<double> last_sample_at;
};

/// `aggregate` is empty when the segment had no fresh samples this tick.
SegmentTrafficState update_hotspot(SegmentTrafficState state, std::optional<double> aggregate,
                                   RoadClass road_class, double now, const HotspotTiming& timing = {});

using TrafficStates = std::unordered_map<std::string, SegmentTrafficState>;

/// Speed used for travel-time estimates: the live aggregate on a hotspot,
/// the posted limit otherwise.
double effective_speed(const RoadSegment& segment, const TrafficStates& traffic);

struct TrafficOptions {
    double window_s = 120.0;
    CohortSplit split = CohortSplit::Threshold;
    TieBreak tie = TieBreak::Slower;
    HotspotTiming timing;
};

/// Server-side view of traffic fed from the GPS uplink. Keeps the latest
/// sample per vehicle; a vehicle counts toward the segment of its latest
/// on-road report while that report is inside the window.
class TrafficMonitor {
public:
    TrafficMonitor(const RoadNetwork& network, TrafficOptions options = {});

    void ingest(const std::vector<GpsReport>& reports);
    void update(double now);

    [[nodiscard]] const TrafficStates& states() const { return states_; }
    [[nodiscard]] const SegmentTrafficState& state(const std::string& segment_id) const;
    /// Speeds currently inside the window for a segment, in vehicle-id order.
    [[nodiscard]] std::vector<double> window_samples(const std::string& segment_id, double now) const;
    [[nodiscard]] const TrafficOptions& options() const { return options_; }

    static void write_csv_header(std::ostream& out);
    void write_csv(std::ostream& out, double now) const;

private:
    struct Sample {
        std::string segment;
        double time_s;
        double mph;
    };

    const RoadNetwork* network_;
    TrafficOptions options_;
    std::unordered_map<std::string, Sample> latest_;
    TrafficStates states_;
};

struct Route {
    std::vector<std::string> segments;
    /// junctions.size() == segments.size() + 1
    std::vector<std::string> junctions;
    double eta_s = 0.0;
};

/// Minimum travel time; equal times resolve to the lexicographically smaller
/// segment-id sequence. Throws std::runtime_error when dest is unreachable.
Route plan_route(const RoadNetwork& network, const std::string& origin, const std::string& dest,
                 const TrafficStates& traffic = {});

/// `along_mi` is measured in the direction of travel on leg `leg`.
struct RoutePosition {
    std::size_t leg = 0;
    double along_mi = 0.0;
};

double remaining_eta(const RoadNetwork& network, const Route& route, const RoutePosition& pos,
                     const TrafficStates& traffic);

struct RerouteDecision {
    bool rerouted = false;
    Route route;
    double incumbent_eta_s = 0.0;
    double best_eta_s = 0.0;
};

/// Finishes the current leg, then switches to the fastest path from the next
/// junction only if it is strictly faster than the rest of the current route.
RerouteDecision maybe_reroute(const RoadNetwork& network, const Route& current, const RoutePosition& pos,
                              const TrafficStates& traffic);

}  // namespace ghostmap
