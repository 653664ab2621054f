#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ghostmap/rng.hpp"
#include "ghostmap/road_network.hpp"

namespace ghostmap {

enum class VehicleKind { Honest, GhostRider };
enum class AppState { Foreground, Background };
enum class EventType { Accident, Police, Hazard, RoadClosure };
enum class Vote { Thanks, NotThere };

std::string_view to_string(VehicleKind kind);
std::string_view to_string(AppState state);
std::string_view to_string(EventType type);
VehicleKind parse_vehicle_kind(std::string_view text);
AppState parse_app_state(std::string_view text);
EventType parse_event_type(std::string_view text);

inline constexpr double kForegroundReportInterval = 120.0;
inline constexpr double kBackgroundReportInterval = 300.0;

double report_interval(AppState state);

/// Where a device is (or claims to be). Road positions carry the segment
/// offset; off-road positions (parked users, forged fixes) carry only xy.
struct Location {
    std::optional<SegmentPosition> road;
    Point xy;

    static Location on_road(const RoadNetwork& network, SegmentPosition pos);
    static Location at(Point xy) { return Location{std::nullopt, xy}; }
};

struct SpeedStep {
    double from_s = 0.0;
    double mph = 0.0;
};

/// App open from open_s (inclusive) to close_s (exclusive).
struct AppSession {
    double open_s = 0.0;
    double close_s = std::numeric_limits<double>::infinity();
};

/// A GPS fix a ghost rider sends verbatim at `time_s`.
struct ForgedReport {
    double time_s = 0.0;
    Location location;
    double speed_mph = 0.0;
};

struct VehicleSpec {
    std::string id;
    VehicleKind kind = VehicleKind::Honest;
    std::vector<std::string> route;
    /// Junction the route starts from; inferred from the first two segments
    /// when empty.
    std::string origin;
    /// Piecewise-constant speed over absolute world time. Empty means "drive
    /// at the speed limit".
    std::vector<SpeedStep> speed_script;
    AppState app_state = AppState::Foreground;
    bool visible = true;
    std::int64_t account_creation_time = 0;
    std::string nickname;
    double depart_s = 0.0;
    /// Empty means one session starting at depart_s that never closes.
    std::vector<AppSession> sessions;
    /// Position of a vehicle with no route.
    std::optional<Point> parked;

    // Ghost-rider scripting. Ignored for honest vehicles.
    /// > 0: teleport back to the start of the route every loop_period_s.
    double loop_period_s = 0.0;
    /// > 0: overrides the app-state report cadence.
    double report_interval_s = 0.0;
    /// Non-empty: these reports replace cadence-driven ones.
    std::vector<ForgedReport> forged;
};

struct GpsReport {
    double time_s = 0.0;
    std::string vehicle_id;
    VehicleKind kind = VehicleKind::Honest;
    Location location;
    double speed_mph = 0.0;
};

class World;

class VehicleAgent {
public:
    [[nodiscard]] const VehicleSpec& spec() const { return spec_; }
    [[nodiscard]] const std::string& id() const { return spec_.id; }
    [[nodiscard]] VehicleKind kind() const { return spec_.kind; }
    [[nodiscard]] AppState app_state() const { return app_state_; }
    [[nodiscard]] bool visible() const { return visible_; }
    [[nodiscard]] const std::string& session_id() const { return session_id_; }
    [[nodiscard]] std::int64_t account_creation_time() const { return spec_.account_creation_time; }
    [[nodiscard]] bool arrived() const { return arrived_; }
    [[nodiscard]] bool app_open() const { return in_session_; }
    [[nodiscard]] double odometer_mi() const { return odometer_mi_; }
    [[nodiscard]] double last_speed_mph() const { return last_speed_; }
    [[nodiscard]] Location location(const RoadNetwork& network) const;

private:
    friend class World;

    VehicleSpec spec_;
    std::vector<std::size_t> legs_;
    std::vector<bool> forward_;
    std::size_t leg_ = 0;
    double along_mi_ = 0.0;
    double odometer_mi_ = 0.0;
    double last_speed_ = 0.0;
    double last_report_s_ = 0.0;
    std::size_t loops_done_ = 0;
    std::size_t next_forged_ = 0;
    std::optional<std::size_t> session_index_;
    bool in_session_ = false;
    bool arrived_ = false;
    bool visible_ = true;
    AppState app_state_ = AppState::Foreground;
    std::string session_id_;
};

struct MapEvent {
    std::uint64_t id = 0;
    EventType type = EventType::Accident;
    Location location;
    std::string reporter;
    double created_at = 0.0;
    double last_refreshed = 0.0;
    std::uint32_t thanks_count = 0;
    std::uint32_t not_there_streak = 0;
    bool alive = true;
};

struct VoteOutcome {
    MapEvent state;
    /// The event was already dead; nothing changed.
    bool ignored = false;
};

struct WorldConfig {
    double event_ttl_s = 1800.0;
    double merge_radius_m = 50.0;
    double start_time_s = 0.0;
    std::uint64_t seed = 1;
};

/// Discrete-time world: vehicles, their GPS uplink and the crowdsourced
/// event board. Deterministic for a given (network, roster, config, tick
/// schedule).
class World {
public:
    explicit World(RoadNetwork network, WorldConfig config = {});

    const VehicleAgent& add_vehicle(VehicleSpec spec);

    /// Moves the clock forward by dt seconds and returns the GPS reports
    /// emitted during the tick, ordered by vehicle insertion order.
    std::vector<GpsReport> advance(double dt);

    std::uint64_t report_event(std::string_view vehicle_id, EventType type, const Location& where);
    VoteOutcome vote_event(std::uint64_t event_id, Vote vote);
    /// Kills events whose last refresh is more than the TTL before `now`.
    std::vector<std::uint64_t> expire_events(double now);

    void set_app_state(std::string_view vehicle_id, AppState state);
    void set_visible(std::string_view vehicle_id, bool visible);

    [[nodiscard]] double now() const { return now_; }
    [[nodiscard]] const WorldConfig& config() const { return config_; }
    [[nodiscard]] const RoadNetwork& network() const { return network_; }
    [[nodiscard]] const std::vector<VehicleAgent>& agents() const { return agents_; }
    [[nodiscard]] const VehicleAgent& agent(std::string_view id) const;
    [[nodiscard]] bool has_agent(std::string_view id) const;
    [[nodiscard]] const std::vector<MapEvent>& events() const { return events_; }
    [[nodiscard]] const MapEvent& event(std::uint64_t id) const;
    [[nodiscard]] std::vector<const MapEvent*> alive_events() const;

private:
    VehicleAgent& mutable_agent(std::string_view id);
    void update_session(VehicleAgent& a, double t);
    void move(VehicleAgent& a, double t0, double dt);
    double scripted_speed(const VehicleAgent& a, double t) const;
    std::string new_session_id();

    RoadNetwork network_;
    WorldConfig config_;
    Rng rng_;
    double now_;
    std::vector<VehicleAgent> agents_;
    std::unordered_map<std::string, std::size_t> agent_index_;
    std::vector<MapEvent> events_;
};

}  // namespace ghostmap
