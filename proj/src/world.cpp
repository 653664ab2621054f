#include "ghostmap/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ghostmap {

namespace {

constexpr double kTimeEps = 1e-9;

}  // namespace

std::string_view to_string(VehicleKind kind) {
    return kind == VehicleKind::Honest ? "honest" : "ghost";
}

std::string_view to_string(AppState state) {
    return state == AppState::Foreground ? "foreground" : "background";
}

std::string_view to_string(EventType type) {
    switch (type) {
        case EventType::Accident: return "accident";
        case EventType::Police: return "police";
        case EventType::Hazard: return "hazard";
        case EventType::RoadClosure: return "road_closure";
    }
    return "?";
}

VehicleKind parse_vehicle_kind(std::string_view text) {
    if (text == "honest") return VehicleKind::Honest;
    if (text == "ghost") return VehicleKind::GhostRider;
    throw std::invalid_argument("unknown vehicle kind '" + std::string(text) + "'");
}

AppState parse_app_state(std::string_view text) {
    if (text == "foreground") return AppState::Foreground;
    if (text == "background") return AppState::Background;
    throw std::invalid_argument("unknown app state '" + std::string(text) + "'");
}

EventType parse_event_type(std::string_view text) {
    if (text == "accident") return EventType::Accident;
    if (text == "police") return EventType::Police;
    if (text == "hazard") return EventType::Hazard;
    if (text == "road_closure") return EventType::RoadClosure;
    throw std::invalid_argument("unknown event type '" + std::string(text) + "'");
}

double report_interval(AppState state) {
    return state == AppState::Foreground ? kForegroundReportInterval : kBackgroundReportInterval;
}

Location Location::on_road(const RoadNetwork& network, SegmentPosition pos) {
    const Point xy = network.locate(pos);
    return Location{std::move(pos), xy};
}

Location VehicleAgent::location(const RoadNetwork& network) const {
    if (legs_.empty()) return Location::at(spec_.parked.value_or(Point{}));
    const std::size_t leg = std::min(leg_, legs_.size() - 1);
    const auto& seg = network.segment_at(legs_[leg]);
    const double along = leg_ < legs_.size() ? along_mi_ : seg.length_mi;
    const double offset = forward_[leg] ? along : seg.length_mi - along;
    return Location::on_road(network, SegmentPosition{seg.id, std::clamp(offset, 0.0, seg.length_mi)});
}

World::World(RoadNetwork network, WorldConfig config)
    : network_(std::move(network)),
      config_(config),
      rng_(derive_seed(config.seed, 0x776f726c64ULL)),
      now_(config.start_time_s) {
    if (!(config_.event_ttl_s > 0.0)) throw std::invalid_argument("event TTL must be positive");
    if (!(config_.merge_radius_m >= 0.0)) throw std::invalid_argument("merge radius must be >= 0");
}

const VehicleAgent& World::add_vehicle(VehicleSpec spec) {
    if (spec.id.empty()) throw std::invalid_argument("vehicle id must be non-empty");
    if (agent_index_.contains(spec.id)) throw std::invalid_argument("duplicate vehicle '" + spec.id + "'");
    if (spec.report_interval_s < 0.0 || spec.loop_period_s < 0.0) {
        throw std::invalid_argument("vehicle '" + spec.id + "': negative interval");
    }
    for (std::size_t i = 1; i < spec.speed_script.size(); ++i) {
        if (spec.speed_script[i].from_s <= spec.speed_script[i - 1].from_s) {
            throw std::invalid_argument("vehicle '" + spec.id + "': speed script not increasing");
        }
    }
    for (const auto& step : spec.speed_script) {
        if (!(step.mph >= 0.0)) throw std::invalid_argument("vehicle '" + spec.id + "': negative speed");
    }
    for (std::size_t i = 0; i < spec.sessions.size(); ++i) {
        const auto& s = spec.sessions[i];
        if (!(s.close_s > s.open_s) || (i > 0 && s.open_s < spec.sessions[i - 1].close_s)) {
            throw std::invalid_argument("vehicle '" + spec.id + "': sessions must be ordered and disjoint");
        }
    }
    if (!std::is_sorted(spec.forged.begin(), spec.forged.end(),
                        [](const ForgedReport& a, const ForgedReport& b) { return a.time_s < b.time_s; })) {
        throw std::invalid_argument("vehicle '" + spec.id + "': forged reports must be time-ordered");
    }
    for (std::size_t i = 1; i < spec.forged.size(); ++i) {
        if (spec.forged[i].time_s == spec.forged[i - 1].time_s) {
            throw std::invalid_argument("vehicle '" + spec.id + "': duplicate forged timestamp");
        }
    }

    VehicleAgent a;
    if (!spec.route.empty()) {
        std::string at = spec.origin;
        if (at.empty()) {
            const auto& first = network_.segment(spec.route[0]);
            at = first.from;
            if (spec.route.size() > 1) {
                const auto& second = network_.segment(spec.route[1]);
                if (first.from == second.from || first.from == second.to) at = first.to;
            }
        }
        for (const auto& id : spec.route) {
            const auto idx = network_.segment_index(id);
            const auto& seg = network_.segment_at(idx);
            if (seg.from != at && seg.to != at) {
                throw std::invalid_argument("vehicle '" + spec.id + "': route breaks at segment '" + id + "'");
            }
            a.legs_.push_back(idx);
            a.forward_.push_back(seg.from == at);
            at = network_.other_end(seg, at);
        }
    }
    a.visible_ = spec.visible;
    a.app_state_ = spec.app_state;
    a.spec_ = std::move(spec);

    agent_index_.emplace(a.spec_.id, agents_.size());
    agents_.push_back(std::move(a));
    update_session(agents_.back(), now_);
    return agents_.back();
}

std::string World::new_session_id() {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_()));
    return buf;
}

void World::update_session(VehicleAgent& a, double t) {
    const auto& spec = a.spec_;
    std::optional<std::size_t> idx;
    double open = spec.depart_s;
    if (spec.sessions.empty()) {
        if (t + kTimeEps >= spec.depart_s) idx = 0;
    } else {
        for (std::size_t i = 0; i < spec.sessions.size(); ++i) {
            const auto& s = spec.sessions[i];
            if (t + kTimeEps >= s.open_s && t + kTimeEps < s.close_s) {
                idx = i;
                open = s.open_s;
                break;
            }
        }
    }
    a.in_session_ = idx.has_value();
    if (idx && idx != a.session_index_) {
        if (a.session_index_) a.visible_ = true;  // a fresh login always starts visible
        a.session_index_ = idx;
        a.session_id_ = new_session_id();
        a.last_report_s_ = open;
    }
}

double World::scripted_speed(const VehicleAgent& a, double t) const {
    const auto& script = a.spec_.speed_script;
    double mph = script.front().mph;
    for (const auto& step : script) {
        if (step.from_s <= t + kTimeEps) mph = step.mph;
    }
    return mph;
}

void World::move(VehicleAgent& a, double t0, double dt) {
    a.last_speed_ = 0.0;
    if (a.legs_.empty() || a.arrived_) return;
    const auto& spec = a.spec_;
    double start = std::max(t0, spec.depart_s);
    const double t1 = t0 + dt;
    if (t1 <= spec.depart_s + kTimeEps) return;

    if (spec.kind == VehicleKind::GhostRider && spec.loop_period_s > 0.0) {
        const auto k = static_cast<std::size_t>(std::floor((t1 - spec.depart_s) / spec.loop_period_s + kTimeEps));
        if (k > a.loops_done_) {
            a.loops_done_ = k;
            a.leg_ = 0;
            a.along_mi_ = 0.0;
            // the new lap starts at the loop boundary, not at the tick start
            start = std::max(start, spec.depart_s + static_cast<double>(k) * spec.loop_period_s);
        }
    }
    if (a.leg_ >= a.legs_.size()) return;

    double remaining_s = t1 - start;
    const bool scripted = !spec.speed_script.empty();
    const double fixed = scripted ? scripted_speed(a, start) : 0.0;
    double travelled = 0.0;
    while (remaining_s > kTimeEps && a.leg_ < a.legs_.size()) {
        const auto& seg = network_.segment_at(a.legs_[a.leg_]);
        const double mph = scripted ? fixed : seg.speed_limit_mph;
        if (mph <= 0.0) break;
        const double left = seg.length_mi - a.along_mi_;
        const double need_s = left / mph * 3600.0;
        if (need_s <= remaining_s) {
            travelled += left;
            remaining_s -= need_s;
            ++a.leg_;
            a.along_mi_ = 0.0;
        } else {
            const double d = mph * remaining_s / 3600.0;
            travelled += d;
            a.along_mi_ += d;
            remaining_s = 0.0;
        }
    }
    a.odometer_mi_ += travelled;
    a.last_speed_ = t1 - start > kTimeEps ? travelled / (t1 - start) * 3600.0 : 0.0;
}

std::vector<GpsReport> World::advance(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance needs dt > 0");
    const double t0 = now_;
    const double t1 = now_ + dt;
    std::vector<GpsReport> out;

    for (auto& a : agents_) {
        update_session(a, t1);
        const auto& spec = a.spec_;

        if (spec.kind == VehicleKind::GhostRider && !spec.forged.empty()) {
            while (a.next_forged_ < spec.forged.size() && spec.forged[a.next_forged_].time_s <= t1 + kTimeEps) {
                const auto& f = spec.forged[a.next_forged_++];
                if (f.time_s <= t0 + kTimeEps) continue;
                out.push_back(GpsReport{f.time_s, spec.id, spec.kind, f.location, f.speed_mph});
                a.last_report_s_ = f.time_s;
            }
            continue;
        }
        if (a.arrived_) continue;

        move(a, t0, dt);
        const bool reached_end = !a.legs_.empty() && a.leg_ >= a.legs_.size();

        if (a.in_session_) {
            double interval = report_interval(a.app_state_);
            if (spec.kind == VehicleKind::GhostRider && spec.report_interval_s > 0.0) {
                interval = spec.report_interval_s;
            }
            if (t1 - a.last_report_s_ + kTimeEps >= interval) {
                out.push_back(GpsReport{t1, spec.id, spec.kind, a.location(network_), a.last_speed_});
                a.last_report_s_ = t1;
            }
        }
        // Looping ghosts wait at the end for their next lap.
        if (reached_end && !(spec.kind == VehicleKind::GhostRider && spec.loop_period_s > 0.0)) {
            a.arrived_ = true;
        }
    }
    now_ = t1;
    return out;
}

std::uint64_t World::report_event(std::string_view vehicle_id, EventType type, const Location& where) {
    const auto& a = agent(vehicle_id);
    if (!a.app_open()) {
        throw std::invalid_argument("vehicle '" + a.id() + "' has no open session");
    }
    const MapEvent* best = nullptr;
    double best_m = 0.0;
    for (const auto& e : events_) {
        if (!e.alive || e.type != type) continue;
        const double m = distance_mi(e.location.xy, where.xy) * kMetersPerMile;
        if (m <= config_.merge_radius_m && (!best || m < best_m)) {
            best = &e;
            best_m = m;
        }
    }
    if (best) {
        events_[best->id].last_refreshed = now_;
        return best->id;
    }
    MapEvent e;
    e.id = events_.size();
    e.type = type;
    e.location = where;
    e.reporter = a.id();
    e.created_at = now_;
    e.last_refreshed = now_;
    events_.push_back(std::move(e));
    return events_.back().id;
}

VoteOutcome World::vote_event(std::uint64_t event_id, Vote vote) {
    if (event_id >= events_.size()) throw std::out_of_range("unknown event " + std::to_string(event_id));
    auto& e = events_[event_id];
    if (!e.alive) return VoteOutcome{e, true};
    if (vote == Vote::Thanks) {
        ++e.thanks_count;
        e.not_there_streak = 0;
        e.last_refreshed = now_;
    } else {
        ++e.not_there_streak;
        if (e.not_there_streak >= 2) e.alive = false;
    }
    return VoteOutcome{e, false};
}

std::vector<std::uint64_t> World::expire_events(double now) {
    std::vector<std::uint64_t> expired;
    for (auto& e : events_) {
        if (e.alive && now - e.last_refreshed > config_.event_ttl_s) {
            e.alive = false;
            expired.push_back(e.id);
        }
    }
    return expired;
}

void World::set_app_state(std::string_view vehicle_id, AppState state) {
    mutable_agent(vehicle_id).app_state_ = state;
}

void World::set_visible(std::string_view vehicle_id, bool visible) {
    mutable_agent(vehicle_id).visible_ = visible;
}

VehicleAgent& World::mutable_agent(std::string_view id) {
    const auto it = agent_index_.find(std::string(id));
    if (it == agent_index_.end()) throw std::invalid_argument("unknown vehicle '" + std::string(id) + "'");
    return agents_[it->second];
}

const VehicleAgent& World::agent(std::string_view id) const {
    const auto it = agent_index_.find(std::string(id));
    if (it == agent_index_.end()) throw std::invalid_argument("unknown vehicle '" + std::string(id) + "'");
    return agents_[it->second];
}

bool World::has_agent(std::string_view id) const {
    return agent_index_.contains(std::string(id));
}

const MapEvent& World::event(std::uint64_t id) const {
    if (id >= events_.size()) throw std::out_of_range("unknown event " + std::to_string(id));
    return events_[id];
}

std::vector<const MapEvent*> World::alive_events() const {
    std::vector<const MapEvent*> out;
    for (const auto& e : events_) {
        if (e.alive) out.push_back(&e);
    }
    return out;
}

}  // namespace ghostmap
