#include "ghostmap/traffic.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "ghostmap/format.hpp"

namespace ghostmap {

double aggregate_speed(const SpeedCohorts& c, TieBreak tie) {
    const auto total = c.n_slow + c.n_fast;
    if (total == 0) throw std::invalid_argument("aggregate_speed needs at least one sample");
    if (c.n_slow > 0 && !(c.s_slow >= 0.0)) throw std::invalid_argument("negative cohort speed");
    if (c.n_fast > 0 && !(c.s_fast >= 0.0)) throw std::invalid_argument("negative cohort speed");
    if (c.n_slow > 0 && c.n_fast > 0 && c.s_slow > c.s_fast) {
        throw std::invalid_argument("slow cohort faster than fast cohort");
    }
    const double ns = static_cast<double>(c.n_slow);
    const double nf = static_cast<double>(c.n_fast);
    const double n = ns + nf;
    // A cohort with no members contributes nothing, whatever its speed field says.
    const double ss = c.n_slow ? c.s_slow : 0.0;
    const double sf = c.n_fast ? c.s_fast : 0.0;
    const double s_avg = (ss * ns + sf * nf) / n;
    double s_max;
    if (c.n_slow != c.n_fast) {
        s_max = c.n_slow > c.n_fast ? ss : sf;
    } else {
        s_max = tie == TieBreak::Slower ? ss : sf;
    }
    return (s_max * std::max(ns, nf) + s_avg * std::min(ns, nf)) / n;
}

SpeedCohorts partition_cohorts(std::span<const double> samples, double threshold, CohortSplit mode) {
    if (samples.empty()) throw std::invalid_argument("partition_cohorts needs at least one sample");
    double cut = threshold;
    if (mode == CohortSplit::Midpoint) {
        const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        cut = (*lo + *hi) / 2.0;
    }
    SpeedCohorts c;
    double slow_sum = 0.0;
    double fast_sum = 0.0;
    for (double s : samples) {
        if (!(s >= 0.0)) throw std::invalid_argument("negative speed sample");
        if (s < cut) {
            ++c.n_slow;
            slow_sum += s;
        } else {
            ++c.n_fast;
            fast_sum += s;
        }
    }
    c.s_slow = c.n_slow ? slow_sum / static_cast<double>(c.n_slow) : 0.0;
    c.s_fast = c.n_fast ? fast_sum / static_cast<double>(c.n_fast) : 0.0;
    if (!c.n_slow) c.s_slow = c.s_fast;
    if (!c.n_fast) c.s_fast = c.s_slow;
    return c;
}

SegmentTrafficState update_hotspot(SegmentTrafficState state, std::optional<double> aggregate,
                                   RoadClass road_class, double now, const HotspotTiming& timing) {
    if (aggregate) {
        state.aggregate_speed = aggregate;
        state.last_sample_at = now;
        if (*aggregate < congestion_threshold(road_class)) {
            if (!state.hotspot) {
                state.hotspot = true;
                state.hotspot_since = now;
            }
            state.normal_since.reset();
        } else if (!state.normal_since) {
            state.normal_since = now;
        }
    }
    if (state.hotspot) {
        const bool dismissed = state.normal_since && now - *state.normal_since >= timing.dismissal_delay_s;
        const bool stale = state.last_sample_at && now - *state.last_sample_at > timing.persistence_ttl_s;
        if (dismissed || stale) {
            state.hotspot = false;
            state.hotspot_since.reset();
        }
    }
    return state;
}

double effective_speed(const RoadSegment& segment, const TrafficStates& traffic) {
    const auto it = traffic.find(segment.id);
    if (it != traffic.end() && it->second.hotspot && it->second.aggregate_speed) {
        return *it->second.aggregate_speed;
    }
    return segment.speed_limit_mph;
}

TrafficMonitor::TrafficMonitor(const RoadNetwork& network, TrafficOptions options)
    : network_(&network), options_(options) {
    if (!(options_.window_s > 0.0)) throw std::invalid_argument("aggregation window must be positive");
    for (const auto& seg : network.segments()) {
        SegmentTrafficState s;
        s.segment_id = seg.id;
        states_.emplace(seg.id, std::move(s));
    }
}

void TrafficMonitor::ingest(const std::vector<GpsReport>& reports) {
    for (const auto& r : reports) {
        if (!r.location.road) {
            latest_.erase(r.vehicle_id);
            continue;
        }
        latest_[r.vehicle_id] = Sample{r.location.road->segment, r.time_s, r.speed_mph};
    }
}

std::vector<double> TrafficMonitor::window_samples(const std::string& segment_id, double now) const {
    std::map<std::string, double> by_vehicle;
    for (const auto& [vehicle, s] : latest_) {
        if (s.segment == segment_id && s.time_s > now - options_.window_s && s.time_s <= now) {
            by_vehicle.emplace(vehicle, s.mph);
        }
    }
    std::vector<double> out;
    out.reserve(by_vehicle.size());
    for (const auto& [vehicle, mph] : by_vehicle) out.push_back(mph);
    return out;
}

void TrafficMonitor::update(double now) {
    std::unordered_map<std::string, std::vector<double>> fresh;
    for (const auto& [vehicle, s] : latest_) {
        if (s.time_s > now - options_.window_s && s.time_s <= now) fresh[s.segment];
    }
    for (auto& [segment, samples] : fresh) samples = window_samples(segment, now);

    for (auto& [id, state] : states_) {
        const auto& seg = network_->segment(id);
        std::optional<double> agg;
        if (const auto it = fresh.find(id); it != fresh.end()) {
            agg = aggregate_speed(
                partition_cohorts(it->second, congestion_threshold(seg.road_class), options_.split),
                options_.tie);
        }
        state = update_hotspot(std::move(state), agg, seg.road_class, now, options_.timing);
    }
}

const SegmentTrafficState& TrafficMonitor::state(const std::string& segment_id) const {
    const auto it = states_.find(segment_id);
    if (it == states_.end()) throw std::out_of_range("unknown segment '" + segment_id + "'");
    return it->second;
}

void TrafficMonitor::write_csv_header(std::ostream& out) {
    out << "time_s,segment_id,aggregate_mph,hotspot_flag\n";
}

void TrafficMonitor::write_csv(std::ostream& out, double now) const {
    for (const auto& seg : network_->segments()) {
        const auto& s = states_.at(seg.id);
        out << fixed(now, 1) << ',' << seg.id << ',';
        if (s.aggregate_speed) out << fixed(*s.aggregate_speed, 6);
        out << ',' << (s.hotspot ? 1 : 0) << '\n';
    }
}

namespace {

double leg_time_s(double length_mi, double mph) {
    return length_mi / mph * 3600.0;
}

}  // namespace

Route plan_route(const RoadNetwork& network, const std::string& origin, const std::string& dest,
                 const TrafficStates& traffic) {
    const auto& junctions = network.junctions();
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < junctions.size(); ++i) index.emplace(junctions[i].id, i);
    if (!index.contains(origin) || !index.contains(dest)) {
        throw std::invalid_argument("route endpoints must be known junctions");
    }

    struct Label {
        double time = std::numeric_limits<double>::infinity();
        std::vector<std::string> path;
        std::vector<std::string> via;
        bool done = false;
    };
    const auto better = [](double t, const std::vector<std::string>& p, const Label& l) {
        return t < l.time || (t == l.time && p < l.path);
    };

    std::vector<Label> labels(junctions.size());
    labels[index.at(origin)].time = 0.0;
    labels[index.at(origin)].via = {origin};

    // Networks are small; an O(V^2) scan keeps the (time, path) order exact.
    for (;;) {
        std::size_t u = junctions.size();
        for (std::size_t i = 0; i < junctions.size(); ++i) {
            if (labels[i].done || labels[i].time == std::numeric_limits<double>::infinity()) continue;
            if (u == junctions.size() || better(labels[i].time, labels[i].path, labels[u])) u = i;
        }
        if (u == junctions.size()) break;
        labels[u].done = true;
        if (junctions[u].id == dest) break;

        for (auto s : network.incident(junctions[u].id)) {
            const auto& seg = network.segment_at(s);
            const double mph = effective_speed(seg, traffic);
            if (!(mph > 0.0)) continue;
            const auto& next = network.other_end(seg, junctions[u].id);
            const auto v = index.at(next);
            if (labels[v].done) continue;
            const double t = labels[u].time + leg_time_s(seg.length_mi, mph);
            auto path = labels[u].path;
            path.push_back(seg.id);
            if (better(t, path, labels[v])) {
                labels[v].time = t;
                labels[v].path = std::move(path);
                labels[v].via = labels[u].via;
                labels[v].via.push_back(next);
            }
        }
    }
    const auto& target = labels[index.at(dest)];
    if (!target.done) throw std::runtime_error("no route from '" + origin + "' to '" + dest + "'");
    return Route{target.path, target.via, target.time};
}

double remaining_eta(const RoadNetwork& network, const Route& route, const RoutePosition& pos,
                     const TrafficStates& traffic) {
    if (route.junctions.size() != route.segments.size() + 1) throw std::invalid_argument("malformed route");
    if (pos.leg >= route.segments.size()) return 0.0;
    double eta = 0.0;
    for (std::size_t k = pos.leg; k < route.segments.size(); ++k) {
        const auto& seg = network.segment(route.segments[k]);
        const double left = k == pos.leg ? std::max(0.0, seg.length_mi - pos.along_mi) : seg.length_mi;
        eta += leg_time_s(left, effective_speed(seg, traffic));
    }
    return eta;
}

RerouteDecision maybe_reroute(const RoadNetwork& network, const Route& current, const RoutePosition& pos,
                              const TrafficStates& traffic) {
    RerouteDecision d;
    d.route = current;
    d.incumbent_eta_s = remaining_eta(network, current, pos, traffic);
    d.best_eta_s = d.incumbent_eta_s;
    if (pos.leg >= current.segments.size()) return d;

    const auto& seg = network.segment(current.segments[pos.leg]);
    const double finish_leg =
        leg_time_s(std::max(0.0, seg.length_mi - pos.along_mi), effective_speed(seg, traffic));
    const auto& next = current.junctions[pos.leg + 1];
    const auto& dest = current.junctions.back();
    if (next == dest) return d;

    const Route alt = plan_route(network, next, dest, traffic);
    const double alt_eta = finish_leg + alt.eta_s;
    // Sums taken in a different order can differ in the last bits; only a
    // real improvement counts.
    if (alt_eta < d.incumbent_eta_s - 1e-9 * std::max(1.0, d.incumbent_eta_s)) {
        Route r;
        r.segments.assign(current.segments.begin(), current.segments.begin() + pos.leg + 1);
        r.junctions.assign(current.junctions.begin(), current.junctions.begin() + pos.leg + 2);
        r.segments.insert(r.segments.end(), alt.segments.begin(), alt.segments.end());
        r.junctions.insert(r.junctions.end(), alt.junctions.begin() + 1, alt.junctions.end());
        r.eta_s = remaining_eta(network, r, RoutePosition{0, 0.0}, traffic);
        d.rerouted = true;
        d.route = std::move(r);
        d.best_eta_s = alt_eta;
    }
    return d;
}

}  // namespace ghostmap
