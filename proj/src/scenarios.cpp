#include "ghostmap/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "ghostmap/world.hpp"

namespace ghostmap {

AggregationPoint measure_aggregate(RoadClass road_class, std::size_t n_slow, double s_slow, std::size_t n_fast,
                                   double s_fast, const TrafficOptions& options, std::uint64_t seed) {
    if (n_slow + n_fast == 0) throw std::invalid_argument("measure_aggregate needs at least one vehicle");
    RoadNetwork net;
    net.add_junction("a", Point{0.0, 0.0});
    net.add_junction("b", Point{10.0, 0.0});
    net.add_segment("s", road_class, "a", "b");
    WorldConfig wc;
    wc.seed = seed;
    World world(std::move(net), wc);

    const auto add = [&](const std::string& id, VehicleKind kind, double mph) {
        VehicleSpec v;
        v.id = id;
        v.kind = kind;
        v.route = {"s"};
        v.speed_script = {SpeedStep{0.0, mph}};
        v.account_creation_time = static_cast<std::int64_t>(world.agents().size()) + 1;
        world.add_vehicle(std::move(v));
    };
    for (std::size_t i = 0; i < n_slow; ++i) add("ghost" + std::to_string(i), VehicleKind::GhostRider, s_slow);
    for (std::size_t i = 0; i < n_fast; ++i) add("driver" + std::to_string(i), VehicleKind::Honest, s_fast);

    TrafficMonitor monitor(world.network(), options);
    const auto ticks = static_cast<int>(std::lround(kForegroundReportInterval));
    for (int t = 0; t < ticks; ++t) monitor.ingest(world.advance(1.0));
    monitor.update(world.now());

    const auto& state = monitor.state("s");
    if (!state.aggregate_speed) throw std::logic_error("no samples reached the traffic monitor");
    return AggregationPoint{road_class, n_slow, n_fast, s_slow, s_fast, *state.aggregate_speed, state.hotspot};
}

std::optional<double> JamResult::clear_delay_s() const {
    if (!first_normal_s || !cleared_at_s) return std::nullopt;
    return *cleared_at_s - *first_normal_s;
}

JamResult run_persistent_jam(const JamOptions& o, bool remove_slow, std::uint64_t seed) {
    if (o.slow_cars == 0) throw std::invalid_argument("persistent jam needs slow cars");
    if (!(o.loop_period_s > 0.0) || !(o.fast_every_s > 0.0) || !(o.duration_s > 0.0)) {
        throw std::invalid_argument("persistent jam periods must be positive");
    }
    RoadNetwork net;
    net.add_junction("west", Point{0.0, 0.0});
    net.add_junction("east", Point{o.segment_length_mi, 0.0});
    net.add_segment("hwy", RoadClass::Highway, "west", "east");
    WorldConfig wc;
    wc.seed = derive_seed(seed, 1);
    World world(std::move(net), wc);

    Rng rng(derive_seed(seed, 2));
    std::uniform_int_distribution<int> jitter(0, 29);
    std::int64_t account = 1;
    for (std::size_t i = 0; i < o.slow_cars; ++i) {
        VehicleSpec v;
        v.id = "ghost" + std::to_string(i);
        v.kind = VehicleKind::GhostRider;
        v.route = {"hwy"};
        v.speed_script = {SpeedStep{0.0, o.slow_mph}};
        v.loop_period_s = o.loop_period_s;
        v.depart_s = std::floor(static_cast<double>(i) * o.loop_period_s / static_cast<double>(o.slow_cars)) +
                     jitter(rng);
        if (remove_slow) v.sessions = {AppSession{v.depart_s, o.remove_slow_at_s}};
        v.account_creation_time = account++;
        world.add_vehicle(std::move(v));
    }

    const double end = remove_slow ? std::max(o.duration_s, o.remove_slow_at_s + o.traffic.timing.persistence_ttl_s +
                                                                 2 * o.fast_every_s)
                                   : o.duration_s;
    const double phase = std::floor(std::uniform_real_distribution<double>(0.0, o.fast_every_s)(rng));
    std::size_t wave = 0;
    for (double t = phase; t < end; t += o.fast_every_s, ++wave) {
        for (std::size_t c = 0; c < o.fast_cars; ++c) {
            VehicleSpec v;
            v.id = "driver" + std::to_string(wave) + "_" + std::to_string(c);
            v.route = {"hwy"};
            v.speed_script = {SpeedStep{0.0, o.fast_mph}};
            v.depart_s = t;
            v.account_creation_time = account++;
            world.add_vehicle(std::move(v));
        }
    }

    TrafficMonitor monitor(world.network(), o.traffic);
    JamResult res;
    std::size_t on_after_onset = 0;
    std::size_t ticks_after_onset = 0;
    while (world.now() + 0.5 < end) {
        monitor.ingest(world.advance(1.0));
        const double now = world.now();
        monitor.update(now);
        const auto& s = monitor.state("hwy");
        res.timeline.push_back(JamSample{now, s.aggregate_speed, s.hotspot});
        if (!res.onset_s && s.hotspot) res.onset_s = now;
        const bool counting = res.onset_s && (!remove_slow || now <= o.remove_slow_at_s);
        if (counting) {
            ++ticks_after_onset;
            if (s.hotspot) ++on_after_onset;
        }
        if (remove_slow && now > o.remove_slow_at_s) {
            if (!res.first_normal_s && s.normal_since) res.first_normal_s = s.normal_since;
            if (!res.cleared_at_s && !s.hotspot) {
                res.cleared_at_s = now;
                if (now >= o.duration_s) break;
            }
        }
    }
    if (ticks_after_onset) {
        res.on_fraction_after_onset = static_cast<double>(on_after_onset) / static_cast<double>(ticks_after_onset);
        res.continuous = on_after_onset == ticks_after_onset;
    }
    return res;
}

DownsampleResult run_downsample(const DownsampleOptions& o, std::uint64_t seed) {
    if (o.users == 0) throw std::invalid_argument("downsampling run needs users");
    RoadNetwork net;
    World world(std::move(net), WorldConfig{1800.0, 50.0, 0.0, derive_seed(seed, 1)});
    Rng place(derive_seed(seed, 2));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> phase(0, static_cast<int>(kForegroundReportInterval) - 1);
    for (std::size_t i = 0; i < o.users; ++i) {
        VehicleSpec v;
        v.id = "user" + std::to_string(i);
        const double x = u(place);
        const double y = u(place);
        v.parked = Point{x, y};
        v.depart_s = phase(place);
        v.account_creation_time = 1'500'000'000 + static_cast<std::int64_t>(i);
        world.add_vehicle(std::move(v));
    }
    ServerCluster cluster(o.cluster, derive_seed(seed, 3));
    while (world.now() + 0.5 < o.warmup_s) {
        const auto reports = world.advance(1.0);
        cluster.ingest(world, reports);
        cluster.advance(world.now());
    }

    const auto area = SearchArea::centered(world.network().projection(), Point{0.5, 0.5}, 2.0, 2.0);
    Rng qrng(derive_seed(seed, 4));
    DownsampleResult res;
    res.appearances.assign(o.users, 0);
    std::unordered_set<std::int64_t> seen;
    for (std::size_t q = 0; q < o.queries; ++q) {
        for (const auto& r : cluster.query(0, area, world.now(), qrng)) {
            ++res.appearances[static_cast<std::size_t>(r.account_creation_time - 1'500'000'000)];
            seen.insert(r.account_creation_time);
        }
        res.unique_curve.push_back(seen.size());
    }
    res.fit = appearance_distribution_check(res.appearances, o.users, o.queries, o.cluster.max_results, o.alpha);
    return res;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("line fit needs distinct x values");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

bool CostLevel::reached_by_all() const {
    return std::all_of(required.begin(), required.end(), [](const auto& r) { return r.has_value(); });
}

std::vector<CostLevel> cost_levels(const std::vector<std::vector<double>>& mean_auc,
                                   const std::vector<double>& edge_grid, const std::vector<double>& levels) {
    std::vector<CostLevel> out;
    for (double level : levels) {
        CostLevel c;
        c.level = level;
        for (const auto& row : mean_auc) {
            if (row.size() != edge_grid.size()) throw std::invalid_argument("AUC row does not match edge grid");
            std::optional<double> need;
            for (std::size_t e = 0; e < row.size(); ++e) {
                if (row[e] < level) {
                    need = edge_grid[e];
                    break;
                }
            }
            c.required.push_back(need);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<double> geometric_grid(double start, double factor, double max) {
    if (!(start >= 1.0) || !(factor > 1.0) || max < start) throw std::invalid_argument("bad geometric grid");
    std::vector<double> grid;
    for (double v = start; std::round(v) <= max; v *= factor) {
        const double r = std::round(v);
        if (grid.empty() || r > grid.back()) grid.push_back(r);
    }
    return grid;
}

}  // namespace ghostmap
