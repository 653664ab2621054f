#include "ghostmap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ghostmap/detection.hpp"
#include "ghostmap/format.hpp"
#include "ghostmap/scenarios.hpp"
#include "ghostmap/tracker.hpp"
#include "ghostmap/world_io.hpp"

namespace ghostmap {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
    static const std::set<std::string> known{"scenario", "seed", "trials", "output_dir", "params"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
    }
    ExperimentConfig c;
    try {
        c.scenario = doc.at("scenario").get<std::string>();
        c.seed = doc.value("seed", c.seed);
        c.trials = doc.value("trials", c.trials);
        c.output_dir = doc.value("output_dir", c.output_dir);
        c.params = doc.value("params", json::object());
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
    }
    if (c.trials == 0) throw std::invalid_argument("trials must be >= 1");
    if (!c.params.is_object()) throw std::invalid_argument("params must be a JSON object");
    return c;
}

json to_json(const ExperimentConfig& c) {
    return json{{"scenario", c.scenario},
                {"seed", c.seed},
                {"trials", c.trials},
                {"output_dir", c.output_dir},
                {"params", c.params}};
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

bool RunOutcome::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || !c.required; });
}

std::size_t Summary::violations() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& sc) {
        return sc.second.required && !sc.second.pass;
    }));
}

namespace {

/// Parameter reader that remembers the effective value of every key it was
/// asked for and rejects keys nobody asked for.
class Params {
public:
    Params(const json& given, std::string scenario) : given_(given), scenario_(std::move(scenario)) {}

    template <typename T>
    T get(const std::string& key, T fallback) {
        T value = fallback;
        if (given_.contains(key)) {
            try {
                value = given_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw std::invalid_argument("parameter '" + key + "': " + e.what());
            }
        }
        effective_[key] = value;
        return value;
    }

    json get_json(const std::string& key, json fallback) {
        json value = given_.contains(key) ? given_.at(key) : std::move(fallback);
        effective_[key] = value;
        return value;
    }

    void finish() const {
        for (const auto& [key, value] : given_.items()) {
            if (!effective_.contains(key)) {
                throw std::invalid_argument("unknown parameter '" + key + "' for scenario " + scenario_);
            }
        }
    }

    [[nodiscard]] const json& effective() const { return effective_; }

private:
    const json& given_;
    std::string scenario_;
    json effective_ = json::object();
};

struct Run {
    const ExperimentConfig& cfg;
    fs::path dir;
    Params params;
    std::vector<json> trials;
    std::vector<Check> checks;
    std::vector<std::string> files;

    [[nodiscard]] std::uint64_t trial_seed(std::size_t i) const { return derive_seed(cfg.seed, i); }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        files.push_back(name);
        return out;
    }

    void check(std::string name, bool pass, std::string detail, bool required = true) {
        checks.push_back(Check{std::move(name), pass, std::move(detail), required});
    }
};

std::string trial_name(std::size_t i, const std::string& suffix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial_%04zu", i);
    return buf + suffix;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

CohortSplit parse_split(const std::string& s) {
    if (s == "threshold") return CohortSplit::Threshold;
    if (s == "midpoint") return CohortSplit::Midpoint;
    throw std::invalid_argument("split must be 'threshold' or 'midpoint'");
}

TieBreak parse_tie(const std::string& s) {
    if (s == "slower") return TieBreak::Slower;
    if (s == "faster") return TieBreak::Faster;
    throw std::invalid_argument("tie must be 'slower' or 'faster'");
}

TrafficOptions traffic_params(Params& p, const std::string& default_split) {
    TrafficOptions t;
    t.split = parse_split(p.get<std::string>("split", default_split));
    t.tie = parse_tie(p.get<std::string>("tie", "slower"));
    t.window_s = p.get("window_s", t.window_s);
    t.timing.dismissal_delay_s = p.get("dismissal_delay_s", t.timing.dismissal_delay_s);
    t.timing.persistence_ttl_s = p.get("persistence_ttl_s", t.timing.persistence_ttl_s);
    return t;
}

void write_segment_rows(std::ostream& out, const std::string& segment, const std::vector<JamSample>& timeline) {
    out << "time_s,segment_id,aggregate_mph,hotspot_flag\n";
    for (const auto& s : timeline) {
        out << fixed(s.time_s, 1) << ',' << segment << ',';
        if (s.aggregate_mph) out << fixed(*s.aggregate_mph, 6);
        out << ',' << (s.hotspot ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------

void aggregation_sweep(Run& run) {
    const auto traffic = traffic_params(run.params, "midpoint");
    const double tol = run.params.get("tolerance", 1e-9);
    struct Tuple {
        RoadClass c;
        double slow, fast;
    };
    const std::vector<Tuple> tuples{{RoadClass::Highway, 10, 30}, {RoadClass::Local, 5, 15},
                                    {RoadClass::Residential, 5, 10}};
    // N_s:N_f from 1:5 up to 5:1
    const std::vector<std::pair<int, int>> ratios{{1, 5}, {1, 4}, {1, 3}, {1, 2}, {1, 1},
                                                  {2, 1}, {3, 1}, {4, 1}, {5, 1}};
    run.params.finish();

    double worst = 0.0;
    bool monotone = true;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        std::ofstream csv;
        if (t == 0) {
            csv = run.open("aggregation_sweep.csv");
            csv << "road_class,n_slow,n_fast,s_slow,s_fast,aggregate_mph,closed_form_mph,hotspot\n";
        }
        double trial_worst = 0.0;
        std::size_t hotspots = 0;
        for (const auto& tp : tuples) {
            double prev = std::numeric_limits<double>::infinity();
            for (const auto& [ns, nf] : ratios) {
                const auto p = measure_aggregate(tp.c, ns, tp.slow, nf, tp.fast, traffic, run.trial_seed(t));
                const double n = ns + nf;
                const double avg = (tp.slow * ns + tp.fast * nf) / n;
                const double smax =
                    ns > nf ? tp.slow : nf > ns ? tp.fast : (traffic.tie == TieBreak::Slower ? tp.slow : tp.fast);
                const double closed = (smax * std::max(ns, nf) + avg * std::min(ns, nf)) / n;
                trial_worst = std::max(trial_worst, std::abs(p.displayed_mph - closed));
                if (p.displayed_mph > prev + tol) monotone = false;
                prev = p.displayed_mph;
                hotspots += p.hotspot;
                if (t == 0) {
                    csv << to_string(tp.c) << ',' << ns << ',' << nf << ',' << fixed(tp.slow, 3) << ','
                        << fixed(tp.fast, 3) << ',' << fixed(p.displayed_mph, 9) << ',' << fixed(closed, 9) << ','
                        << (p.hotspot ? 1 : 0) << '\n';
                }
            }
        }
        worst = std::max(worst, trial_worst);
        run.trials.push_back(json{{"metrics", {{"max_abs_error", trial_worst},
                                               {"points", tuples.size() * ratios.size()},
                                               {"hotspots", hotspots}}}});
    }
    run.check("displayed aggregate matches closed form", worst <= tol,
              "max |error| " + num(worst) + " <= " + num(tol));
    run.check("aggregate nonincreasing as N_s:N_f grows", monotone, "all three road classes");
}

void persistent_jam(Run& run) {
    JamOptions o;
    o.segment_length_mi = run.params.get("segment_length_mi", o.segment_length_mi);
    o.slow_cars = run.params.get("slow_cars", o.slow_cars);
    o.slow_mph = run.params.get("slow_mph", o.slow_mph);
    o.loop_period_s = run.params.get("loop_period_s", o.loop_period_s);
    o.fast_cars = run.params.get("fast_cars", o.fast_cars);
    o.fast_mph = run.params.get("fast_mph", o.fast_mph);
    o.fast_every_s = run.params.get("fast_every_s", o.fast_every_s);
    o.duration_s = run.params.get("duration_s", o.duration_s);
    o.remove_slow_at_s = run.params.get("remove_slow_at_s", o.remove_slow_at_s);
    o.traffic = traffic_params(run.params, "threshold");
    run.params.finish();

    std::size_t continuous = 0;
    std::size_t clear_ok = 0;
    std::size_t in_range = 0;
    const double d = o.traffic.timing.dismissal_delay_s;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto kept = run_persistent_jam(o, false, run.trial_seed(t));
        const auto removed = run_persistent_jam(o, true, run.trial_seed(t));
        {
            auto out = run.open(trial_name(t, "_segment_state.csv"));
            write_segment_rows(out, "hwy", kept.timeline);
        }
        {
            auto out = run.open(trial_name(t, "_segment_state_removed.csv"));
            write_segment_rows(out, "hwy", removed.timeline);
        }
        const auto delay = removed.clear_delay_s();
        continuous += kept.continuous;
        clear_ok += delay && std::abs(*delay - d) <= 1.0;
        in_range += delay && *delay >= 120.0 - 1.0 && *delay <= 300.0 + 1.0;
        run.trials.push_back(json{{"metrics",
                                   {{"onset_s", kept.onset_s.value_or(-1.0)},
                                    {"continuous", kept.continuous ? 1 : 0},
                                    {"on_fraction_after_onset", kept.on_fraction_after_onset},
                                    {"clear_delay_s", delay.value_or(-1.0)},
                                    {"cleared_after_removal_s",
                                     removed.cleared_at_s ? *removed.cleared_at_s - o.remove_slow_at_s : -1.0}}}});
    }
    const auto n = run.cfg.trials;
    run.check("hotspot continuously on after onset", continuous == n,
              std::to_string(continuous) + "/" + std::to_string(n) + " trials");
    run.check("hotspot clears within dismissal delay +/- 1 tick", clear_ok == n,
              std::to_string(clear_ok) + "/" + std::to_string(n) + " trials at " + num(d) + " s");
    run.check("clear delay inside the 2-5 min window", in_range == n,
              std::to_string(in_range) + "/" + std::to_string(n) + " trials");
}

void downsample_converge(Run& run) {
    DownsampleOptions o;
    o.users = run.params.get("users", o.users);
    o.queries = run.params.get("queries", o.queries);
    o.warmup_s = run.params.get("warmup_s", o.warmup_s);
    o.alpha = run.params.get("alpha", o.alpha);
    o.cluster.server_count = run.params.get("servers", o.cluster.server_count);
    o.cluster.max_results = run.params.get("cap", o.cluster.max_results);
    o.cluster.sync_delay_min_s = run.params.get("sync_delay_min_s", o.cluster.sync_delay_min_s);
    o.cluster.sync_delay_max_s = run.params.get("sync_delay_max_s", o.cluster.sync_delay_max_s);
    const double min_pass = run.params.get("min_pass_rate", 0.95);
    const double curve_tol = run.params.get("curve_tolerance", 0.03);
    run.params.finish();

    std::vector<double> mean_curve(o.queries, 0.0);
    std::size_t passes = 0;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto r = run_downsample(o, run.trial_seed(t));
        passes += r.fit.pass;
        for (std::size_t k = 0; k < o.queries; ++k) {
            mean_curve[k] += static_cast<double>(r.unique_curve[k]) / static_cast<double>(run.cfg.trials);
        }
        auto out = run.open(trial_name(t, "_appearances.csv"));
        out << "user,appearances\n";
        for (std::size_t u = 0; u < r.appearances.size(); ++u) out << u << ',' << r.appearances[u] << '\n';
        double mean_app = 0.0;
        for (auto c : r.appearances) mean_app += static_cast<double>(c) / static_cast<double>(o.users);
        run.trials.push_back(json{{"metrics",
                                   {{"chi2", r.fit.statistic},
                                    {"dof", r.fit.dof},
                                    {"p_value", r.fit.p_value},
                                    {"fit_pass", r.fit.pass ? 1 : 0},
                                    {"mean_appearance", mean_app},
                                    {"unique_final", r.unique_curve.empty() ? 0 : r.unique_curve.back()}}}});
    }
    double worst = 0.0;
    {
        auto out = run.open("unique_curve.csv");
        out << "queries,mean_unique,expected_unique,relative_error\n";
        for (std::size_t k = 0; k < o.queries; ++k) {
            const double e = expected_unique_users(o.users, k + 1, o.cluster.max_results);
            const double rel = std::abs(mean_curve[k] - e) / e;
            worst = std::max(worst, rel);
            out << k + 1 << ',' << fixed(mean_curve[k], 4) << ',' << fixed(e, 4) << ',' << fixed(rel, 6) << '\n';
        }
    }
    const double rate = static_cast<double>(passes) / static_cast<double>(run.cfg.trials);
    run.check("appearance counts fit Binomial", rate >= min_pass,
              "pass rate " + num(rate) + " >= " + num(min_pass) + " over " + std::to_string(run.cfg.trials) +
                  " trials");
    run.check("unique-user curve tracks closed form", worst <= curve_tol,
              "max relative error " + num(worst) + " <= " + num(curve_tol));
}

void tracking(Run& run, TrackingScenario sc, std::size_t min_captured, double max_delay, double min_followed) {
    sc.user_density_per_mi2 = run.params.get("user_density_per_mi2", sc.user_density_per_mi2);
    sc.route_length_mi = run.params.get("route_length_mi", sc.route_length_mi);
    sc.target_reports = run.params.get("target_reports", sc.target_reports);
    sc.warmup_s = run.params.get("warmup_s", sc.warmup_s);
    sc.grace_s = run.params.get("grace_s", sc.grace_s);
    sc.config.area_width_mi = run.params.get("area_width_mi", sc.config.area_width_mi);
    sc.config.area_height_mi = run.params.get("area_height_mi", sc.config.area_height_mi);
    sc.config.query_agents = run.params.get("query_agents", sc.config.query_agents);
    sc.config.max_target_speed_mph = run.params.get("max_target_speed_mph", sc.config.max_target_speed_mph);
    sc.config.round_interval_s = run.params.get("round_interval_s", sc.config.round_interval_s);
    sc.config.query_latency_s = run.params.get("query_latency_s", sc.config.query_latency_s);
    sc.config.max_rounds_without_capture =
        run.params.get("max_rounds_without_capture", sc.config.max_rounds_without_capture);
    sc.cluster.server_count = run.params.get("servers", sc.cluster.server_count);
    min_captured = run.params.get("min_captured", min_captured);
    max_delay = run.params.get("max_mean_delay_s", max_delay);
    min_followed = run.params.get("min_followed_fraction", min_followed);
    run.params.finish();

    std::size_t worst_captured = std::numeric_limits<std::size_t>::max();
    std::size_t followed = 0;
    std::vector<double> delays;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto r = run_tracking(sc, run.trial_seed(t));
        const auto report = track_report_json(r);
        {
            auto out = run.open(trial_name(t, "_track.json"));
            out << report.dump(2) << '\n';
        }
        {
            auto out = run.open(trial_name(t, "_captures.csv"));
            out << "gps_timestamp,captured_at,delay_s,server,lat,lon\n";
            for (const auto& c : r.trace.captured) {
                out << fixed(c.gps_timestamp, 1) << ',' << fixed(c.captured_at, 1) << ',' << fixed(c.delay_s, 1)
                    << ',' << c.server << ',' << fixed(c.gps.lat, 7) << ',' << fixed(c.gps.lon, 7) << '\n';
            }
        }
        worst_captured = std::min(worst_captured, r.trace.captured.size());
        followed += r.trace.followed_to_destination;
        delays.push_back(r.trace.mean_delay_s());
        json m = report;
        m["followed"] = r.trace.followed_to_destination ? 1 : 0;
        m["ambient_users"] = r.ambient_users;
        run.trials.push_back(json{{"metrics", m}});
    }
    const double frac = static_cast<double>(followed) / static_cast<double>(run.cfg.trials);
    run.check("captured reports per trial", worst_captured >= min_captured,
              "min " + std::to_string(worst_captured) + " >= " + std::to_string(min_captured));
    run.check("mean capture delay", mean_of(delays) <= max_delay,
              num(mean_of(delays)) + " s <= " + num(max_delay) + " s");
    run.check("followed to destination", frac >= min_followed, num(frac) + " >= " + num(min_followed));
}

void track_highway(Run& run) {
    tracking(run, highway_tracking_defaults(), 19, 15.0, 0.9);
}

void track_city(Run& run) {
    tracking(run, city_tracking_defaults(), 16, 60.0, 0.9);
}

// --- detection --------------------------------------------------------------

struct DetectionParams {
    EncounterModel model;
    DetectionSetup setup;
};

DetectionParams detection_params(Params& p) {
    DetectionParams d;
    d.model.n = p.get("honest_nodes", d.model.n);
    d.model.alpha = p.get("alpha", d.model.alpha);
    d.model.connectivity_target = p.get("connectivity_target", d.model.connectivity_target);
    auto& s = d.setup;
    s.plan.sybil_count = p.get("sybils", s.plan.sybil_count);
    s.plan.inner_avg_degree = p.get("inner_degree", s.plan.inner_avg_degree);
    s.plan.inner_alpha = p.get("inner_alpha", s.plan.inner_alpha);
    s.plan.attack_edge_weight = p.get("attack_edge_weight", s.plan.attack_edge_weight);
    const auto topology = p.get<std::string>("topology", "tree");
    if (topology == "tree") {
        s.plan.topology = SybilTopology::GatewayTree;
    } else if (topology == "star") {
        s.plan.topology = SybilTopology::GatewayStar;
    } else {
        throw std::invalid_argument("topology must be 'tree' or 'star'");
    }
    s.trusted = p.get("trusted", s.trusted);
    const auto placement = p.get<std::string>("placement", "random");
    if (placement == "random") {
        s.placement = TrustedPlacement::Random;
    } else if (placement == "degree_spread") {
        s.placement = TrustedPlacement::DegreeSpread;
    } else {
        throw std::invalid_argument("placement must be 'random' or 'degree_spread'");
    }
    s.trusted_visits = p.get("trusted_visits", s.trusted_visits);
    s.rank.iterations = p.get("iterations", s.rank.iterations);
    s.rank.lazy = p.get("lazy", s.rank.lazy);
    s.cutoff = p.get("cutoff", s.cutoff);
    return d;
}

ProximityGraph honest_for_trial(const DetectionParams& d, std::uint64_t trial_seed) {
    Rng rng(derive_seed(trial_seed, 0x686f6e657374ULL));
    return grow_honest_graph(d.model, rng);
}

/// Seed for one attack configuration, independent of evaluation order.
std::uint64_t point_seed(std::uint64_t trial_seed, std::initializer_list<std::uint64_t> key) {
    std::uint64_t h = 0x9a0b1c2d3e4f5061ULL;
    for (auto k : key) h = mix64(h ^ mix64(k));
    return derive_seed(trial_seed, h);
}

struct PointStats {
    std::vector<double> auc, fp, fn;
};

void auc_vs_attack_edges(Run& run) {
    auto d = detection_params(run.params);
    const auto gateways = run.params.get<std::vector<std::size_t>>("gateways", {1, 100, 500, 1000});
    const auto edges =
        run.params.get<std::vector<std::size_t>>("attack_edges", {5000, 10000, 20000, 50000, 100000, 200000});
    const double single_min = run.params.get("single_gateway_min_auc", 0.98);
    const double g500_max = run.params.get("g500_max_auc", 0.65);
    run.params.finish();

    std::map<std::pair<std::size_t, std::size_t>, PointStats> stats;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto honest = honest_for_trial(d, run.trial_seed(t));
        json m = json::object();
        for (auto g : gateways) {
            for (auto e : edges) {
                auto setup = d.setup;
                setup.plan.gateway_count = g;
                setup.plan.attack_edge_total = e;
                const auto r = run_detection(honest, setup, point_seed(run.trial_seed(t), {g, e}));
                auto& s = stats[{g, e}];
                s.auc.push_back(r.metrics.auc);
                s.fp.push_back(r.metrics.fp);
                s.fn.push_back(r.metrics.fn);
                m["auc_g" + std::to_string(g) + "_e" + std::to_string(e)] = r.metrics.auc;
            }
        }
        run.trials.push_back(json{{"metrics", m}});
    }
    {
        auto out = run.open("auc_vs_attack_edges.csv");
        out << "gateways,attack_edges,mean_auc,sd_auc,mean_fp,mean_fn\n";
        for (const auto& [key, s] : stats) {
            out << key.first << ',' << key.second << ',' << fixed(mean_of(s.auc), 6) << ','
                << fixed(stddev_of(s.auc), 6) << ',' << fixed(mean_of(s.fp), 6) << ',' << fixed(mean_of(s.fn), 6)
                << '\n';
        }
    }
    const auto mean_at = [&](std::size_t g, std::size_t e) { return mean_of(stats.at({g, e}).auc); };
    const auto has = [&](std::size_t g, std::size_t e) { return stats.contains({g, e}); };
    for (auto e : edges) {
        if (has(1, e)) {
            run.check("single gateway AUC at " + std::to_string(e) + " edges", mean_at(1, e) >= single_min,
                      num(mean_at(1, e)) + " >= " + num(single_min));
        }
    }
    if (has(500, 50000)) {
        run.check("500 gateways, 50k edges degrade AUC", mean_at(500, 50000) <= g500_max,
                  num(mean_at(500, 50000)) + " <= " + num(g500_max));
    }
    if (has(1, 50000) && has(100, 50000) && has(500, 50000)) {
        const double a = mean_at(1, 50000), b = mean_at(100, 50000), c = mean_at(500, 50000);
        run.check("AUC falls as gateways go 1 -> 100 -> 500", a > b && b > c,
                  num(a) + " > " + num(b) + " > " + num(c));
    }
    if (edges.size() >= 3 && std::all_of(edges.begin(), edges.end(), [&](auto e) { return has(1000, e); })) {
        std::vector<double> curve;
        for (auto e : edges) curve.push_back(mean_at(1000, e));
        const auto lo = std::min_element(curve.begin(), curve.end());
        const bool interior = lo != curve.begin() && lo != curve.end() - 1;
        const bool rises = curve.back() >= *lo + 0.05;
        run.check("1000-gateway curve dips then rises", interior && rises,
                  "min " + num(*lo) + " at " + std::to_string(edges[lo - curve.begin()]) + " edges, last " +
                      num(curve.back()));
    }
}

void seeds_sweep(Run& run) {
    auto d = detection_params(run.params);
    d.setup.plan.gateway_count = run.params.get("gateways", std::size_t{1});
    d.setup.plan.attack_edge_total = run.params.get("attack_edges", std::size_t{5000});
    const auto counts = run.params.get<std::vector<std::size_t>>("trusted_counts", {10, 20, 30, 50, 100});
    const double max_spread = run.params.get("max_spread", 0.05);
    run.params.finish();

    std::map<std::size_t, std::vector<double>> aucs;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto honest = honest_for_trial(d, run.trial_seed(t));
        json m = json::object();
        const auto seed = point_seed(run.trial_seed(t), {d.setup.plan.gateway_count, d.setup.plan.attack_edge_total});
        for (auto k : counts) {
            auto setup = d.setup;
            setup.trusted = k;
            const auto r = run_detection(honest, setup, seed);
            aucs[k].push_back(r.metrics.auc);
            m["auc_k" + std::to_string(k)] = r.metrics.auc;
        }
        run.trials.push_back(json{{"metrics", m}});
    }
    double lo = 1.0, hi = 0.0;
    {
        auto out = run.open("seeds_sweep.csv");
        out << "trusted,mean_auc,sd_auc\n";
        for (const auto& [k, v] : aucs) {
            lo = std::min(lo, mean_of(v));
            hi = std::max(hi, mean_of(v));
            out << k << ',' << fixed(mean_of(v), 6) << ',' << fixed(stddev_of(v), 6) << '\n';
        }
    }
    run.check("AUC stable across trusted-seed counts", hi - lo < max_spread,
              "spread " + num(hi - lo) + " < " + num(max_spread));
    if (counts.size() >= 2) {
        const auto& first = aucs.at(*std::min_element(counts.begin(), counts.end()));
        const auto& last = aucs.at(*std::max_element(counts.begin(), counts.end()));
        run.check("more trusted seeds do not improve AUC", mean_of(last) <= mean_of(first) + 0.005,
                  "fewest " + num(mean_of(first)) + ", most " + num(mean_of(last)), false);
    }
}

void fp_fn_sweep(Run& run) {
    auto d = detection_params(run.params);
    d.setup.plan.gateway_count = run.params.get("gateways", std::size_t{1});
    const auto edges = run.params.get<std::vector<std::size_t>>("attack_edges", {5000, 10000, 20000, 50000});
    const double max_fp = run.params.get("max_fp", 0.05);
    const double max_fn = run.params.get("max_fn", 0.10);
    run.params.finish();

    std::map<std::size_t, PointStats> stats;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto honest = honest_for_trial(d, run.trial_seed(t));
        json m = json::object();
        for (auto e : edges) {
            auto setup = d.setup;
            setup.plan.attack_edge_total = e;
            const auto r = run_detection(honest, setup, point_seed(run.trial_seed(t), {setup.plan.gateway_count, e}));
            auto& s = stats[e];
            s.auc.push_back(r.metrics.auc);
            s.fp.push_back(r.metrics.fp);
            s.fn.push_back(r.metrics.fn);
            m["fp_e" + std::to_string(e)] = r.metrics.fp;
            m["fn_e" + std::to_string(e)] = r.metrics.fn;
        }
        run.trials.push_back(json{{"metrics", m}});
    }
    {
        auto out = run.open("fp_fn_sweep.csv");
        out << "attack_edges,mean_fp,sd_fp,mean_fn,sd_fn,mean_auc\n";
        for (const auto& [e, s] : stats) {
            out << e << ',' << fixed(mean_of(s.fp), 6) << ',' << fixed(stddev_of(s.fp), 6) << ','
                << fixed(mean_of(s.fn), 6) << ',' << fixed(stddev_of(s.fn), 6) << ',' << fixed(mean_of(s.auc), 6)
                << '\n';
        }
    }
    if (stats.contains(50000)) {
        const auto& s = stats.at(50000);
        run.check("false positives at 50k edges", mean_of(s.fp) <= max_fp, num(mean_of(s.fp)) + " <= " + num(max_fp));
        run.check("false negatives at 50k edges", mean_of(s.fn) <= max_fn, num(mean_of(s.fn)) + " <= " + num(max_fn));
    }
}

void small_groups(Run& run) {
    auto d = detection_params(run.params);
    d.setup.plan.gateway_count = run.params.get("gateways", std::size_t{1});
    d.setup.plan.attack_edge_total = run.params.get("attack_edges", std::size_t{50000});
    const auto sizes = run.params.get<std::vector<std::size_t>>("group_sizes", {20, 50, 100});
    const auto expected = run.params.get<std::vector<double>>("expected_auc", {0.90, 0.95, 0.99});
    const double tol = run.params.get("tolerance", 0.05);
    run.params.finish();
    if (expected.size() != sizes.size()) throw std::invalid_argument("expected_auc must match group_sizes");

    std::map<std::size_t, std::vector<double>> aucs;
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto honest = honest_for_trial(d, run.trial_seed(t));
        json m = json::object();
        for (auto n : sizes) {
            auto setup = d.setup;
            setup.plan.sybil_count = n;
            const auto r = run_detection(honest, setup, point_seed(run.trial_seed(t), {n}));
            aucs[n].push_back(r.metrics.auc);
            m["auc_n" + std::to_string(n)] = r.metrics.auc;
        }
        run.trials.push_back(json{{"metrics", m}});
    }
    auto out = run.open("small_groups.csv");
    out << "sybils,mean_auc,sd_auc,expected_auc\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double m = mean_of(aucs.at(sizes[i]));
        out << sizes[i] << ',' << fixed(m, 6) << ',' << fixed(stddev_of(aucs.at(sizes[i])), 6) << ','
            << fixed(expected[i], 3) << '\n';
        run.check("group of " + std::to_string(sizes[i]) + " Sybils", std::abs(m - expected[i]) <= tol,
                  num(m) + " within " + num(tol) + " of " + num(expected[i]));
    }
}

void cost_curve(Run& run) {
    auto d = detection_params(run.params);
    d.setup.plan.gateway_count = run.params.get("gateways", std::size_t{500});
    const auto sybils =
        run.params.get<std::vector<std::size_t>>("sybil_counts", {500, 1000, 1500, 2000, 2500, 3000});
    const double start = run.params.get("grid_start", 1000.0);
    const double factor = run.params.get("grid_factor", 1.2);
    const double max = run.params.get("grid_max", 100000.0);
    const auto levels = run.params.get<std::vector<double>>("levels", {0.99, 0.98, 0.95, 0.90, 0.75});
    const double r2_min = run.params.get("r2_min", 0.9);
    run.params.finish();
    const auto grid = geometric_grid(start, factor, max);

    std::vector<std::vector<double>> mean(sybils.size(), std::vector<double>(grid.size(), 0.0));
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        const auto honest = honest_for_trial(d, run.trial_seed(t));
        json m = json::object();
        for (std::size_t s = 0; s < sybils.size(); ++s) {
            for (std::size_t e = 0; e < grid.size(); ++e) {
                auto setup = d.setup;
                setup.plan.sybil_count = sybils[s];
                setup.plan.attack_edge_total = static_cast<std::size_t>(grid[e]);
                const auto r = run_detection(honest, setup,
                                             point_seed(run.trial_seed(t), {sybils[s], setup.plan.attack_edge_total}));
                mean[s][e] += r.metrics.auc / static_cast<double>(run.cfg.trials);
                m["auc_s" + std::to_string(sybils[s]) + "_e" + std::to_string(setup.plan.attack_edge_total)] =
                    r.metrics.auc;
            }
        }
        run.trials.push_back(json{{"metrics", m}});
    }
    {
        auto out = run.open("cost_curve.csv");
        out << "sybils,attack_edges,mean_auc\n";
        for (std::size_t s = 0; s < sybils.size(); ++s) {
            for (std::size_t e = 0; e < grid.size(); ++e) {
                out << sybils[s] << ',' << fixed(grid[e], 0) << ',' << fixed(mean[s][e], 6) << '\n';
            }
        }
    }
    const auto found = cost_levels(mean, grid, levels);
    {
        auto out = run.open("cost_levels.csv");
        out << "level,sybils,required_edges\n";
        for (const auto& c : found) {
            for (std::size_t s = 0; s < sybils.size(); ++s) {
                out << fixed(c.level, 3) << ',' << sybils[s] << ',';
                if (c.required[s]) out << fixed(*c.required[s], 0);
                out << '\n';
            }
        }
    }
    // The deepest level every Sybil count reaches on the grid carries the
    // shape check.
    const CostLevel* deepest = nullptr;
    for (const auto& c : found) {
        if (c.reached_by_all() && (!deepest || c.level < deepest->level)) deepest = &c;
    }
    for (const auto& c : found) {
        std::size_t reached = 0;
        for (const auto& r : c.required) reached += r.has_value();
        run.check("AUC < " + num(c.level) + " reachable", c.reached_by_all(),
                  std::to_string(reached) + "/" + std::to_string(sybils.size()) + " Sybil counts", false);
    }
    if (!deepest || sybils.size() < 2) {
        run.check("required edges grow linearly with Sybil count", false, "no level reached by every Sybil count");
        return;
    }
    std::vector<double> x, y;
    for (std::size_t s = 0; s < sybils.size(); ++s) {
        x.push_back(static_cast<double>(sybils[s]));
        y.push_back(*deepest->required[s]);
    }
    const auto fit = fit_line(x, y);
    run.check("required edges grow linearly with Sybil count", fit.r2 >= r2_min && fit.slope > 0.0,
              "level " + num(deepest->level) + ": slope " + num(fit.slope) + " edges/Sybil, R^2 " + num(fit.r2) +
                  " >= " + num(r2_min));
}

void simulate_world(Run& run) {
    json world_doc = run.params.get_json("world", json());
    const auto world_file = run.params.get<std::string>("world_file", "");
    const double duration = run.params.get("duration_s", 600.0);
    const double every = run.params.get("traffic_every_s", 60.0);
    const auto traffic = traffic_params(run.params, "threshold");
    run.params.finish();
    if (world_doc.is_null()) {
        if (world_file.empty()) throw std::invalid_argument("simulate-world needs 'world' or 'world_file'");
        std::ifstream in(world_file);
        if (!in) throw std::invalid_argument("cannot open world file " + world_file);
        in >> world_doc;
    }
    if (!(duration > 0.0) || !(every > 0.0)) throw std::invalid_argument("durations must be positive");

    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        World world = world_from_json(world_doc, run.trial_seed(t));
        TrafficMonitor monitor(world.network(), traffic);
        auto gps = run.open(trial_name(t, "_gps.csv"));
        auto seg = run.open(trial_name(t, "_traffic.csv"));
        write_gps_csv_header(gps);
        TrafficMonitor::write_csv_header(seg);
        std::size_t reports = 0;
        double next_dump = every;
        while (world.now() + 0.5 < duration) {
            const auto batch = world.advance(1.0);
            reports += batch.size();
            write_gps_csv(gps, world.network(), batch);
            monitor.ingest(batch);
            monitor.update(world.now());
            if (world.now() + 1e-9 >= next_dump) {
                monitor.write_csv(seg, world.now());
                next_dump += every;
            }
        }
        std::size_t hot = 0;
        for (const auto& [id, s] : monitor.states()) hot += s.hotspot;
        std::size_t arrived = 0;
        for (const auto& a : world.agents()) arrived += a.arrived();
        run.trials.push_back(json{{"metrics",
                                   {{"reports", reports},
                                    {"vehicles", world.agents().size()},
                                    {"arrived", arrived},
                                    {"hotspot_segments", hot}}}});
    }
}

void detect(Run& run) {
    const auto nodes_file = run.params.get<std::string>("nodes_file", "");
    const auto edges_file = run.params.get<std::string>("edges_file", "");
    const auto trusted = run.params.get("trusted", std::size_t{0});
    const double cutoff = run.params.get("cutoff", 0.1);
    SybilRankOptions opts;
    opts.iterations = run.params.get("iterations", opts.iterations);
    opts.lazy = run.params.get("lazy", opts.lazy);
    run.params.finish();

    std::ifstream nodes(nodes_file), edges(edges_file);
    if (!nodes || !edges) throw std::invalid_argument("detect needs readable 'nodes_file' and 'edges_file'");
    const auto base = read_graph(nodes, edges);
    for (std::size_t t = 0; t < run.cfg.trials; ++t) {
        auto graph = base;
        auto seeds = graph.trusted_nodes();
        if (trusted > 0) {
            for (auto u : seeds) graph.set_trusted(u, false);
            Rng rng(run.trial_seed(t));
            seeds = seed_trusted(graph, trusted, TrustedPlacement::Random, rng);
        }
        if (seeds.empty()) throw std::invalid_argument("graph has no trusted nodes; set 'trusted'");
        const auto trust = propagate_trust(graph, seeds, opts);
        const auto ranked = rank_nodes(graph, trust);
        const auto metrics = evaluate_detection(ranked, trust, cutoff);
        auto out = run.open(trial_name(t, "_ranked.csv"));
        write_ranked_csv(out, graph, ranked);
        run.trials.push_back(json{{"metrics", to_json(metrics)}});
    }
}

struct ScenarioEntry {
    ScenarioInfo info;
    std::function<void(Run&)> body;
};

const std::vector<ScenarioEntry>& registry() {
    static const std::vector<ScenarioEntry> entries{
        {{"aggregation-sweep", "displayed segment speed for slow/fast cohort mixes on each road class"},
         aggregation_sweep},
        {{"persistent-jam", "looping slow ghost riders hold a highway hotspot; removal run measures dismissal"},
         persistent_jam},
        {{"downsample-converge", "20-user query cap: appearance statistics and unique-user convergence"},
         downsample_converge},
        {{"track-city", "follow one driver through a dense city grid"}, track_city},
        {{"track-highway", "follow one driver along a sparse highway"}, track_highway},
        {{"auc-vs-attack-edges", "SybilRank AUC against attack edges for several gateway counts"},
         auc_vs_attack_edges},
        {{"seeds-sweep", "SybilRank AUC against the number of trusted seeds"}, seeds_sweep},
        {{"fp-fn-sweep", "false positive/negative rates at a 10% cutoff"}, fp_fn_sweep},
        {{"cost-curve", "attack edges needed to pull AUC under a level, per Sybil count"}, cost_curve},
        {{"small-groups", "detection of small Sybil groups behind one gateway"}, small_groups},
        {{"simulate-world", "step a world config and dump GPS and segment-state CSVs"}, simulate_world},
        {{"detect", "rank a stored proximity graph"}, detect},
    };
    return entries;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> infos = [] {
        std::vector<ScenarioInfo> v;
        for (const auto& e : registry()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

RunOutcome run_scenario(const ExperimentConfig& cfg) {
    const auto& entries = registry();
    const auto it = std::find_if(entries.begin(), entries.end(),
                                 [&](const ScenarioEntry& e) { return e.info.name == cfg.scenario; });
    if (it == entries.end()) {
        std::string names;
        for (const auto& e : entries) names += (names.empty() ? "" : ", ") + e.info.name;
        throw std::invalid_argument("unknown scenario '" + cfg.scenario + "' (known: " + names + ")");
    }
    if (cfg.trials == 0) throw std::invalid_argument("trials must be >= 1");

    const fs::path dir = fs::path(cfg.output_dir) / cfg.scenario;
    fs::create_directories(dir);
    Run run{cfg, dir, Params(cfg.params, cfg.scenario), {}, {}, {}};
    it->body(run);

    std::vector<std::string> trial_files;
    for (std::size_t i = 0; i < run.trials.size(); ++i) {
        json t = run.trials[i];
        t["trial"] = i;
        t["seed"] = run.trial_seed(i);
        const auto name = trial_name(i, ".json");
        std::ofstream out(dir / name, std::ios::binary);
        out << t.dump(2) << '\n';
        trial_files.push_back(name);
    }
    json checks = json::array();
    for (const auto& c : run.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"required", c.required}});
    }
    ExperimentConfig effective = cfg;
    effective.params = run.params.effective();
    const json manifest{{"scenario", cfg.scenario},
                        {"config", to_json(effective)},
                        {"trial_files", trial_files},
                        {"data_files", run.files},
                        {"checks", checks}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    return RunOutcome{dir, run.checks};
}

Summary summarize(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::invalid_argument(dir.string() + " is not a directory");
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json") manifests.push_back(entry.path());
    }
    if (manifests.empty()) throw std::invalid_argument("no results (manifest.json) under " + dir.string());
    std::sort(manifests.begin(), manifests.end());

    Summary summary;
    std::map<std::string, std::map<std::string, std::vector<double>>> columns;
    for (const auto& path : manifests) {
        json manifest;
        std::ifstream(path) >> manifest;
        const auto scenario = manifest.at("scenario").get<std::string>();
        const auto trial_files = manifest.at("trial_files").get<std::vector<std::string>>();
        if (trial_files.empty()) throw std::runtime_error(path.string() + " lists no trials");
        for (const auto& name : trial_files) {
            const auto file = path.parent_path() / name;
            std::ifstream in(file);
            if (!in) throw std::runtime_error("missing trial file " + file.string());
            json trial;
            in >> trial;
            for (const auto& [key, value] : trial.at("metrics").items()) {
                if (value.is_number() || value.is_boolean()) {
                    columns[scenario][key].push_back(value.is_boolean() ? (value.get<bool>() ? 1.0 : 0.0)
                                                                        : value.get<double>());
                }
            }
        }
        for (const auto& c : manifest.at("checks")) {
            summary.checks.emplace_back(scenario, Check{c.at("name").get<std::string>(), c.at("pass").get<bool>(),
                                                        c.at("detail").get<std::string>(),
                                                        c.value("required", true)});
        }
        ++summary.runs;
    }
    for (const auto& [scenario, metrics] : columns) {
        for (const auto& [metric, values] : metrics) {
            summary.metrics.push_back(
                MetricSummary{scenario, metric, values.size(), mean_of(values), stddev_of(values)});
        }
    }
    return summary;
}

void print_summary(std::ostream& out, const Summary& s) {
    std::size_t w = 6;
    for (const auto& m : s.metrics) w = std::max(w, m.metric.size());
    std::string current;
    for (const auto& m : s.metrics) {
        if (m.scenario != current) {
            current = m.scenario;
            out << '\n' << current << '\n';
            out << "  " << std::string("metric").append(w - 6, ' ') << "      n          mean         sd\n";
        }
        char line[64];
        std::snprintf(line, sizeof line, "%7zu %13.6g %10.4g", m.n, m.mean, m.stddev);
        out << "  " << m.metric << std::string(w - m.metric.size(), ' ') << line << '\n';
    }
    out << "\nchecks\n";
    for (const auto& [scenario, c] : s.checks) {
        out << "  " << (c.pass ? "PASS" : c.required ? "FAIL" : "info") << "  " << scenario << ": " << c.name
            << " (" << c.detail << ")\n";
    }
    out << '\n' << s.runs << " run(s), " << s.violations() << " violation(s)\n";
}

}  // namespace ghostmap
