#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ghostmap/query.hpp"
#include "ghostmap/road_network.hpp"
#include "ghostmap/traffic.hpp"

namespace ghostmap {

// Building blocks shared by the experiment runner and the acceptance suite.

/// Aggregate the traffic monitor shows for one segment carrying n_slow
/// scripted ghost riders at s_slow and n_fast honest drivers at s_fast, read
/// after the first report interval.
struct AggregationPoint {
    RoadClass road_class = RoadClass::Highway;
    std::size_t n_slow = 0;
    std::size_t n_fast = 0;
    double s_slow = 0.0;
    double s_fast = 0.0;
    double displayed_mph = 0.0;
    bool hotspot = false;
};

AggregationPoint measure_aggregate(RoadClass road_class, std::size_t n_slow, double s_slow, std::size_t n_fast,
                                   double s_fast, const TrafficOptions& options, std::uint64_t seed);

struct JamOptions {
    double segment_length_mi = 3.0;
    std::size_t slow_cars = 3;
    double slow_mph = 10.0;
    double loop_period_s = 600.0;
    std::size_t fast_cars = 2;
    double fast_mph = 60.0;
    /// A wave of fast_cars honest drivers enters this often.
    double fast_every_s = 600.0;
    double duration_s = 3000.0;
    /// Ghost riders log off here in the removal run.
    double remove_slow_at_s = 1500.0;
    TrafficOptions traffic;
};

struct JamSample {
    double time_s;
    std::optional<double> aggregate_mph;
    bool hotspot;
};

struct JamResult {
    std::optional<double> onset_s;
    /// Hotspot on at every tick from onset to the end of the run.
    bool continuous = false;
    double on_fraction_after_onset = 0.0;
    /// Removal run only: first at-or-above-threshold aggregate after the
    /// ghost riders left, and when the hotspot went off.
    std::optional<double> first_normal_s;
    std::optional<double> cleared_at_s;
    std::vector<JamSample> timeline;

    [[nodiscard]] std::optional<double> clear_delay_s() const;
};

JamResult run_persistent_jam(const JamOptions& options, bool remove_slow, std::uint64_t seed);

struct DownsampleOptions {
    std::size_t users = 100;
    std::size_t queries = 100;
    double warmup_s = 600.0;
    double alpha = 0.01;
    ClusterOptions cluster;
};

struct DownsampleResult {
    std::vector<std::uint64_t> appearances;
    /// unique_curve[k] = distinct users seen after k + 1 queries.
    std::vector<std::size_t> unique_curve;
    AppearanceFit fit;
};

DownsampleResult run_downsample(const DownsampleOptions& options, std::uint64_t seed);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares. Needs at least two distinct x values.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// mean_auc[s][e]: mean AUC for sybil_counts[s] at edge_grid[e]. For each
/// level, required[s] is the first grid value whose mean AUC is below the
/// level, or empty when the grid never gets there.
struct CostLevel {
    double level = 0.0;
    std::vector<std::optional<double>> required;
    [[nodiscard]] bool reached_by_all() const;
};

std::vector<CostLevel> cost_levels(const std::vector<std::vector<double>>& mean_auc,
                                   const std::vector<double>& edge_grid, const std::vector<double>& levels);

/// Geometric grid start, start*factor, ... up to and including max.
std::vector<double> geometric_grid(double start, double factor, double max);

}  // namespace ghostmap
