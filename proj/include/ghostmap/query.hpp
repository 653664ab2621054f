#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ghostmap/rng.hpp"
#include "ghostmap/road_network.hpp"
#include "ghostmap/world.hpp"

namespace ghostmap {

/// Closed lat/lon rectangle.
struct SearchArea {
    double lat_min = 0.0;
    double lon_min = 0.0;
    double lat_max = 0.0;
    double lon_max = 0.0;

    /// Rejects empty or inverted rectangles.
    static SearchArea from_bounds(double lat_min, double lon_min, double lat_max, double lon_max);
    /// width runs east-west, height north-south.
    static SearchArea centered(const LocalProjection& projection, Point center, double width_mi,
                               double height_mi);

    [[nodiscard]] bool contains(const GeoPoint& g) const;
};

struct UserRecord {
    std::string session_user_id;
    std::string nickname;
    std::int64_t account_creation_time = 0;
    GeoPoint gps;
    double gps_timestamp = 0.0;
    bool visible = true;
};

UserRecord make_user_record(const World& world, const GpsReport& report);

struct ClusterOptions {
    std::size_t server_count = 4;
    double sync_delay_min_s = 120.0;
    double sync_delay_max_s = 300.0;
    std::size_t max_results = 20;
};

/// Replicated user-location store. A report lands on its account's home
/// server at once and on each other server after its own random sync delay.
class ServerCluster {
public:
    explicit ServerCluster(ClusterOptions options = {}, std::uint64_t seed = 1);

    [[nodiscard]] std::size_t server_count() const { return views_.size(); }
    [[nodiscard]] const ClusterOptions& options() const { return options_; }
    [[nodiscard]] std::size_t home_server(std::int64_t account) const;

    void ingest(const UserRecord& record, double now);
    void ingest(const World& world, const std::vector<GpsReport>& reports);
    /// Applies every sync delivery due at or before `now`.
    void advance(double now);
    [[nodiscard]] double clock() const { return clock_; }

    /// Visible users inside `area` as seen by `server` after the last
    /// advance(); a uniform random subset when more than max_results match.
    /// `now` must not precede that advance.
    std::vector<UserRecord> query(std::size_t server, const SearchArea& area, double now, Rng& rng) const;

    [[nodiscard]] const std::vector<UserRecord>& view(std::size_t server) const;
    [[nodiscard]] const UserRecord* lookup(std::size_t server, std::int64_t account) const;
    [[nodiscard]] std::size_t pending_deliveries() const { return pending_.size(); }

private:
    struct View {
        std::vector<UserRecord> records;
        std::unordered_map<std::int64_t, std::size_t> index;
    };
    struct Delivery {
        double due;
        std::uint64_t seq;
        std::size_t server;
        UserRecord record;
    };
    struct Later {
        bool operator()(const Delivery& a, const Delivery& b) const {
            return a.due != b.due ? a.due > b.due : a.seq > b.seq;
        }
    };

    void apply(std::size_t server, const UserRecord& record);

    ClusterOptions options_;
    Rng rng_;
    std::vector<View> views_;
    std::priority_queue<Delivery, std::vector<Delivery>, Later> pending_;
    std::uint64_t seq_ = 0;
    double clock_ = -std::numeric_limits<double>::infinity();
};

/// Expected number of distinct users seen after n capped queries over m users:
///   m * (1 - (1 - min(cap, m) / m)^n)
double expected_unique_users(std::size_t m, std::size_t n, std::size_t cap = 20);

struct AppearanceFit {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    bool pass = true;
    /// No test was possible (m <= cap, or fewer than two usable bins).
    bool vacuous = false;
};

/// Chi-square goodness of fit of per-user appearance counts against
/// Binomial(n, cap/m). Bins are merged from the left until each expected
/// count reaches 5; a short final bin joins its neighbour.
AppearanceFit appearance_distribution_check(std::span<const std::uint64_t> counts, std::size_t m, std::size_t n,
                                            std::size_t cap = 20, double alpha = 0.01);

/// Union of `queries_per_server` queries against every server, keyed by
/// account creation time (latest fix wins), in ascending account order.
std::vector<UserRecord> merge_server_views(const ServerCluster& cluster, const SearchArea& area, double now,
                                           std::size_t queries_per_server, Rng& rng);

void write_query_log_header(std::ostream& out);
void write_query_log_row(std::ostream& out, double now, std::size_t server, const SearchArea& area,
                         const std::vector<UserRecord>& results);

}  // namespace ghostmap
