#include "ghostmap/query.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "ghostmap/format.hpp"

namespace ghostmap {

SearchArea SearchArea::from_bounds(double lat_min, double lon_min, double lat_max, double lon_max) {
    if (!(lat_max > lat_min) || !(lon_max > lon_min)) {
        throw std::invalid_argument("search area must have positive extent");
    }
    return SearchArea{lat_min, lon_min, lat_max, lon_max};
}

SearchArea SearchArea::centered(const LocalProjection& projection, Point center, double width_mi,
                                double height_mi) {
    if (!(width_mi > 0.0) || !(height_mi > 0.0)) {
        throw std::invalid_argument("search area must have positive extent");
    }
    const GeoPoint lo = projection.to_geo(Point{center.x_mi - width_mi / 2, center.y_mi - height_mi / 2});
    const GeoPoint hi = projection.to_geo(Point{center.x_mi + width_mi / 2, center.y_mi + height_mi / 2});
    return from_bounds(lo.lat, lo.lon, hi.lat, hi.lon);
}

bool SearchArea::contains(const GeoPoint& g) const {
    return g.lat >= lat_min && g.lat <= lat_max && g.lon >= lon_min && g.lon <= lon_max;
}

UserRecord make_user_record(const World& world, const GpsReport& report) {
    const auto& a = world.agent(report.vehicle_id);
    return UserRecord{a.session_id(), a.spec().nickname, a.account_creation_time(),
                      world.network().projection().to_geo(report.location.xy), report.time_s, a.visible()};
}

ServerCluster::ServerCluster(ClusterOptions options, std::uint64_t seed)
    : options_(options), rng_(derive_seed(seed, 0x636c7573ULL)) {
    if (options_.server_count == 0) throw std::invalid_argument("cluster needs at least one server");
    if (options_.max_results == 0) throw std::invalid_argument("query cap must be positive");
    if (!(options_.sync_delay_min_s >= 0.0) || options_.sync_delay_max_s < options_.sync_delay_min_s) {
        throw std::invalid_argument("sync delay range is invalid");
    }
    views_.resize(options_.server_count);
}

std::size_t ServerCluster::home_server(std::int64_t account) const {
    return static_cast<std::size_t>(mix64(static_cast<std::uint64_t>(account)) % views_.size());
}

void ServerCluster::apply(std::size_t server, const UserRecord& record) {
    auto& v = views_[server];
    const auto [it, inserted] = v.index.try_emplace(record.account_creation_time, v.records.size());
    if (inserted) {
        v.records.push_back(record);
    } else if (record.gps_timestamp >= v.records[it->second].gps_timestamp) {
        v.records[it->second] = record;
    }
}

void ServerCluster::ingest(const UserRecord& record, double now) {
    const auto home = home_server(record.account_creation_time);
    apply(home, record);
    std::uniform_real_distribution<double> delay(options_.sync_delay_min_s, options_.sync_delay_max_s);
    for (std::size_t s = 0; s < views_.size(); ++s) {
        if (s == home) continue;
        pending_.push(Delivery{now + delay(rng_), seq_++, s, record});
    }
    clock_ = std::max(clock_, now);
}

void ServerCluster::ingest(const World& world, const std::vector<GpsReport>& reports) {
    for (const auto& r : reports) ingest(make_user_record(world, r), r.time_s);
}

void ServerCluster::advance(double now) {
    while (!pending_.empty() && pending_.top().due <= now) {
        apply(pending_.top().server, pending_.top().record);
        pending_.pop();
    }
    clock_ = std::max(clock_, now);
}

std::vector<UserRecord> ServerCluster::query(std::size_t server, const SearchArea& area, double now,
                                             Rng& rng) const {
    if (server >= views_.size()) throw std::out_of_range("server index out of range");
    if (now < clock_) throw std::invalid_argument("query time precedes the cluster clock");
    std::vector<std::size_t> hits;
    const auto& records = views_[server].records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].visible && area.contains(records[i].gps)) hits.push_back(i);
    }
    const std::size_t k = std::min(hits.size(), options_.max_results);
    if (hits.size() > k) {
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(hits[i], hits[i + uniform_index(rng, hits.size() - i)]);
        }
        hits.resize(k);
    }
    std::vector<UserRecord> out;
    out.reserve(k);
    for (auto i : hits) out.push_back(records[i]);
    return out;
}

const std::vector<UserRecord>& ServerCluster::view(std::size_t server) const {
    return views_.at(server).records;
}

const UserRecord* ServerCluster::lookup(std::size_t server, std::int64_t account) const {
    const auto& v = views_.at(server);
    const auto it = v.index.find(account);
    return it == v.index.end() ? nullptr : &v.records[it->second];
}

double expected_unique_users(std::size_t m, std::size_t n, std::size_t cap) {
    if (m == 0) throw std::invalid_argument("expected_unique_users needs m >= 1");
    const double md = static_cast<double>(m);
    const double p = static_cast<double>(std::min(cap, m)) / md;
    return md * (1.0 - std::pow(1.0 - p, static_cast<double>(n)));
}

AppearanceFit appearance_distribution_check(std::span<const std::uint64_t> counts, std::size_t m, std::size_t n,
                                            std::size_t cap, double alpha) {
    if (counts.size() != m) throw std::invalid_argument("need one appearance count per user");
    AppearanceFit fit;
    if (m <= cap || n == 0) {
        fit.vacuous = true;
        return fit;
    }
    const double p = static_cast<double>(cap) / static_cast<double>(m);
    const boost::math::binomial_distribution<double> binom(static_cast<double>(n), p);

    std::vector<double> observed(n + 1, 0.0);
    for (auto c : counts) {
        if (c > n) throw std::invalid_argument("appearance count exceeds number of queries");
        observed[c] += 1.0;
    }

    struct Bin {
        double obs = 0.0;
        double exp = 0.0;
    };
    std::vector<Bin> bins;
    Bin cur;
    for (std::size_t k = 0; k <= n; ++k) {
        cur.obs += observed[k];
        cur.exp += static_cast<double>(m) * boost::math::pdf(binom, static_cast<double>(k));
        if (cur.exp >= 5.0) {
            bins.push_back(cur);
            cur = Bin{};
        }
    }
    if (cur.exp > 0.0 || cur.obs > 0.0) {
        if (bins.empty()) {
            bins.push_back(cur);
        } else {
            bins.back().obs += cur.obs;
            bins.back().exp += cur.exp;
        }
    }
    if (bins.size() < 2) {
        fit.vacuous = true;
        return fit;
    }
    for (const auto& b : bins) fit.statistic += (b.obs - b.exp) * (b.obs - b.exp) / b.exp;
    fit.dof = bins.size() - 1;
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(fit.dof));
    fit.p_value = boost::math::cdf(boost::math::complement(chi, fit.statistic));
    fit.pass = fit.p_value >= alpha;
    return fit;
}

std::vector<UserRecord> merge_server_views(const ServerCluster& cluster, const SearchArea& area, double now,
                                           std::size_t queries_per_server, Rng& rng) {
    if (queries_per_server == 0) throw std::invalid_argument("queries_per_server must be >= 1");
    std::map<std::int64_t, UserRecord> merged;
    for (std::size_t s = 0; s < cluster.server_count(); ++s) {
        for (std::size_t q = 0; q < queries_per_server; ++q) {
            for (auto& r : cluster.query(s, area, now, rng)) {
                const auto [it, inserted] = merged.try_emplace(r.account_creation_time, r);
                if (!inserted && r.gps_timestamp > it->second.gps_timestamp) it->second = r;
            }
        }
    }
    std::vector<UserRecord> out;
    out.reserve(merged.size());
    for (auto& [account, r] : merged) out.push_back(std::move(r));
    return out;
}

void write_query_log_header(std::ostream& out) {
    out << "time_s,server,area,returned_count,account_ids\n";
}

void write_query_log_row(std::ostream& out, double now, std::size_t server, const SearchArea& area,
                         const std::vector<UserRecord>& results) {
    out << fixed(now, 1) << ',' << server << ',' << fixed(area.lat_min, 6) << ';' << fixed(area.lon_min, 6)
        << ';' << fixed(area.lat_max, 6) << ';' << fixed(area.lon_max, 6) << ',' << results.size() << ',';
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (i) out << ';';
        out << results[i].account_creation_time;
    }
    out << '\n';
}

}  // namespace ghostmap
