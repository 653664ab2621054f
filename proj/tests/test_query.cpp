#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ghostmap/query.hpp"
#include "ghostmap/scenarios.hpp"

using namespace ghostmap;

namespace {

UserRecord record(std::int64_t account, GeoPoint gps, double t, bool visible = true) {
    UserRecord r;
    r.account_creation_time = account;
    r.session_user_id = "s" + std::to_string(account);
    r.gps = gps;
    r.gps_timestamp = t;
    r.visible = visible;
    return r;
}

const SearchArea kBox = SearchArea::from_bounds(34.0, -118.3, 34.1, -118.2);

GeoPoint inside(int i) {
    return {34.0 + 0.0009 * (i % 100 + 1), -118.3 + 0.0009 * (i / 100 % 100 + 1)};
}

ClusterOptions one_server() {
    ClusterOptions o;
    o.server_count = 1;
    return o;
}

}  // namespace

TEST_CASE("search areas") {
    CHECK_THROWS_AS(SearchArea::from_bounds(34.1, -118.3, 34.0, -118.2), std::invalid_argument);
    CHECK_THROWS_AS(SearchArea::from_bounds(34.0, -118.3, 34.0, -118.2), std::invalid_argument);
    CHECK(kBox.contains({34.0, -118.3}));   // closed bounds
    CHECK(kBox.contains({34.1, -118.2}));
    CHECK_FALSE(kBox.contains({34.1000001, -118.25}));
    const LocalProjection proj;
    const auto a = SearchArea::centered(proj, {1.0, 2.0}, 6.0, 8.0);
    CHECK((a.lat_max - a.lat_min) * kMilesPerDegreeLat == doctest::Approx(8.0));
    CHECK((a.lon_max - a.lon_min) * proj.miles_per_degree_lon() == doctest::Approx(6.0));
    CHECK(a.contains(proj.to_geo({1.0, 2.0})));
    CHECK(a.contains(proj.to_geo({3.99, 5.99})));
    CHECK_FALSE(a.contains(proj.to_geo({4.01, 2.0})));
}

TEST_CASE("query below the cap returns everyone") {
    ServerCluster c(one_server(), 1);
    for (int i = 0; i < 15; ++i) c.ingest(record(i, inside(i), 0.0), 0.0);
    c.advance(0.0);
    Rng rng(1);
    CHECK(c.query(0, kBox, 0.0, rng).size() == 15);
}

TEST_CASE("query caps at 20 distinct users") {
    ServerCluster c(one_server(), 1);
    for (int i = 0; i < 100; ++i) c.ingest(record(i, inside(i), 0.0), 0.0);
    c.advance(0.0);
    Rng rng(2);
    const auto got = c.query(0, kBox, 0.0, rng);
    CHECK(got.size() == 20);
    std::set<std::int64_t> ids;
    for (const auto& r : got) ids.insert(r.account_creation_time);
    CHECK(ids.size() == 20);
}

TEST_CASE("property: queries return visible users inside the area, without duplicates") {
    ServerCluster c(one_server(), 3);
    Rng place(9);
    std::uniform_real_distribution<double> lat(33.95, 34.15), lon(-118.35, -118.15);
    for (int i = 0; i < 300; ++i) c.ingest(record(i, {lat(place), lon(place)}, 0.0, i % 7 != 0), 0.0);
    c.advance(0.0);
    Rng rng(4);
    for (int q = 0; q < 500; ++q) {
        const auto got = c.query(0, kBox, 0.0, rng);
        CHECK(got.size() <= 20);
        std::set<std::int64_t> ids;
        for (const auto& r : got) {
            CHECK(kBox.contains(r.gps));
            CHECK(r.visible);
            CHECK(r.account_creation_time % 7 != 0);
            ids.insert(r.account_creation_time);
        }
        CHECK(ids.size() == got.size());
    }
}

TEST_CASE("latest fix per account wins and invisibility hides a user") {
    ServerCluster c(one_server(), 1);
    c.ingest(record(5, inside(1), 10.0), 10.0);
    c.ingest(record(5, inside(2), 20.0), 20.0);
    c.advance(20.0);
    Rng rng(1);
    auto got = c.query(0, kBox, 20.0, rng);
    REQUIRE(got.size() == 1);
    CHECK(got[0].gps == inside(2));
    c.ingest(record(5, inside(3), 30.0, false), 30.0);
    c.advance(30.0);
    CHECK(c.query(0, kBox, 30.0, rng).empty());
    CHECK_THROWS(c.query(0, kBox, 10.0, rng));
}

TEST_CASE("sync delay: home server at once, others within 2-5 minutes") {
    ClusterOptions o;
    o.server_count = 2;
    ServerCluster c(o, 7);
    const std::int64_t acct = 42;
    const auto home = c.home_server(acct);
    const auto other = 1 - home;
    c.ingest(record(acct, inside(0), 1000.0), 1000.0);
    c.advance(1000.0 + 119.0);
    CHECK(c.lookup(home, acct) != nullptr);
    CHECK(c.lookup(other, acct) == nullptr);
    Rng rng(1);
    auto merged = merge_server_views(c, kBox, 1119.0, 1, rng);
    CHECK(merged.size() == 1);
    c.advance(1000.0 + 300.0);
    CHECK(c.lookup(other, acct) != nullptr);
    CHECK(c.pending_deliveries() == 0);
}

TEST_CASE("property: every delivery lands inside the delay window") {
    ClusterOptions o;
    o.server_count = 4;
    ServerCluster c(o, 11);
    for (int i = 0; i < 400; ++i) c.ingest(record(i, inside(i), 0.0), 0.0);
    c.advance(119.999);
    for (int i = 0; i < 400; ++i) {
        for (std::size_t s = 0; s < 4; ++s) {
            CHECK((c.lookup(s, i) != nullptr) == (s == c.home_server(i)));
        }
    }
    c.advance(300.0);
    for (int i = 0; i < 400; ++i) {
        for (std::size_t s = 0; s < 4; ++s) CHECK(c.lookup(s, i) != nullptr);
    }
}

TEST_CASE("single-server merge equals repeated queries") {
    ServerCluster c(one_server(), 1);
    for (int i = 0; i < 60; ++i) c.ingest(record(i, inside(i), 0.0), 0.0);
    c.advance(0.0);
    Rng a(5), b(5);
    const auto merged = merge_server_views(c, kBox, 0.0, 10, a);
    std::set<std::int64_t> by_hand;
    for (int q = 0; q < 10; ++q) {
        for (const auto& r : c.query(0, kBox, 0.0, b)) by_hand.insert(r.account_creation_time);
    }
    std::vector<std::int64_t> got;
    for (const auto& r : merged) got.push_back(r.account_creation_time);
    CHECK(got == std::vector<std::int64_t>(by_hand.begin(), by_hand.end()));
}

TEST_CASE("expected unique users") {
    CHECK(expected_unique_users(100, 0) == 0.0);
    CHECK(expected_unique_users(20, 1) == doctest::Approx(20.0));
    CHECK(expected_unique_users(7, 3) == doctest::Approx(7.0));
    CHECK(expected_unique_users(100, 50) == doctest::Approx(100.0 * (1.0 - std::pow(0.8, 50))));
    CHECK(expected_unique_users(100, 50) == doctest::Approx(99.9986).epsilon(1e-6));
    double prev = 0.0;
    for (std::size_t n = 0; n < 400; ++n) {
        const double e = expected_unique_users(250, n);
        CHECK(e >= prev);
        CHECK(e <= 250.0);
        prev = e;
    }
    CHECK(prev == doctest::Approx(250.0).epsilon(1e-9));
}

TEST_CASE("expected unique users agrees with Monte Carlo over 10^4 runs") {
    // Draw 20-subsets directly (independent of the cluster code) and count.
    Rng rng(2024);
    const std::size_t m = 100, n = 8, runs = 10000;
    std::vector<std::size_t> ids(m);
    double total = 0.0, total_sq = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        std::vector<bool> seen(m, false);
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t i = 0; i < m; ++i) ids[i] = i;
            std::shuffle(ids.begin(), ids.end(), rng);
            for (std::size_t k = 0; k < 20; ++k) seen[ids[k]] = true;
        }
        const double u = static_cast<double>(std::count(seen.begin(), seen.end(), true));
        total += u;
        total_sq += u * u;
    }
    const double mean = total / runs;
    const double sd = std::sqrt(total_sq / runs - mean * mean);
    CHECK(std::abs(mean - expected_unique_users(m, n)) < 4.0 * sd / std::sqrt(double(runs)));
}

TEST_CASE("appearance counts from the cluster fit the binomial model") {
    DownsampleOptions o;
    const auto r = run_downsample(o, 3);
    double mean = 0.0;
    for (auto c : r.appearances) mean += static_cast<double>(c) / static_cast<double>(o.users);
    CHECK(mean == doctest::Approx(20.0));
    CHECK(r.fit.pass);
    CHECK_FALSE(r.fit.vacuous);
    CHECK(r.fit.dof >= 2);
    CHECK(r.unique_curve.front() == 20);
}

TEST_CASE("rigged sampler fails the binomial check") {
    // users 0..19 always returned: counts n for 20 users, 0 for the rest
    std::vector<std::uint64_t> counts(100, 0);
    for (int i = 0; i < 20; ++i) counts[i] = 100;
    const auto fit = appearance_distribution_check(counts, 100, 100);
    CHECK_FALSE(fit.pass);
    CHECK(fit.p_value < 0.01);
    // milder bias: half the users picked twice as often
    Rng rng(8);
    std::vector<std::uint64_t> skew(100, 0);
    std::vector<double> w(100, 1.0);
    for (int i = 0; i < 50; ++i) w[i] = 3.0;
    std::discrete_distribution<int> pick(w.begin(), w.end());
    for (int q = 0; q < 100; ++q) {
        std::set<int> got;
        while (got.size() < 20) got.insert(pick(rng));
        for (int u : got) ++skew[u];
    }
    CHECK_FALSE(appearance_distribution_check(skew, 100, 100).pass);
}

TEST_CASE("appearance check is vacuous when nothing is downsampled") {
    std::vector<std::uint64_t> counts(15, 40);
    const auto fit = appearance_distribution_check(counts, 15, 40);
    CHECK(fit.vacuous);
    CHECK(fit.pass);
}

TEST_CASE("appearance check statistic against a hand-computed binomial") {
    // Counts exactly at the binomial expectation give statistic ~0 and p ~1.
    const std::size_t m = 1000, n = 10;
    const double p = 20.0 / m;
    std::vector<std::uint64_t> counts;
    double remaining = m;
    for (std::size_t k = 0; k <= n && remaining > 0.5; ++k) {
        double pk = std::pow(1 - p, double(n - k)) * std::pow(p, double(k));
        for (std::size_t j = 0; j < k; ++j) pk *= double(n - j) / double(j + 1);
        const auto c = static_cast<std::size_t>(std::lround(pk * m));
        for (std::size_t j = 0; j < c && remaining > 0.5; ++j, remaining -= 1) counts.push_back(k);
    }
    while (counts.size() < m) counts.push_back(0);
    const auto fit = appearance_distribution_check(counts, m, n);
    CHECK(fit.pass);
    CHECK(fit.statistic < 1.0);
}

TEST_CASE("query log rows") {
    std::ostringstream out;
    write_query_log_header(out);
    write_query_log_row(out, 12.0, 3, kBox, {record(7, inside(0), 0), record(9, inside(1), 0)});
    const auto s = out.str();
    CHECK(s.rfind("time_s,server,area,returned_count,account_ids\n", 0) == 0);
    CHECK(s.find(",3,") != std::string::npos);
    CHECK(s.find(",2,7;9\n") != std::string::npos);
}
