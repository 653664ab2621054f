#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ghostmap/experiment.hpp"
#include "ghostmap/scenarios.hpp"

using namespace ghostmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("ghostmap_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig small_world_config(const fs::path& out) {
    auto cfg = config_from_json(nlohmann::json::parse(R"({
      "scenario": "simulate-world", "seed": 7, "trials": 2,
      "params": {"duration_s": 400, "traffic_every_s": 60, "world": {
        "junctions": [{"id": "A", "x_mi": 0, "y_mi": 0}, {"id": "B", "x_mi": 2, "y_mi": 0}],
        "segments": [{"id": "ab", "class": "local", "from": "A", "to": "B"}],
        "vehicles": [{"id": "car", "route": ["ab"], "account_creation_time": 11},
                     {"id": "ghost", "kind": "ghost", "route": ["ab"], "speed_script": [[0, 5]],
                      "loop_period_s": 300, "account_creation_time": 12}]}}})"));
    cfg.output_dir = out.string();
    return cfg;
}

}  // namespace

TEST_CASE("config round-trips through json") {
    ExperimentConfig c;
    c.scenario = "persistent-jam";
    c.seed = 99;
    c.trials = 4;
    c.output_dir = "out/x";
    c.params = {{"ghost_count", 12}, {"split", "threshold"}};
    CHECK(config_from_json(to_json(c)) == c);
    CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
    const auto minimal = config_from_json(nlohmann::json{{"scenario", "aggregation-sweep"}});
    CHECK(minimal.trials == 1);
    CHECK(minimal.params.is_object());
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"scenario", "x"}, {"bogus", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seed", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"scenario", "x"}, {"trials", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"scenario", "x"}, {"params", 3}}), std::invalid_argument);
    CHECK_THROWS(config_from_json(nlohmann::json::array()));
}

TEST_CASE("unknown scenario or parameter is rejected before anything is written") {
    TempDir tmp;
    ExperimentConfig c;
    c.scenario = "no-such-thing";
    c.output_dir = tmp.path.string();
    CHECK_THROWS_AS(run_scenario(c), std::invalid_argument);
    c.scenario = "aggregation-sweep";
    c.params = {{"tolerence", 1e-9}};
    CHECK_THROWS_AS(run_scenario(c), std::invalid_argument);
    c.params = {{"tolerance", "tiny"}};
    CHECK_THROWS_AS(run_scenario(c), std::invalid_argument);
    CHECK_FALSE(fs::exists(tmp.path / "aggregation-sweep" / "manifest.json"));
}

TEST_CASE("scenario catalog") {
    const auto& cat = scenario_catalog();
    std::vector<std::string> names;
    for (const auto& s : cat) {
        names.push_back(s.name);
        CHECK_FALSE(s.description.empty());
    }
    for (const char* want : {"aggregation-sweep", "persistent-jam", "downsample-converge", "track-highway",
                             "track-city", "auc-vs-attack-edges", "seeds-sweep", "fp-fn-sweep", "small-groups",
                             "cost-curve", "simulate-world", "detect"}) {
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
    }
}

TEST_CASE("aggregation sweep run writes trials, manifest and csv") {
    TempDir tmp;
    ExperimentConfig c;
    c.scenario = "aggregation-sweep";
    c.trials = 2;
    c.output_dir = tmp.path.string();
    const auto out = run_scenario(c);
    CHECK(out.all_pass());
    CHECK(out.directory == tmp.path / "aggregation-sweep");
    CHECK(fs::exists(out.directory / "trial_0000.json"));
    CHECK(fs::exists(out.directory / "trial_0001.json"));
    CHECK(fs::exists(out.directory / "aggregation_sweep.csv"));
    const auto manifest = nlohmann::json::parse(slurp(out.directory / "manifest.json"));
    CHECK(manifest["scenario"] == "aggregation-sweep");
    CHECK(manifest["trial_files"].size() == 2);
    CHECK(manifest["config"]["params"].contains("tolerance"));  // effective values, defaults included
    const auto trial = nlohmann::json::parse(slurp(out.directory / "trial_0001.json"));
    CHECK(trial["seed"] == derive_seed(1, 1));
    CHECK(trial["metrics"].contains("max_abs_error"));
}

TEST_CASE("reruns are byte-identical, whatever the output directory") {
    TempDir a, b;
    auto ca = small_world_config(a.path);
    auto cb = small_world_config(b.path);
    const auto ra = run_scenario(ca);
    const auto rb = run_scenario(cb);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(ra.directory)) {
        const auto name = entry.path().filename();
        if (name == "manifest.json") continue;
        CHECK(slurp(entry.path()) == slurp(rb.directory / name));
        ++compared;
    }
    CHECK(compared >= 6);  // 2 trials x (json, gps, traffic)
    TempDir c;
    auto cc = small_world_config(c.path);
    cc.seed = 8;
    const auto rc = run_scenario(cc);
    CHECK(slurp(ra.directory / "trial_0000.json") != slurp(rc.directory / "trial_0000.json"));
}

TEST_CASE("persistent jam run passes its checks") {
    TempDir tmp;
    ExperimentConfig c;
    c.scenario = "persistent-jam";
    c.trials = 1;
    c.output_dir = tmp.path.string();
    const auto out = run_scenario(c);
    for (const auto& ch : out.checks) {
        INFO(ch.name << ": " << ch.detail);
        if (ch.required) CHECK(ch.pass);
    }
    CHECK(fs::exists(out.directory / "trial_0000_segment_state.csv"));
}

TEST_CASE("summarize groups metrics and counts violations") {
    TempDir tmp;
    ExperimentConfig c;
    c.scenario = "aggregation-sweep";
    c.trials = 3;
    c.output_dir = tmp.path.string();
    run_scenario(c);
    run_scenario(small_world_config(tmp.path));
    const auto s = summarize(tmp.path);
    CHECK(s.runs == 2);
    CHECK(s.violations() == 0);
    bool found = false;
    for (const auto& m : s.metrics) {
        if (m.scenario == "aggregation-sweep" && m.metric == "max_abs_error") {
            found = true;
            CHECK(m.n == 3);
            CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-9));
        }
    }
    CHECK(found);
    std::ostringstream text;
    print_summary(text, s);
    CHECK(text.str().find("2 run(s), 0 violation(s)") != std::string::npos);

    // A failing required check shows up as a violation.
    auto manifest = nlohmann::json::parse(slurp(tmp.path / "aggregation-sweep" / "manifest.json"));
    manifest["checks"][0]["pass"] = false;
    std::ofstream(tmp.path / "aggregation-sweep" / "manifest.json") << manifest.dump(2);
    CHECK(summarize(tmp.path).violations() == 1);

    fs::remove(tmp.path / "aggregation-sweep" / "trial_0002.json");
    CHECK_THROWS(summarize(tmp.path));
}

TEST_CASE("summarize refuses empty or missing directories") {
    TempDir tmp;
    CHECK_THROWS(summarize(tmp.path));
    CHECK_THROWS(summarize(tmp.path / "absent"));
}

TEST_CASE("geometric grid") {
    const auto g = geometric_grid(2000, 1.2, 5000);
    CHECK(g == std::vector<double>{2000, 2400, 2880, 3456, 4147, 4977});
    CHECK(geometric_grid(10, 2, 10) == std::vector<double>{10});
    CHECK_THROWS(geometric_grid(10, 1.0, 100));
    CHECK_THROWS(geometric_grid(10, 2, 5));
    const auto small = geometric_grid(1, 1.1, 5);
    CHECK(std::adjacent_find(small.begin(), small.end()) == small.end());  // rounding never repeats
}

TEST_CASE("least squares line") {
    const auto exact = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(exact.slope == doctest::Approx(2.0));
    CHECK(exact.intercept == doctest::Approx(1.0));
    CHECK(exact.r2 == doctest::Approx(1.0));
    // hand-computed: x = 0,1,2; y = 0,2,1 -> slope 0.5, intercept 0.5, r2 = 0.25
    const auto noisy = fit_line({0, 1, 2}, {0, 2, 1});
    CHECK(noisy.slope == doctest::Approx(0.5));
    CHECK(noisy.intercept == doctest::Approx(0.5));
    CHECK(noisy.r2 == doctest::Approx(0.25));
    CHECK_THROWS(fit_line({1, 1}, {2, 3}));
}

TEST_CASE("cost levels pick the first grid point under each level") {
    const std::vector<double> grid{100, 200, 300};
    const std::vector<std::vector<double>> auc{{0.99, 0.97, 0.80}, {0.995, 0.99, 0.96}};
    const auto lv = cost_levels(auc, grid, {0.98, 0.9});
    REQUIRE(lv.size() == 2);
    CHECK(lv[0].required[0] == 200.0);
    CHECK(lv[0].required[1] == 300.0);
    CHECK(lv[0].reached_by_all());
    CHECK(lv[1].required[0] == 300.0);
    CHECK_FALSE(lv[1].required[1].has_value());
    CHECK_FALSE(lv[1].reached_by_all());
    CHECK_THROWS(cost_levels({{0.9}}, grid, {0.5}));
}
