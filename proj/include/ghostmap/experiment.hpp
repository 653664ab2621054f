#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ghostmap {

struct ExperimentConfig {
    std::string scenario;
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    std::string output_dir = "results";
    /// Scenario-specific overrides; anything left out takes the default.
    nlohmann::json params = nlohmann::json::object();

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ScenarioInfo {
    std::string name;
    std::string description;
};

const std::vector<ScenarioInfo>& scenario_catalog();

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
    /// Informational checks are reported but never fail a run.
    bool required = true;
};

struct RunOutcome {
    std::filesystem::path directory;
    std::vector<Check> checks;

    [[nodiscard]] bool all_pass() const;
};

/// Runs config.trials trials of the scenario and writes them, plus a
/// manifest and scenario-level CSVs, under <output_dir>/<scenario>/.
/// Trial i uses derive_seed(config.seed, i). Throws std::invalid_argument
/// for unknown scenarios and unknown or malformed parameters.
RunOutcome run_scenario(const ExperimentConfig& config);

struct MetricSummary {
    std::string scenario;
    std::string metric;
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct Summary {
    std::vector<MetricSummary> metrics;
    std::vector<std::pair<std::string, Check>> checks;
    std::size_t runs = 0;

    [[nodiscard]] std::size_t violations() const;
};

/// Reads every manifest.json below `dir`. Throws when there is none or when a
/// trial file a manifest lists is missing.
Summary summarize(const std::filesystem::path& dir);
void print_summary(std::ostream& out, const Summary& summary);

}  // namespace ghostmap
