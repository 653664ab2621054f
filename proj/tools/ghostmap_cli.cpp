// ghostmap: run experiment configs and summarize their results.

#include <cstdlib>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ghostmap/experiment.hpp"

namespace {

constexpr const char* kOutEnv = "GHOSTMAP_OUT";

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
    auto config = ghostmap::load_config(config_path);
    if (seed) config.seed = *seed;
    // --out beats the environment, which beats the config file
    if (out) {
        config.output_dir = *out;
    } else if (const char* env = std::getenv(kOutEnv); env && *env) {
        config.output_dir = env;
    }
    const auto outcome = ghostmap::run_scenario(config);
    std::cout << "wrote " << outcome.directory.string() << '\n';
    for (const auto& c : outcome.checks) {
        std::cout << (c.pass ? "PASS" : c.required ? "FAIL" : "info") << "  " << c.name << " (" << c.detail
                  << ")\n";
    }
    return outcome.all_pass() ? 0 : 1;
}

int cmd_summarize(const std::string& dir) {
    const auto summary = ghostmap::summarize(dir);
    ghostmap::print_summary(std::cout, summary);
    return summary.violations() == 0 ? 0 : 1;
}

int cmd_list() {
    for (const auto& s : ghostmap::scenario_catalog()) {
        std::cout << s.name << "\t" << s.description << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ghostmap: crowdsourced navigation attack simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override the master seed");
    run->add_option("--out", out, std::string("output directory (default: $") + kOutEnv + " or the config's)");

    std::string results_dir;
    auto* sum = app.add_subcommand("summarize", "aggregate the results under a directory");
    sum->add_option("dir", results_dir, "results directory")->required();

    auto* list = app.add_subcommand("list-scenarios", "print the known scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out);
        if (sum->parsed()) return cmd_summarize(results_dir);
        if (list->parsed()) return cmd_list();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
