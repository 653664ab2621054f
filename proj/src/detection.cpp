#include "ghostmap/detection.hpp"

namespace ghostmap {

DetectionRun run_detection(const ProximityGraph& honest, const DetectionSetup& setup, std::uint64_t seed) {
    validate(setup.plan);
    Rng region_rng(derive_seed(seed, 1));
    Rng attach_rng(derive_seed(seed, 2));
    Rng trusted_rng(derive_seed(seed, 3));
    Rng visit_rng(derive_seed(seed, 4));

    DetectionRun run;
    const auto region = build_sybil_region(setup.plan, region_rng);
    run.graph = attach_gateways(honest, region, setup.plan, attach_rng);
    run.trusted = seed_trusted(run.graph, setup.trusted, setup.placement, trusted_rng);
    if (setup.trusted_visits) add_trusted_visits(run.graph, setup.trusted_visits, visit_rng);
    run.trust = propagate_trust(run.graph, run.trusted, setup.rank);
    run.ranked = rank_nodes(run.graph, run.trust);
    run.metrics = evaluate_detection(run.ranked, run.trust, setup.cutoff);
    return run;
}

}  // namespace ghostmap
