#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "dagsim/distribution.hpp"
#include "dagsim/random.hpp"
#include "dagsim/types.hpp"

namespace dagsim {

struct PowerAssignment {
    MinerId miner_id = 0;
    double power = 0.0;
    Strategy strategy = Strategy::MaliciousMaxFee;
};

// Explicitly assigned miners keep their power and strategy; every other
// miner is honest and gets an equal slice of the remaining power. An empty
// plan is the uniform assignment.
struct PowerPlan {
    std::vector<PowerAssignment> fixed;
};

// Parses "id:power,id:power,..." with every entry given `strategy`.
PowerPlan parse_power_plan(std::string_view text, Strategy strategy);

// Rewrites the nodes' power and strategy. Throws std::invalid_argument for
// unknown or repeated ids, powers outside [0,1], or a plan summing past 1.
void apply_power_plan(Topology& topology, const PowerPlan& plan);

// Random connected graph whose node degrees follow `degree_dist`
// (configuration-model pairing, then double-edge-swap repair of self-loops
// and multi-edges, then the fewest extra links needed to join components).
// Sampled degrees above node_count-1 are capped there. Link delays in
// milliseconds are drawn from `delay_dist`.
// Throws std::invalid_argument on bad inputs and std::runtime_error if the
// result is still disconnected.
Topology build_topology(std::size_t node_count, const DiscreteDistribution& degree_dist,
                        const DiscreteDistribution& delay_dist, const PowerPlan& plan, Rng& rng);

} // namespace dagsim
