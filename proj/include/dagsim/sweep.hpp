#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dagsim/output.hpp"
#include "dagsim/types.hpp"

namespace dagsim {

// Parameter grid for repeated runs over one topology. Each run gives
// `designated` miners `malicious_power` each; the first `malicious_count` of
// them are malicious, the others honest. The remaining power is split evenly.
struct SweepSpec {
    SimConfig base;
    Topology topology;
    std::vector<double> malicious_power{0.1};
    std::vector<std::size_t> malicious_count{1};
    std::size_t designated_count = 0; // 0 means max(malicious_count)
    std::vector<RandomAccess> variants{RandomAccess::Probe};
    std::size_t placements = 1;
    std::size_t seeds = 10;
    std::uint64_t seed_base = 1;
    std::optional<std::uint64_t> block_reward;
    std::size_t workers = 1;
    bool keep_outputs = true;

    std::size_t designated() const;
    std::size_t run_count() const;
};

// key=value file. `config=` and `topology=` paths are relative to the spec
// file's directory; without `topology=`, a graph is generated from `nodes`,
// `degree_dist`, `delay_dist` and `topology_seed`. `fixed_delay_ms`
// overrides every link delay. Any SimConfig key overrides the base config.
SweepSpec parse_sweep_spec(std::istream& in, const std::filesystem::path& base_dir);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

// Miner ids for one placement: nodes ranked by closeness of their degree to
// the median degree, placement p taking the p-th block of `count`.
std::vector<MinerId> placement_nodes(const Topology& topology, std::size_t count, std::size_t placement);

struct SweepRun {
    std::size_t index = 0;
    double malicious_power = 0.0;
    std::size_t malicious_count = 0;
    RandomAccess variant = RandomAccess::Probe;
    std::size_t placement = 0;
    std::uint64_t seed = 0;
    std::vector<MinerId> designated;

    bool ok = false;
    RunStatus status = RunStatus::Complete;
    std::string error;
    std::uint64_t blocks = 0;
    double malicious_profit_share = 0.0;     // summed over malicious miners
    double per_malicious_profit_share = 0.0; // mean over malicious miners
    double honest_designated_share = 0.0;    // mean over honest designated miners
    double duplication_rate = 0.0;
    std::uint64_t unique_count = 0;
    double effective_throughput = 0.0;
};

struct SweepSummaryRow {
    double malicious_power = 0.0;
    std::size_t malicious_count = 0;
    RandomAccess variant = RandomAccess::Probe;
    std::size_t runs_ok = 0;
    std::size_t runs_failed = 0;
    double malicious_profit_share = 0.0;
    double per_malicious_profit_share = 0.0;
    double honest_designated_share = 0.0;
    double duplication_rate = 0.0;
    double effective_throughput = 0.0;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    std::vector<SweepSummaryRow> summary;
};

// Runs every (power x count x variant x placement x seed) combination on
// `spec.workers` threads, writing run_NNNN.* files plus runs.csv and
// summary.csv into out_dir. A failing run is recorded and the sweep goes on.
SweepResult run_experiment_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

void write_sweep_runs_csv(std::ostream& out, const std::vector<SweepRun>& runs);
void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepSummaryRow>& summary);

} // namespace dagsim
