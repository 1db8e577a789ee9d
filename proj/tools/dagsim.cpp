// dagsim command-line entry point.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dagsim/analysis.hpp"
#include "dagsim/config.hpp"
#include "dagsim/distribution.hpp"
#include "dagsim/engine.hpp"
#include "dagsim/output.hpp"
#include "dagsim/sweep.hpp"
#include "dagsim/topology_gen.hpp"

using namespace dagsim;

namespace {

template <typename Report, typename Writer>
void write_csv_file(const std::string& path, const Report& report, Writer writer)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    writer(out, report);
    if (!out) throw std::runtime_error("write failed: " + path);
}

int gen_topology(std::size_t nodes, const std::string& degree_path, const std::string& delay_path,
                 const std::string& malicious, std::uint64_t seed, const std::string& out_path)
{
    const auto degree = load_distribution(degree_path);
    const auto delay = load_distribution(delay_path);
    const PowerPlan plan = malicious.empty() ? PowerPlan{} : parse_power_plan(malicious, Strategy::MaliciousMaxFee);
    Rng rng(seed);
    const auto topology = build_topology(nodes, degree, delay, plan, rng);
    save_topology(out_path, topology);
    std::cout << "wrote " << out_path << ": " << topology.nodes.size() << " nodes, " << topology.links.size()
              << " links\n";
    return 0;
}

int simulate(const std::string& config_path, const std::string& topology_path, const std::string& prefix,
             std::optional<std::uint64_t> seed, bool quiet, bool full_dump)
{
    auto config = load_config(config_path);
    if (seed) config.rng_seed = *seed;
    auto topology = load_topology(topology_path);

    FileRunSink sink(prefix, !quiet);
    Simulation sim(std::move(config), std::move(topology), sink, topology_path);
    sim.set_full_mempool_dump(full_dump);
    const auto result = sim.run();
    if (result.status != RunStatus::Complete) {
        std::cerr << "dagsim: " << result.error << '\n';
        return 2;
    }
    return 0;
}

int analyze_collisions_cmd(const std::string& data, const std::string& csv_out, bool list_duplicates)
{
    const auto report = analyze_collisions(data, list_duplicates);
    write_collision_text(std::cout, report);
    if (!csv_out.empty()) write_csv_file(csv_out, report, write_collision_csv);
    return 0;
}

int analyze_profits_cmd(const std::string& data, double threshold, std::optional<std::uint64_t> reward,
                        const std::string& csv_out)
{
    const auto report = analyze_profits(data, threshold, reward);
    write_profit_text(std::cout, report);
    if (!csv_out.empty()) write_csv_file(csv_out, report, write_profit_csv);
    return 0;
}

int sweep(const std::string& spec_path, const std::string& out_dir, std::optional<std::size_t> workers)
{
    auto spec = load_sweep_spec(spec_path);
    if (workers) spec.workers = *workers;
    std::cout << "sweep: " << spec.run_count() << " runs on " << spec.workers << " worker(s)\n";
    const auto result = run_experiment_sweep(spec, out_dir);
    std::size_t failed = 0;
    for (const auto& run : result.runs) {
        if (run.ok) continue;
        ++failed;
        std::cerr << "run " << run.index << " failed: " << run.error << '\n';
    }
    std::cout << "wrote " << out_dir << "/runs.csv and summary.csv (" << failed << " failed)\n";
    return failed == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete-event simulator for DAG-based proof-of-work networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kSimulatorVersion));

    std::size_t nodes = 0;
    std::string degree_path, delay_path, malicious, topo_out;
    std::uint64_t topo_seed = 1;
    auto* gen = app.add_subcommand("gen-topology", "generate a random connected topology");
    gen->add_option("--nodes", nodes, "number of miners")->required()->check(CLI::Range(2, 1 << 24));
    gen->add_option("--degree-dist", degree_path, "node degree distribution")->required()->check(CLI::ExistingFile);
    gen->add_option("--delay-dist", delay_path, "link delay distribution (ms)")->required()->check(CLI::ExistingFile);
    gen->add_option("--malicious", malicious, "malicious miners as id:power,...");
    gen->add_option("--seed", topo_seed, "rng seed");
    gen->add_option("--out", topo_out, "output topology file")->required();

    std::string config_path, topology_path, prefix;
    std::optional<std::uint64_t> sim_seed;
    bool quiet = false, full_dump = false;
    auto* sim = app.add_subcommand("simulate", "run one simulation");
    sim->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sim->add_option("--topology", topology_path, "topology file")->required()->check(CLI::ExistingFile);
    sim->add_option("--out-prefix", prefix, "output path prefix")->required();
    sim->add_option("--seed", sim_seed, "rng seed (overrides rng_seed in the config)");
    sim->add_flag("--quiet", quiet, "do not mirror progress to stdout");
    sim->add_flag("--full-dump", full_dump, "dump whole mempools if the run stops early");

    std::string coll_data, coll_csv;
    bool list_duplicates = false;
    auto* coll = app.add_subcommand("analyze-collisions", "count transactions included more than once");
    coll->add_option("data", coll_data, "<prefix>.data.csv")->required()->check(CLI::ExistingFile);
    coll->add_option("--csv-out", coll_csv, "also write the report as CSV");
    coll->add_flag("--list-duplicates", list_duplicates, "list every duplicated transaction");

    std::string prof_data, prof_csv;
    double threshold = 0.0;
    std::optional<std::uint64_t> reward;
    auto* prof = app.add_subcommand("analyze-profits", "fee and reward income per miner");
    prof->add_option("data", prof_data, "<prefix>.data.csv")->required()->check(CLI::ExistingFile);
    prof->add_option("--threshold", threshold, "miners below this power are merged into one row")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    prof->add_option("--block-reward", reward, "reward per block");
    prof->add_option("--csv-out", prof_csv, "also write the report as CSV");

    std::string spec_path, sweep_out;
    std::optional<std::size_t> workers;
    auto* sw = app.add_subcommand("sweep", "run a parameter sweep");
    sw->add_option("--spec", spec_path, "sweep spec file")->required()->check(CLI::ExistingFile);
    sw->add_option("--out-dir", sweep_out, "output directory")->required();
    sw->add_option("--workers", workers, "concurrent runs (overrides the spec)")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return gen_topology(nodes, degree_path, delay_path, malicious, topo_seed, topo_out);
        if (*sim) return simulate(config_path, topology_path, prefix, sim_seed, quiet, full_dump);
        if (*coll) return analyze_collisions_cmd(coll_data, coll_csv, list_duplicates);
        if (*prof) return analyze_profits_cmd(prof_data, threshold, reward, prof_csv);
        if (*sw) return sweep(spec_path, sweep_out, workers);
    } catch (const std::exception& e) {
        std::cerr << "dagsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
