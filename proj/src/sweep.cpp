#include "dagsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "dagsim/analysis.hpp"
#include "dagsim/config.hpp"
#include "dagsim/distribution.hpp"
#include "dagsim/engine.hpp"
#include "dagsim/topology_gen.hpp"
#include "text_util.hpp"

namespace dagsim {

std::size_t SweepSpec::designated() const
{
    const std::size_t most = malicious_count.empty() ? 0 : *std::max_element(malicious_count.begin(), malicious_count.end());
    return std::max(designated_count, most);
}

std::size_t SweepSpec::run_count() const
{
    return malicious_power.size() * malicious_count.size() * variants.size() * placements * seeds;
}

namespace {

template <typename T>
std::vector<T> parse_list(std::string_view value, std::string_view key)
{
    std::vector<T> out;
    for (const auto item : text::split(value, ',')) out.push_back(text::parse<T>(item, key));
    return out;
}

bool parse_flag(std::string_view value)
{
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("expected true/false");
}

} // namespace

SweepSpec parse_sweep_spec(std::istream& in, const std::filesystem::path& base_dir)
{
    SweepSpec spec;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> topology_path;
    std::optional<std::filesystem::path> degree_path;
    std::optional<std::filesystem::path> delay_path;
    std::size_t nodes = 0;
    std::uint64_t topology_seed = 1;
    std::optional<std::uint32_t> fixed_delay;

    auto resolve = [&](std::string_view p) {
        std::filesystem::path path{std::string(p)};
        return path.is_absolute() ? path : base_dir / path;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = text::strip_comment(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const auto where = "sweep spec line " + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw std::runtime_error(where + "expected key=value");
        const auto key = text::trim(body.substr(0, eq));
        const auto value = text::trim(body.substr(eq + 1));
        try {
            if (key == "config") config_path = resolve(value);
            else if (key == "topology") topology_path = resolve(value);
            else if (key == "degree_dist") degree_path = resolve(value);
            else if (key == "delay_dist") delay_path = resolve(value);
            else if (key == "nodes") nodes = text::parse<std::size_t>(value, key);
            else if (key == "topology_seed") topology_seed = text::parse<std::uint64_t>(value, key);
            else if (key == "fixed_delay_ms") fixed_delay = text::parse<std::uint32_t>(value, key);
            else if (key == "malicious_power") spec.malicious_power = parse_list<double>(value, key);
            else if (key == "malicious_count") spec.malicious_count = parse_list<std::size_t>(value, key);
            else if (key == "designated_count") spec.designated_count = text::parse<std::size_t>(value, key);
            else if (key == "variant") {
                spec.variants.clear();
                for (const auto item : text::split(value, ',')) {
                    const auto v = parse_random_access(item);
                    if (!v) throw std::invalid_argument("unknown variant '" + std::string(item) + "'");
                    spec.variants.push_back(*v);
                }
            } else if (key == "placements") spec.placements = text::parse<std::size_t>(value, key);
            else if (key == "seeds") spec.seeds = text::parse<std::size_t>(value, key);
            else if (key == "seed_base") spec.seed_base = text::parse<std::uint64_t>(value, key);
            else if (key == "block_reward") spec.block_reward = text::parse<std::uint64_t>(value, key);
            else if (key == "workers") spec.workers = text::parse<std::size_t>(value, key);
            else if (key == "keep_outputs") spec.keep_outputs = parse_flag(value);
            else overrides.emplace_back(std::string(key), std::string(value));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + e.what());
        }
    }

    if (config_path) spec.base = load_config(*config_path);
    for (const auto& [key, value] : overrides) {
        try {
            if (!apply_config_key(spec.base, key, value))
                throw std::runtime_error("sweep spec: unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("sweep spec: " + key + ": " + e.what());
        }
    }

    if (topology_path) {
        spec.topology = load_topology(*topology_path);
    } else {
        if (nodes < 2 || !degree_path || !delay_path)
            throw std::runtime_error("sweep spec needs topology= or nodes/degree_dist/delay_dist");
        Rng rng(topology_seed);
        spec.topology = build_topology(nodes, load_distribution(*degree_path), load_distribution(*delay_path), {}, rng);
    }
    if (fixed_delay)
        for (auto& l : spec.topology.links) l.delay_ms = *fixed_delay;
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep spec " + path.string());
    return parse_sweep_spec(in, path.parent_path());
}

std::vector<MinerId> placement_nodes(const Topology& topology, std::size_t count, std::size_t placement)
{
    if (count == 0) return {};
    const std::size_t n = topology.nodes.size();
    if ((placement + 1) * count > n) throw std::invalid_argument("not enough nodes for the requested placements");

    const auto adj = build_adjacency(topology);
    std::vector<std::size_t> degrees(n);
    for (std::size_t i = 0; i < n; ++i) degrees[i] = adj.degree(static_cast<MinerId>(i));
    auto sorted = degrees;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    const auto median = static_cast<std::int64_t>(sorted[n / 2]);

    std::vector<MinerId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<MinerId>(i);
    std::stable_sort(order.begin(), order.end(), [&](MinerId a, MinerId b) {
        return std::abs(static_cast<std::int64_t>(degrees[a]) - median) <
               std::abs(static_cast<std::int64_t>(degrees[b]) - median);
    });
    return {order.begin() + static_cast<std::ptrdiff_t>(placement * count),
            order.begin() + static_cast<std::ptrdiff_t>((placement + 1) * count)};
}

namespace {

void execute_run(const SweepSpec& spec, SweepRun& run, const std::filesystem::path& out_dir)
{
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", run.index);
    const auto prefix = out_dir / name;
    const auto paths = OutputPaths::from_prefix(prefix);

    try {
        Topology topology = spec.topology;
        PowerPlan plan;
        for (std::size_t k = 0; k < run.designated.size(); ++k)
            plan.fixed.push_back({run.designated[k], run.malicious_power,
                                  k < run.malicious_count ? Strategy::MaliciousMaxFee : Strategy::HonestRandom});
        apply_power_plan(topology, plan);

        SimConfig config = spec.base;
        config.rng_seed = run.seed;
        config.random_access_variant = run.variant;

        RunResult result;
        {
            FileRunSink sink(prefix, false);
            Simulation sim(config, std::move(topology), sink, "sweep");
            result = sim.run();
        }
        run.status = result.status;
        run.blocks = result.blocks_mined;
        if (result.status != RunStatus::Complete) {
            run.error = result.error;
        } else {
            const auto collisions = analyze_collisions(paths.data);
            const double threshold = run.designated.empty() ? 1.0 : run.malicious_power;
            const auto profits = analyze_profits(paths.data, threshold, spec.block_reward);
            std::map<MinerId, double> share;
            for (const auto& row : profits.rows)
                if (row.miner_id) share[*row.miner_id] = row.profit_share;

            std::size_t honest = 0;
            for (std::size_t k = 0; k < run.designated.size(); ++k) {
                const double s = share.count(run.designated[k]) ? share[run.designated[k]] : 0.0;
                if (k < run.malicious_count) {
                    run.malicious_profit_share += s;
                } else {
                    run.honest_designated_share += s;
                    ++honest;
                }
            }
            if (run.malicious_count > 0)
                run.per_malicious_profit_share = run.malicious_profit_share / static_cast<double>(run.malicious_count);
            if (honest > 0) run.honest_designated_share /= static_cast<double>(honest);
            run.duplication_rate = collisions.duplication_rate;
            run.unique_count = collisions.unique_count;
            run.effective_throughput = collisions.effective_throughput.value_or(0.0);
            run.ok = true;
        }
    } catch (const std::exception& e) {
        run.ok = false;
        run.error = e.what();
    }

    if (!spec.keep_outputs) {
        std::error_code ec;
        std::filesystem::remove(paths.data, ec);
        std::filesystem::remove(paths.meta, ec);
        std::filesystem::remove(paths.progress, ec);
    }
}

std::vector<SweepSummaryRow> summarize(const SweepSpec& spec, const std::vector<SweepRun>& runs)
{
    std::vector<SweepSummaryRow> summary;
    const std::size_t per_group = spec.placements * spec.seeds;
    for (std::size_t g = 0; per_group > 0 && g * per_group < runs.size(); ++g) {
        SweepSummaryRow row;
        const auto& first = runs[g * per_group];
        row.malicious_power = first.malicious_power;
        row.malicious_count = first.malicious_count;
        row.variant = first.variant;
        for (std::size_t i = g * per_group; i < (g + 1) * per_group; ++i) {
            const auto& r = runs[i];
            if (!r.ok) {
                ++row.runs_failed;
                continue;
            }
            ++row.runs_ok;
            row.malicious_profit_share += r.malicious_profit_share;
            row.per_malicious_profit_share += r.per_malicious_profit_share;
            row.honest_designated_share += r.honest_designated_share;
            row.duplication_rate += r.duplication_rate;
            row.effective_throughput += r.effective_throughput;
        }
        if (row.runs_ok > 0) {
            const auto k = static_cast<double>(row.runs_ok);
            row.malicious_profit_share /= k;
            row.per_malicious_profit_share /= k;
            row.honest_designated_share /= k;
            row.duplication_rate /= k;
            row.effective_throughput /= k;
        }
        summary.push_back(row);
    }
    return summary;
}

} // namespace

SweepResult run_experiment_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const std::size_t designated = spec.designated();

    std::vector<std::vector<MinerId>> placements;
    for (std::size_t p = 0; p < spec.placements; ++p) placements.push_back(placement_nodes(spec.topology, designated, p));

    SweepResult result;
    result.runs.reserve(spec.run_count());
    for (const double power : spec.malicious_power)
        for (const std::size_t count : spec.malicious_count)
            for (const RandomAccess variant : spec.variants)
                for (std::size_t p = 0; p < spec.placements; ++p)
                    for (std::size_t s = 0; s < spec.seeds; ++s) {
                        SweepRun run;
                        run.index = result.runs.size();
                        run.malicious_power = power;
                        run.malicious_count = count;
                        run.variant = variant;
                        run.placement = p;
                        run.seed = spec.seed_base + s;
                        run.designated = placements[p];
                        result.runs.push_back(std::move(run));
                    }

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < result.runs.size(); i = cursor++) execute_run(spec, result.runs[i], out_dir);
    };
    const std::size_t threads = std::clamp<std::size_t>(spec.workers, 1, std::max<std::size_t>(1, result.runs.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    result.summary = summarize(spec, result.runs);
    {
        std::ofstream out(out_dir / "runs.csv");
        write_sweep_runs_csv(out, result.runs);
    }
    {
        std::ofstream out(out_dir / "summary.csv");
        write_sweep_summary_csv(out, result.summary);
    }
    return result;
}

void write_sweep_runs_csv(std::ostream& out, const std::vector<SweepRun>& runs)
{
    out << "run,malicious_power,malicious_count,variant,placement,seed,designated,status,error,blocks,"
           "malicious_profit_share,per_malicious_profit_share,honest_designated_share,duplication_rate,"
           "unique_count,effective_throughput\n";
    for (const auto& r : runs) {
        std::string designated;
        for (const auto id : r.designated) designated += (designated.empty() ? "" : " ") + std::to_string(id);
        std::string error = r.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        out << r.index << ',' << text::format_double(r.malicious_power) << ',' << r.malicious_count << ','
            << to_string(r.variant) << ',' << r.placement << ',' << r.seed << ',' << designated << ','
            << (r.ok ? "ok" : "failed") << ',' << error << ',' << r.blocks << ','
            << text::format_double(r.malicious_profit_share) << ',' << text::format_double(r.per_malicious_profit_share)
            << ',' << text::format_double(r.honest_designated_share) << ',' << text::format_double(r.duplication_rate)
            << ',' << r.unique_count << ',' << text::format_double(r.effective_throughput) << '\n';
    }
}

void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepSummaryRow>& summary)
{
    out << "malicious_power,malicious_count,variant,runs_ok,runs_failed,malicious_profit_share,"
           "per_malicious_profit_share,honest_designated_share,duplication_rate,effective_throughput\n";
    for (const auto& r : summary) {
        out << text::format_double(r.malicious_power) << ',' << r.malicious_count << ',' << to_string(r.variant) << ','
            << r.runs_ok << ',' << r.runs_failed << ',' << text::format_double(r.malicious_profit_share) << ','
            << text::format_double(r.per_malicious_profit_share) << ','
            << text::format_double(r.honest_designated_share) << ',' << text::format_double(r.duplication_rate)
            << ',' << text::format_double(r.effective_throughput) << '\n';
    }
}

} // namespace dagsim
