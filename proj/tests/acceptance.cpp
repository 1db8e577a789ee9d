// Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
// exits non-zero if any failed. Pass criterion numbers to run a subset.
// Criterion 10 lives in scale_smoke.cpp.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "dagsim/analysis.hpp"
#include "dagsim/config.hpp"
#include "dagsim/engine.hpp"
#include "dagsim/mempool.hpp"
#include "dagsim/sweep.hpp"
#include "dagsim/topology_gen.hpp"
#include "support.hpp"

using namespace dagsim;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kData = DAGSIM_DATA_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

// The 100-node graph shared by criteria 2-6 and 9.
Topology hundred_nodes()
{
    Rng rng(100);
    return build_topology(100, load_distribution(kData / "degree_dist.txt"), load_distribution(kData / "delay_dist.txt"),
                          {}, rng);
}

std::size_t workers()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

Outcome check_runtime(Outcome o, double elapsed, double budget)
{
    o.detail += "; " + fmt(elapsed, 1) + " s of " + fmt(budget, 0) + " s";
    if (elapsed >= budget) {
        o.pass = false;
        o.detail += " (over budget)";
    }
    return o;
}

Outcome clock_means()
{
    const auto t0 = Clock::now();
    Outcome o{true, ""};
    std::uint64_t seed = 1;
    for (const double lambda : {600.0, 20.0}) {
        const BlockClock clock(lambda, testing::uniform_nodes(100));
        Rng rng(seed++);
        double sum = 0;
        for (int i = 0; i < 10000; ++i) sum += schedule_next_block(clock, rng).delta;
        const double mean = sum / 10000;
        const bool ok = std::abs(mean - lambda) <= 0.05 * lambda;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : ", ") + std::string("lambda ") + fmt(lambda, 0) + " mean " + fmt(mean, 2);
    }
    return check_runtime(o, seconds_since(t0), 1);
}

Outcome fair_baseline()
{
    const auto t0 = Clock::now();
    auto topo = hundred_nodes();
    for (auto& l : topo.links) l.delay_ms = 1;
    SimConfig c;
    c.block_interval_lambda = 20;
    c.total_blocks = 10000;
    c.block_size = 10;
    c.mempool_capacity = 1000;
    c.initial_tx_count = 1000;
    c.txgen_count_range = {100, 200};
    c.txgen_delay_range = {60, 160};
    c.rng_seed = 1;
    testing::MemorySink sink;
    Simulation sim(c, topo, sink);
    if (sim.run().status != RunStatus::Complete) return {false, "run stopped early"};

    std::vector<double> count(100, 0);
    for (const auto& b : sink.blocks) ++count[b.miner];
    std::size_t inside = 0;
    double worst = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const double p = topo.nodes[i].mining_power;
        const double n = static_cast<double>(c.total_blocks);
        const double z = std::abs(count[i] - n * p) / std::sqrt(n * p * (1 - p));
        worst = std::max(worst, z);
        inside += z <= 2.0 ? 1 : 0;
    }
    return check_runtime({inside >= 95, std::to_string(inside) + "/100 miners within 2 sd, max |z| " + fmt(worst, 2)},
                         seconds_since(t0), 60);
}

SimConfig table2(std::uint64_t blocks)
{
    auto c = load_config(kData / "table2.cfg");
    c.total_blocks = blocks;
    return c;
}

Outcome malicious_advantage()
{
    const auto t0 = Clock::now();
    SweepSpec spec;
    spec.base = table2(2000);
    spec.topology = hundred_nodes();
    spec.malicious_power = {0.1, 0.2, 0.3};
    spec.malicious_count = {1};
    spec.designated_count = 1;
    spec.seeds = 10;
    spec.workers = workers();
    spec.keep_outputs = false;
    testing::TempDir dir("accept_c3");
    const auto result = run_experiment_sweep(spec, dir.path());

    Outcome o{true, ""};
    for (const auto& row : result.summary) {
        const double gap = row.malicious_profit_share - row.malicious_power;
        o.pass = o.pass && row.runs_failed == 0 && gap > 0;
        o.detail += (o.detail.empty() ? "" : ", ") + std::string("power ") + fmt(row.malicious_power, 1) + " share " +
                    fmt(row.malicious_profit_share) + " gap " + fmt(gap);
        if (row.runs_failed) o.detail += " (" + std::to_string(row.runs_failed) + " failed)";
    }
    return check_runtime(o, seconds_since(t0), 600);
}

struct CompetitionRuns {
    SweepResult result;
    double elapsed = 0;
};

const CompetitionRuns& competition_runs()
{
    static const CompetitionRuns runs = [] {
        const auto t0 = Clock::now();
        SweepSpec spec;
        spec.base = table2(1000);
        spec.topology = hundred_nodes();
        spec.malicious_power = {0.1};
        spec.malicious_count = {1, 2, 3, 4};
        spec.designated_count = 4;
        spec.seeds = 10;
        spec.workers = workers();
        spec.keep_outputs = false;
        testing::TempDir dir("accept_c4");
        CompetitionRuns r;
        r.result = run_experiment_sweep(spec, dir.path());
        r.elapsed = seconds_since(t0);
        return r;
    }();
    return runs;
}

Outcome monotone_over_count(const std::function<double(const SweepSummaryRow&)>& value, bool non_increasing,
                            double budget)
{
    const auto& runs = competition_runs();
    Outcome o{true, ""};
    for (std::size_t i = 0; i < runs.result.summary.size(); ++i) {
        const auto& row = runs.result.summary[i];
        const double v = value(row);
        o.detail += (i ? ", " : "") + std::to_string(row.malicious_count) + ": " + fmt(v, 5);
        o.pass = o.pass && row.runs_failed == 0;
        if (i > 0) {
            const double prev = value(runs.result.summary[i - 1]);
            o.pass = o.pass && (non_increasing ? v <= prev : v >= prev);
        }
    }
    return check_runtime(o, runs.elapsed, budget);
}

Outcome malicious_competition()
{
    return monotone_over_count([](const SweepSummaryRow& r) { return r.per_malicious_profit_share; }, true, 900);
}

Outcome collision_degradation()
{
    return monotone_over_count([](const SweepSummaryRow& r) { return r.duplication_rate; }, false, 900);
}

Outcome variant_comparison()
{
    const auto t0 = Clock::now();
    SweepSpec spec;
    spec.base = table2(1000);
    spec.topology = hundred_nodes();
    for (auto& l : spec.topology.links) l.delay_ms = 5000;
    spec.malicious_power = {0.1};
    spec.malicious_count = {2};
    spec.designated_count = 2;
    spec.variants = {RandomAccess::Probe, RandomAccess::Begin, RandomAccess::EqualKey};
    spec.seeds = 10;
    spec.workers = workers();
    spec.keep_outputs = false;
    testing::TempDir dir("accept_c6");
    const auto result = run_experiment_sweep(spec, dir.path());

    std::map<RandomAccess, double> rate;
    bool failed = false;
    for (const auto& row : result.summary) {
        rate[row.variant] = row.duplication_rate;
        failed = failed || row.runs_failed > 0;
    }
    const double probe = rate[RandomAccess::Probe];
    const double eq_ratio = rate[RandomAccess::EqualKey] / probe;
    const double begin_ratio = rate[RandomAccess::Begin] / probe;
    Outcome o{!failed && eq_ratio >= 2.0 && std::abs(begin_ratio - 1.0) <= 0.25,
              "probe " + fmt(probe, 5) + ", begin " + fmt(rate[RandomAccess::Begin], 5) + " (x" + fmt(begin_ratio, 2) +
                  "), equal_key " + fmt(rate[RandomAccess::EqualKey], 5) + " (x" + fmt(eq_ratio, 2) + ")"};
    return check_runtime(o, seconds_since(t0), 600);
}

Outcome mempool_oracle()
{
    const auto t0 = Clock::now();
    constexpr std::size_t capacity = 1000;
    Mempool pool(capacity, 42);
    testing::NaiveMempool naive(capacity);
    Rng rng(7);
    TxId next_id = 0;
    std::vector<TxId> ids; // possibly stale, used to pick removal targets
    std::size_t op = 0;
    auto mismatch = [&](const std::string& what) { return Outcome{false, "op " + std::to_string(op) + ": " + what}; };

    for (; op < 100000; ++op) {
        const auto kind = uniform_int(rng, 0, 9);
        if (kind < 5) {
            if (pool.size() == capacity) {
                if (naive.size() != capacity) return mismatch("fullness differs");
                continue;
            }
            const Transaction tx{next_id++, static_cast<Fee>(uniform_int(rng, 1, 50))};
            pool.insert(tx);
            naive.insert(tx);
            ids.push_back(tx.id);
        } else if (kind < 8) {
            const TxId id = ids.empty() || uniform_int(rng, 0, 9) == 0 ? next_id + 5 : ids[uniform_int(rng, 0, ids.size() - 1)];
            if (pool.remove(id) != naive.remove(id)) return mismatch("remove result differs");
        } else if (kind == 8) {
            const std::size_t k = std::min<std::size_t>(pool.size(), uniform_int(rng, 0, 20));
            pool.evict_lowest(k);
            naive.evict_lowest(k);
        } else {
            const std::size_t k = std::min<std::size_t>(pool.size(), uniform_int(rng, 0, 20));
            if (pool.take_top_fee(k) != naive.take_top_fee(k)) return mismatch("take_top_fee differs");
        }
        if (pool.size() != naive.size()) return mismatch("size differs");
        try {
            pool.audit();
        } catch (const std::logic_error& e) {
            return mismatch(std::string("audit: ") + e.what());
        }
        if (op % 100 == 0 && pool.sorted_ascending() != naive.sorted_ascending()) return mismatch("contents differ");
    }
    if (pool.sorted_ascending() != naive.sorted_ascending()) return mismatch("final contents differ");
    return check_runtime({true, "100000 ops agree, audit clean after each"}, seconds_since(t0), 10);
}

// Best of three timings, nanoseconds per call.
double time_per_op(const std::function<void()>& fn, std::size_t calls)
{
    double best = 1e300;
    for (int trial = 0; trial < 3; ++trial) {
        const auto t0 = Clock::now();
        for (std::size_t i = 0; i < calls; ++i) fn();
        best = std::min(best, seconds_since(t0) * 1e9 / static_cast<double>(calls));
    }
    return best;
}

Outcome complexity()
{
    const auto t0 = Clock::now();
    std::map<std::size_t, double> top, probe;
    for (const std::size_t n : {std::size_t{10000}, std::size_t{100000}}) {
        Mempool pool(n, 11, 2 * n); // load factor 0.5 at both sizes
        Rng fill(n);
        for (TxId id = 0; id < n; ++id) pool.insert({id, static_cast<Fee>(uniform_int(fill, 1, 1000000))});
        volatile Fee sink = 0;
        top[n] = time_per_op([&] { sink = sink + pool.take_top_fee(1)[0].fee; }, 2000000);
        Rng rng(3);
        probe[n] = time_per_op([&] { sink = sink + pool.select_random(rng, RandomAccess::Probe).fee; }, 2000000);
    }
    const double top_ratio = top[100000] / top[10000];
    const double probe_change = std::abs(probe[100000] / probe[10000] - 1.0);
    Outcome o{top_ratio < 2.0 && probe_change < 0.5,
              "take_top_fee(1) " + fmt(top[10000], 1) + " -> " + fmt(top[100000], 1) + " ns (x" + fmt(top_ratio, 2) +
                  "), probe " + fmt(probe[10000], 1) + " -> " + fmt(probe[100000], 1) + " ns (" +
                  fmt(probe_change * 100, 1) + "% change)"};
    return check_runtime(o, seconds_since(t0), 60);
}

void run_to_files(const SimConfig& c, const Topology& t, const std::filesystem::path& prefix)
{
    FileRunSink sink(prefix, false);
    Simulation sim(c, t, sink, "acceptance");
    sim.run();
}

Outcome determinism()
{
    const auto t0 = Clock::now();
    auto c = load_config(kData / "small.cfg");
    c.total_blocks = 600;
    c.rng_seed = 5;
    auto topo = hundred_nodes();
    topo.nodes[10].strategy = Strategy::MaliciousMaxFee;
    testing::TempDir dir("accept_c9");
    run_to_files(c, topo, dir / "a");
    run_to_files(c, topo, dir / "b");
    const auto data_a = testing::read_file(dir / "a.data.csv");
    const bool same = data_a == testing::read_file(dir / "b.data.csv") &&
                      testing::read_file(dir / "a.meta") == testing::read_file(dir / "b.meta");
    if (!same) return {false, "repeat run differs"};

    // crash: kill a child mid-run once a third of the data is on disk
    const auto crash_data = dir / "c.data.csv";
    const pid_t child = fork();
    if (child < 0) return {false, "fork failed"};
    if (child == 0) {
        try {
            run_to_files(c, topo, dir / "c");
        } catch (...) {
        }
        _exit(0);
    }
    bool killed = false;
    for (int i = 0; i < 60000; ++i) {
        std::error_code ec;
        const auto size = std::filesystem::file_size(crash_data, ec);
        if (!ec && size >= data_a.size() / 3) {
            ::kill(child, SIGKILL);
            break;
        }
        int status = 0;
        if (::waitpid(child, &status, WNOHANG) == child) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    int status = 0;
    ::waitpid(child, &status, 0);
    killed = WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL;
    if (!killed) return {false, "child finished before it could be killed"};

    const auto data_c = testing::read_file(crash_data);
    const bool prefix = data_a.compare(0, data_c.size(), data_c) == 0;
    std::uint64_t blocks = 0;
    std::string parse_error;
    try {
        const auto meta = load_metadata(dir / "c.meta");
        if (meta.trailer) parse_error = "killed run has a trailer";
        blocks = for_each_complete_block(crash_data, meta.config.block_size, [](const std::vector<BlockRecord>&) {});
        analyze_collisions(crash_data);
        analyze_profits(crash_data, 0.05);
    } catch (const std::exception& e) {
        parse_error = e.what();
    }
    Outcome o{prefix && parse_error.empty() && blocks > 0 && blocks < c.total_blocks,
              "repeat runs byte-identical; killed run left " + std::to_string(data_c.size()) + " bytes, " +
                  std::to_string(blocks) + " complete blocks, " + (prefix ? "a prefix of the full run" : "NOT a prefix") +
                  (parse_error.empty() ? "" : ", " + parse_error)};
    return check_runtime(o, seconds_since(t0), 60);
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exponential clock", clock_means},
        {"fair baseline", fair_baseline},
        {"malicious advantage", malicious_advantage},
        {"malicious competition", malicious_competition},
        {"collision degradation", collision_degradation},
        {"variant comparison", variant_comparison},
        {"mempool oracle equivalence", mempool_oracle},
        {"complexity check", complexity},
        {"determinism", determinism},
    };
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::cerr << "usage: acceptance [criterion 1-9 ...]\n";
            return 2;
        }
        selected.push_back(static_cast<std::size_t>(n));
    }
    if (selected.empty())
        for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

    int failures = 0;
    for (const auto n : selected) {
        const auto& [name, fn] = criteria[n - 1];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << n << " (" << name << "): " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
