#include "dagsim/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "text_util.hpp"

namespace dagsim {

namespace {

constexpr double kPowerTolerance = 1e-9;

template <typename T>
Range<T> parse_range(std::string_view value, std::string_view key)
{
    auto parts = text::split(value, ',');
    if (parts.size() != 2) throw std::invalid_argument(std::string(key) + " expects 'lo,hi'");
    return {text::parse<T>(parts[0], key), text::parse<T>(parts[1], key)};
}

template <typename T>
std::string format_range(const Range<T>& r)
{
    if constexpr (std::is_floating_point_v<T>) {
        return text::format_double(r.lo) + "," + text::format_double(r.hi);
    } else {
        return std::to_string(r.lo) + "," + std::to_string(r.hi);
    }
}

bool parse_bool(std::string_view value, std::string_view key)
{
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument(std::string(key) + " expects true/false");
}

} // namespace

std::vector<std::string> validate_config(const SimConfig& config, const Topology& topology)
{
    std::vector<std::string> out;

    if (!(config.block_interval_lambda > 0.0) || !std::isfinite(config.block_interval_lambda))
        out.emplace_back("block_interval_lambda must be positive");
    if (config.total_blocks < 1) out.emplace_back("total_blocks must be at least 1");
    if (config.block_size < 1) out.emplace_back("block_size must be at least 1");
    if (config.block_size > config.mempool_capacity) out.emplace_back("block_size exceeds mempool_capacity");
    if (config.mempool_capacity >= (std::size_t{1} << 31)) out.emplace_back("mempool_capacity too large");
    if (config.txgen_count_range.lo > config.txgen_count_range.hi)
        out.emplace_back("txgen_count_range lower bound exceeds upper bound");
    if (config.txgen_delay_range.lo > config.txgen_delay_range.hi)
        out.emplace_back("txgen_delay_range lower bound exceeds upper bound");
    if (config.txgen_delay_range.lo < 0.0 || !(config.txgen_delay_range.hi > 0.0))
        out.emplace_back("txgen_delay_range must be non-negative with a positive upper bound");
    if (config.fee_range.lo > config.fee_range.hi) out.emplace_back("fee_range lower bound exceeds upper bound");

    const std::size_t n = topology.nodes.size();
    if (n == 0) {
        out.emplace_back("topology has no nodes");
        return out;
    }

    bool dense = true;
    for (std::size_t i = 0; i < n; ++i) dense = dense && topology.nodes[i].miner_id == i;
    if (!dense) out.emplace_back("miner ids are not dense 0..N-1 in file order");

    for (const auto& node : topology.nodes) {
        if (!(node.mining_power >= 0.0 && node.mining_power <= 1.0))
            out.push_back("mining_power of miner " + std::to_string(node.miner_id) + " outside [0,1]");
    }
    if (const double sum = total_power(topology); !(std::abs(sum - 1.0) <= kPowerTolerance))
        out.push_back("mining power sums to " + text::format_double(sum) + ", expected 1");

    std::set<std::pair<MinerId, MinerId>> pairs;
    bool links_ok = true;
    for (std::size_t i = 0; i < topology.links.size(); ++i) {
        const auto& l = topology.links[i];
        if (l.node_a >= n || l.node_b >= n) {
            out.push_back("link " + std::to_string(i) + " references an unknown miner");
            links_ok = false;
            continue;
        }
        if (l.node_a == l.node_b) {
            out.push_back("link " + std::to_string(i) + " is a self-loop");
            continue;
        }
        if (!pairs.emplace(std::min(l.node_a, l.node_b), std::max(l.node_a, l.node_b)).second)
            out.push_back("duplicate link between " + std::to_string(l.node_a) + " and " + std::to_string(l.node_b));
    }

    if (links_ok && dense && reachable_from_first(topology) != n) out.emplace_back("graph not connected");
    return out;
}

Topology parse_topology(std::istream& in)
{
    Topology topo;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t expect_nodes = 0;
    std::size_t expect_links = 0;

    auto fail = [&](const std::string& what) {
        throw std::runtime_error("topology line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto body = text::strip_comment(line);
        if (body.empty()) continue;
        const auto f = text::split_ws(body);
        try {
            if (f[0] == "nodes") {
                if (f.size() != 4 || f[2] != "links") fail("expected 'nodes <N> links <L>'");
                expect_nodes = text::parse<std::size_t>(f[1], "node count");
                expect_links = text::parse<std::size_t>(f[3], "link count");
                topo.nodes.reserve(expect_nodes);
                topo.links.reserve(expect_links);
                have_header = true;
            } else if (f[0] == "node") {
                if (!have_header) fail("node record before header");
                if (f.size() != 4) fail("expected 'node <id> <power> <strategy>'");
                const auto strategy = parse_strategy(f[3]);
                if (!strategy) fail("unknown strategy '" + std::string(f[3]) + "'");
                topo.nodes.push_back({text::parse<MinerId>(f[1], "miner id"),
                                      text::parse<double>(f[2], "mining power"), *strategy});
            } else if (f[0] == "link") {
                if (!have_header) fail("link record before header");
                if (f.size() != 4) fail("expected 'link <a> <b> <delay_ms>'");
                topo.links.push_back({text::parse<MinerId>(f[1], "link endpoint"),
                                      text::parse<MinerId>(f[2], "link endpoint"),
                                      text::parse<std::uint32_t>(f[3], "link delay")});
            } else {
                fail("unknown record '" + std::string(f[0]) + "'");
            }
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }
    if (!have_header) throw std::runtime_error("topology: missing 'nodes <N> links <L>' header");
    if (topo.nodes.size() != expect_nodes || topo.links.size() != expect_links)
        throw std::runtime_error("topology: header counts do not match records");
    return topo;
}

void write_topology(std::ostream& out, const Topology& topology)
{
    out << "nodes " << topology.nodes.size() << " links " << topology.links.size() << '\n';
    for (const auto& n : topology.nodes)
        out << "node " << n.miner_id << ' ' << text::format_double(n.mining_power) << ' ' << to_string(n.strategy)
            << '\n';
    for (const auto& l : topology.links) out << "link " << l.node_a << ' ' << l.node_b << ' ' << l.delay_ms << '\n';
}

Topology load_topology(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topology file " + path.string());
    return parse_topology(in);
}

void save_topology(const std::filesystem::path& path, const Topology& topology)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write topology file " + path.string());
    write_topology(out, topology);
    if (!out.flush()) throw std::runtime_error("write failed for " + path.string());
}

bool apply_config_key(SimConfig& c, std::string_view key, std::string_view value)
{
    value = text::trim(value);
    if (key == "block_interval_lambda") c.block_interval_lambda = text::parse<double>(value, key);
    else if (key == "total_blocks") c.total_blocks = text::parse<std::uint64_t>(value, key);
    else if (key == "block_size") c.block_size = text::parse<std::size_t>(value, key);
    else if (key == "mempool_capacity") c.mempool_capacity = text::parse<std::size_t>(value, key);
    else if (key == "initial_tx_count") c.initial_tx_count = text::parse<std::size_t>(value, key);
    else if (key == "txgen_count_range") c.txgen_count_range = parse_range<std::uint64_t>(value, key);
    else if (key == "txgen_delay_range") c.txgen_delay_range = parse_range<double>(value, key);
    else if (key == "fee_range") c.fee_range = parse_range<Fee>(value, key);
    else if (key == "rng_seed") c.rng_seed = text::parse<std::uint64_t>(value, key);
    else if (key == "random_access_variant") {
        const auto v = parse_random_access(value);
        if (!v) throw std::invalid_argument("random_access_variant expects probe|begin|equal_key");
        c.random_access_variant = *v;
    } else if (key == "audit_mempool") c.audit_mempool = parse_bool(value, key);
    else return false;
    return true;
}

SimConfig parse_config(std::istream& in)
{
    SimConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = text::strip_comment(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const auto where = "config line " + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw std::runtime_error(where + "expected key=value");
        const auto key = text::trim(body.substr(0, eq));
        try {
            if (!apply_config_key(config, key, body.substr(eq + 1)))
                throw std::runtime_error(where + "unknown key '" + std::string(key) + "'");
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + e.what());
        }
    }
    return config;
}

void write_config(std::ostream& out, const SimConfig& c)
{
    out << "block_interval_lambda=" << text::format_double(c.block_interval_lambda) << '\n'
        << "total_blocks=" << c.total_blocks << '\n'
        << "block_size=" << c.block_size << '\n'
        << "mempool_capacity=" << c.mempool_capacity << '\n'
        << "initial_tx_count=" << c.initial_tx_count << '\n'
        << "txgen_count_range=" << format_range(c.txgen_count_range) << '\n'
        << "txgen_delay_range=" << format_range(c.txgen_delay_range) << '\n'
        << "fee_range=" << format_range(c.fee_range) << '\n'
        << "rng_seed=" << c.rng_seed << '\n'
        << "random_access_variant=" << to_string(c.random_access_variant) << '\n'
        << "audit_mempool=" << (c.audit_mempool ? "true" : "false") << '\n';
}

SimConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in);
}

} // namespace dagsim
