#include "dagsim/topology_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "text_util.hpp"

namespace dagsim {

namespace {

constexpr int kSwapAttempts = 200;

std::uint64_t pair_key(MinerId a, MinerId b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct DisjointSets {
    std::vector<MinerId> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), MinerId{0}); }
    MinerId find(MinerId x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void join(MinerId a, MinerId b) { parent[find(a)] = find(b); }
};

} // namespace

PowerPlan parse_power_plan(std::string_view text, Strategy strategy)
{
    PowerPlan plan;
    text = text::trim(text);
    if (text.empty()) return plan;
    for (const auto item : text::split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw std::invalid_argument("power plan entry '" + std::string(item) + "' needs id:power");
        plan.fixed.push_back({text::parse<MinerId>(item.substr(0, colon), "miner id"),
                              text::parse<double>(item.substr(colon + 1), "mining power"), strategy});
    }
    return plan;
}

void apply_power_plan(Topology& topology, const PowerPlan& plan)
{
    const std::size_t n = topology.nodes.size();
    std::vector<bool> fixed(n, false);
    double fixed_sum = 0.0;
    for (const auto& a : plan.fixed) {
        if (a.miner_id >= n) throw std::invalid_argument("power plan names unknown miner " + std::to_string(a.miner_id));
        if (fixed[a.miner_id]) throw std::invalid_argument("power plan repeats miner " + std::to_string(a.miner_id));
        if (!(a.power >= 0.0 && a.power <= 1.0)) throw std::invalid_argument("power plan power outside [0,1]");
        fixed[a.miner_id] = true;
        fixed_sum += a.power;
    }
    const std::size_t others = n - plan.fixed.size();
    if (fixed_sum > 1.0 + 1e-12) throw std::invalid_argument("power plan assigns more than the whole network");
    if (others == 0 && std::abs(fixed_sum - 1.0) > 1e-9)
        throw std::invalid_argument("power plan covers every miner but does not sum to 1");

    const double share = others > 0 ? std::max(0.0, 1.0 - fixed_sum) / static_cast<double>(others) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        topology.nodes[i].miner_id = static_cast<MinerId>(i);
        topology.nodes[i].mining_power = share;
        topology.nodes[i].strategy = Strategy::HonestRandom;
    }
    for (const auto& a : plan.fixed) {
        topology.nodes[a.miner_id].mining_power = a.power;
        topology.nodes[a.miner_id].strategy = a.strategy;
    }
}

Topology build_topology(std::size_t node_count, const DiscreteDistribution& degree_dist,
                        const DiscreteDistribution& delay_dist, const PowerPlan& plan, Rng& rng)
{
    if (node_count < 2) throw std::invalid_argument("build_topology needs at least 2 nodes");
    if (node_count > std::numeric_limits<MinerId>::max()) throw std::invalid_argument("too many nodes");
    if (degree_dist.min_value() < 1) throw std::invalid_argument("degree values must be at least 1");
    if (delay_dist.min_value() < 0 || delay_dist.max_value() > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("delay values must be non-negative milliseconds");

    const std::size_t n = node_count;
    std::vector<std::size_t> target(n);
    for (auto& d : target) d = std::min(static_cast<std::size_t>(degree_dist.sample(rng)), n - 1);

    // an odd stub count cannot be paired; bump one node that still has room
    if (std::accumulate(target.begin(), target.end(), std::size_t{0}) % 2 == 1) {
        auto j = static_cast<std::size_t>(uniform_int(rng, 0, n - 1));
        while (target[j] >= n - 1) j = (j + 1) % n;
        ++target[j];
    }

    std::vector<MinerId> stubs;
    for (std::size_t i = 0; i < n; ++i) stubs.insert(stubs.end(), target[i], static_cast<MinerId>(i));
    std::shuffle(stubs.begin(), stubs.end(), rng);

    std::vector<std::pair<MinerId, MinerId>> edges;
    std::vector<std::pair<MinerId, MinerId>> bad;
    std::unordered_set<std::uint64_t> present;
    edges.reserve(stubs.size() / 2);
    present.reserve(stubs.size());
    for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
        const MinerId u = stubs[k];
        const MinerId v = stubs[k + 1];
        if (u == v || !present.insert(pair_key(u, v)).second) bad.emplace_back(u, v);
        else edges.emplace_back(u, v);
    }

    // Double-edge swap: bad (u,v) + good (x,y) -> (u,x) + (v,y). Degrees are kept.
    for (auto [u, v] : bad) {
        for (int attempt = 0; attempt < kSwapAttempts && !edges.empty(); ++attempt) {
            const auto e = static_cast<std::size_t>(uniform_int(rng, 0, edges.size() - 1));
            auto [x, y] = edges[e];
            if (uniform01(rng) < 0.5) std::swap(x, y);
            if (u == x || v == y) continue;
            const auto k1 = pair_key(u, x);
            const auto k2 = pair_key(v, y);
            if (k1 == k2 || present.count(k1) || present.count(k2)) continue;
            present.erase(pair_key(x, y));
            present.insert(k1);
            present.insert(k2);
            edges[e] = {u, x};
            edges.emplace_back(v, y);
            break;
        }
        // an unrepaired stub pair is dropped; the node ends below its target degree
    }

    std::vector<std::size_t> degree(n, 0);
    DisjointSets sets(n);
    for (const auto& [a, b] : edges) {
        ++degree[a];
        ++degree[b];
        sets.join(a, b);
    }

    // Join every other component to the largest one through the
    // lowest-degree node on each side.
    std::vector<std::vector<MinerId>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[sets.find(static_cast<MinerId>(i))].push_back(static_cast<MinerId>(i));
    std::vector<std::size_t> roots;
    for (std::size_t r = 0; r < n; ++r)
        if (!members[r].empty()) roots.push_back(r);
    if (roots.size() > 1) {
        const auto main_it = std::max_element(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) {
            return members[a].size() < members[b].size() || (members[a].size() == members[b].size() && a > b);
        });
        const std::size_t main_root = *main_it;
        std::vector<MinerId> joined = members[main_root];
        auto lowest_degree = [&](const std::vector<MinerId>& nodes) {
            return *std::min_element(nodes.begin(), nodes.end(), [&](MinerId a, MinerId b) {
                return degree[a] < degree[b] || (degree[a] == degree[b] && a < b);
            });
        };
        for (const std::size_t r : roots) {
            if (r == main_root) continue;
            const MinerId a = lowest_degree(members[r]);
            const MinerId b = lowest_degree(joined);
            edges.emplace_back(a, b);
            ++degree[a];
            ++degree[b];
            sets.join(a, b);
            joined.insert(joined.end(), members[r].begin(), members[r].end());
        }
    }

    Topology topo;
    topo.nodes.resize(n);
    for (auto& [a, b] : edges)
        if (a > b) std::swap(a, b);
    std::sort(edges.begin(), edges.end());
    topo.links.reserve(edges.size());
    for (const auto& [a, b] : edges)
        topo.links.push_back({a, b, static_cast<std::uint32_t>(delay_dist.sample(rng))});
    apply_power_plan(topo, plan);

    if (reachable_from_first(topo) != n) throw std::runtime_error("topology is still disconnected after repair");
    return topo;
}

} // namespace dagsim
