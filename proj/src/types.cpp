#include "dagsim/types.hpp"

#include <deque>

namespace dagsim {

std::string_view to_string(Strategy s)
{
    return s == Strategy::HonestRandom ? "honest" : "malicious";
}

std::string_view to_string(RandomAccess v)
{
    switch (v) {
    case RandomAccess::Probe: return "probe";
    case RandomAccess::Begin: return "begin";
    case RandomAccess::EqualKey: return "equal_key";
    }
    return "probe";
}

std::optional<Strategy> parse_strategy(std::string_view text)
{
    if (text == "honest") return Strategy::HonestRandom;
    if (text == "malicious") return Strategy::MaliciousMaxFee;
    return std::nullopt;
}

std::optional<RandomAccess> parse_random_access(std::string_view text)
{
    if (text == "probe") return RandomAccess::Probe;
    if (text == "begin") return RandomAccess::Begin;
    if (text == "equal_key") return RandomAccess::EqualKey;
    return std::nullopt;
}

double total_power(const Topology& topology)
{
    double sum = 0.0;
    for (const auto& n : topology.nodes) sum += n.mining_power;
    return sum;
}

Adjacency build_adjacency(const Topology& topology)
{
    const std::size_t n = topology.nodes.size();
    Adjacency adj;
    adj.offsets.assign(n + 1, 0);
    for (const auto& l : topology.links) {
        if (l.node_a < n && l.node_b < n) {
            ++adj.offsets[l.node_a + 1];
            ++adj.offsets[l.node_b + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];

    adj.neighbors.resize(adj.offsets[n]);
    adj.delays_ms.resize(adj.offsets[n]);
    std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& l : topology.links) {
        if (l.node_a >= n || l.node_b >= n) continue;
        adj.neighbors[cursor[l.node_a]] = l.node_b;
        adj.delays_ms[cursor[l.node_a]++] = l.delay_ms;
        adj.neighbors[cursor[l.node_b]] = l.node_a;
        adj.delays_ms[cursor[l.node_b]++] = l.delay_ms;
    }
    return adj;
}

std::size_t reachable_from_first(const Topology& topology)
{
    const std::size_t n = topology.nodes.size();
    if (n == 0) return 0;
    const auto adj = build_adjacency(topology);
    std::vector<bool> seen(n, false);
    std::deque<MinerId> frontier{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const MinerId u = frontier.front();
        frontier.pop_front();
        for (std::size_t k = adj.offsets[u]; k < adj.offsets[u + 1]; ++k) {
            const MinerId v = adj.neighbors[k];
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                frontier.push_back(v);
            }
        }
    }
    return count;
}

} // namespace dagsim
