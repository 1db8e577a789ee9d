#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dagsim {

using TxId = std::uint64_t;
using Fee = std::uint64_t;
using MinerId = std::uint32_t;
using BlockId = std::uint64_t;

struct Transaction {
    TxId id = 0;
    Fee fee = 0;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

enum class Strategy { HonestRandom, MaliciousMaxFee };

// How an honest miner picks transactions out of its hashtable.
//   Probe    - random start bucket, alternate above/below outward.
//   Begin    - always scan upward from bucket 0.
//   EqualKey - Begin, with every miner sharing the same bucket salt.
enum class RandomAccess { Probe, Begin, EqualKey };

std::string_view to_string(Strategy s);
std::string_view to_string(RandomAccess v);
std::optional<Strategy> parse_strategy(std::string_view text);
std::optional<RandomAccess> parse_random_access(std::string_view text);

struct NodeSpec {
    MinerId miner_id = 0;
    double mining_power = 0.0; // fraction of total hash rate
    Strategy strategy = Strategy::HonestRandom;

    friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct Link {
    MinerId node_a = 0;
    MinerId node_b = 0;
    std::uint32_t delay_ms = 0;

    friend bool operator==(const Link&, const Link&) = default;
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<Link> links;

    friend bool operator==(const Topology&, const Topology&) = default;
};

struct Block {
    BlockId id = 0;
    std::uint64_t height = 0; // genesis is the implicit height 0
    MinerId miner = 0;
    std::vector<TxId> tx_ids;
    std::vector<Fee> fees; // parallel to tx_ids
    double mined_at = 0.0; // simulation seconds
};

template <typename T>
struct Range {
    T lo{};
    T hi{};

    friend bool operator==(const Range&, const Range&) = default;
};

struct SimConfig {
    double block_interval_lambda = 20.0; // mean seconds between blocks
    std::uint64_t total_blocks = 1000;
    std::size_t block_size = 100;
    std::size_t mempool_capacity = 10000;
    std::size_t initial_tx_count = 10000; // per miner, identical across miners
    Range<std::uint64_t> txgen_count_range{500, 1000};
    Range<double> txgen_delay_range{60.0, 160.0}; // seconds
    Range<Fee> fee_range{1, 1000};
    std::uint64_t rng_seed = 1;
    RandomAccess random_access_variant = RandomAccess::Probe;
    bool audit_mempool = false; // re-check every touched pool after each event

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Sum of mining power over the topology.
double total_power(const Topology& topology);

// Nodes reachable from node 0 by breadth-first search over the links.
std::size_t reachable_from_first(const Topology& topology);

// Per-node neighbor list in compressed form, used by the engine and generators.
struct Adjacency {
    std::vector<std::size_t> offsets; // size nodes+1
    std::vector<MinerId> neighbors;
    std::vector<std::uint32_t> delays_ms;

    std::size_t degree(MinerId node) const { return offsets[node + 1] - offsets[node]; }
};

Adjacency build_adjacency(const Topology& topology);

} // namespace dagsim
