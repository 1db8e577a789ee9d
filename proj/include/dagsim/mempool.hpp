#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "dagsim/random.hpp"
#include "dagsim/types.hpp"

namespace dagsim {

using TxIdSet = std::unordered_set<TxId>;

struct MemoryFootprint {
    std::size_t hashtable_bytes = 0; // bucket heads, keys, chain links
    std::size_t tree_bytes = 0;      // red-black links and colors

    std::size_t total() const { return hashtable_bytes + tree_bytes; }
};

// Fixed-capacity transaction pool owned by one miner.
//
// Every transaction lives in one 32-byte slot of a preallocated arena. The
// slot is threaded onto two structures at once:
//   * a chained hashtable keyed by mix(tx_id, salt), used for lookup by id
//     and for random selection by bucket probing;
//   * a red-black tree ordered by (fee, tx_id), used for sorted access from
//     either end.
// Both always hold the same set of slots.
class Mempool {
public:
    // Salt shared by every miner under RandomAccess::EqualKey.
    static constexpr std::uint64_t kSharedSalt = 0x5851f42d4c957f2dULL;

    // bucket_count == 0 picks the next power of two >= 2 * capacity.
    Mempool(std::size_t capacity, std::uint64_t salt, std::size_t bucket_count = 0);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t bucket_count() const { return buckets_.size(); }
    bool empty() const { return size_ == 0; }
    std::uint64_t salt() const { return salt_; }

    // Throws std::logic_error if the id is already present or the pool is full.
    void insert(const Transaction& tx);
    bool remove(TxId id);
    // remove() for each id, with lookups overlapped; returns how many were present
    std::size_t remove_all(std::span<const TxId> ids);
    bool contains(TxId id) const;
    std::optional<Fee> fee_of(TxId id) const;

    // Removes the k smallest by (fee, tx_id). Throws std::invalid_argument if k > size.
    void evict_lowest(std::size_t k);

    // Keeps the best `capacity` of (pool + ranked) by (fee, tx_id): evicts
    // the lowest entries it has to and inserts only the transactions that
    // stay. `ranked` must be in descending (fee, tx_id) order and hold no id
    // already present. Returns how many of them were admitted.
    std::size_t merge_top(std::span<const Transaction> ranked);

    // The k largest by (fee, tx_id), descending. Pool is unchanged.
    // Throws std::invalid_argument if k > size.
    std::vector<Transaction> take_top_fee(std::size_t k) const;

    // Picks one transaction not in `excluded` by walking buckets (see
    // RandomAccess). Throws std::logic_error when nothing is eligible.
    Transaction select_random(Rng& rng, RandomAccess variant, const TxIdSet* excluded = nullptr) const;

    std::optional<Transaction> lowest() const;
    std::optional<Transaction> highest() const;
    std::vector<Transaction> sorted_ascending() const;

    template <typename Fn>
    void for_each_ascending(Fn&& fn) const
    {
        for (Index i = min_; i != nil(); i = successor(i)) fn(Transaction{nodes_[i].id, nodes_[i].fee});
    }

    // Bucket the id hashes to, whether present or not.
    std::size_t bucket_index(TxId id) const;

    MemoryFootprint footprint() const;

    // Full consistency check of both structures and the red-black rules.
    // Throws std::logic_error describing the first violation found.
    void audit() const;

private:
    using Index = std::uint32_t;
    static constexpr Index kNone = ~Index{0};
    static constexpr Index kRedBit = Index{1} << 31;

    // key, chain link and tree links share a cache line
    struct alignas(32) Node {
        Fee fee;
        TxId id;
        Index next; // bucket chain, or free list for unused slots
        Index child[2]; // left, right
        Index parent_color; // parent index, top bit set when red
    };

    __extension__ using WideKey = unsigned __int128;
    // (fee, id) as one integer, so comparisons compile without branches
    static WideKey wide_key(const Node& n) { return (static_cast<WideKey>(n.fee) << 64) | n.id; }

    Index nil() const { return static_cast<Index>(capacity_); }
    bool less(Index a, Index b) const
    {
        return wide_key(nodes_[a]) < wide_key(nodes_[b]);
    }

    Index left(Index i) const { return nodes_[i].child[0]; }
    Index right(Index i) const { return nodes_[i].child[1]; }
    Index parent(Index i) const { return nodes_[i].parent_color & ~kRedBit; }
    bool red(Index i) const { return (nodes_[i].parent_color & kRedBit) != 0; }
    void set_left(Index i, Index v) { nodes_[i].child[0] = v; }
    void set_right(Index i, Index v) { nodes_[i].child[1] = v; }
    void set_parent(Index i, Index p) { nodes_[i].parent_color = (nodes_[i].parent_color & kRedBit) | p; }
    void set_red(Index i, bool r)
    {
        nodes_[i].parent_color = r ? (nodes_[i].parent_color | kRedBit) : (nodes_[i].parent_color & ~kRedBit);
    }

    Index find_slot(TxId id) const;
    void unlink_from_bucket(Index slot);
    void erase_slot(Index slot);

    Index minimum(Index x) const;
    Index maximum(Index x) const;
    Index successor(Index x) const;
    Index predecessor(Index x) const;
    void rotate_left(Index x);
    void rotate_right(Index x);
    void warm_insert_paths(std::span<const Transaction> batch) const;
    void warm_erase_paths(std::span<const TxId> group) const;
    void tree_insert(Index z);
    void insert_fixup(Index z);
    void transplant(Index u, Index v);
    void tree_erase(Index z);
    void erase_fixup(Index x);
    int audit_subtree(Index x, std::size_t& count) const;

    std::size_t capacity_;
    std::uint64_t salt_;
    std::uint64_t salt_key_;
    std::size_t size_ = 0;

    std::vector<Index> buckets_;
    std::vector<Node> nodes_; // one extra entry for the nil sentinel
    Index free_head_ = kNone;
    Index root_;
    Index min_;
    Index max_;
};

} // namespace dagsim
