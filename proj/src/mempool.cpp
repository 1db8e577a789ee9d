#include "dagsim/mempool.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>
#include <string>

namespace dagsim {

namespace {

constexpr std::size_t kWarmGroup = 32;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

Mempool::Mempool(std::size_t capacity, std::uint64_t salt, std::size_t bucket_count)
    : capacity_(capacity), salt_(salt), salt_key_(mix64(salt))
{
    if (capacity >= (std::size_t{1} << 31) - 1) throw std::invalid_argument("mempool capacity too large");
    if (bucket_count == 0) bucket_count = std::bit_ceil(std::max<std::size_t>(2 * capacity, 1));

    buckets_.assign(bucket_count, kNone);
    nodes_.resize(capacity + 1);
    for (std::size_t i = 0; i < capacity; ++i) nodes_[i].next = i + 1 < capacity ? static_cast<Index>(i + 1) : kNone;
    free_head_ = capacity > 0 ? 0 : kNone;
    nodes_[nil()] = {0, 0, kNone, {nil(), nil()}, nil()};
    root_ = min_ = max_ = nil();
}

std::size_t Mempool::bucket_index(TxId id) const
{
    __extension__ using Wide = unsigned __int128;
    const auto h = mix64(id ^ salt_key_);
    return static_cast<std::size_t>((static_cast<Wide>(h) * buckets_.size()) >> 64);
}

Mempool::Index Mempool::find_slot(TxId id) const
{
    for (Index s = buckets_[bucket_index(id)]; s != kNone; s = nodes_[s].next)
        if (nodes_[s].id == id) return s;
    return kNone;
}

bool Mempool::contains(TxId id) const { return find_slot(id) != kNone; }

std::optional<Fee> Mempool::fee_of(TxId id) const
{
    const Index s = find_slot(id);
    if (s == kNone) return std::nullopt;
    return nodes_[s].fee;
}

void Mempool::insert(const Transaction& tx)
{
    if (size_ == capacity_) throw std::logic_error("mempool full, evict before inserting");
    const std::size_t b = bucket_index(tx.id);
    for (Index s = buckets_[b]; s != kNone; s = nodes_[s].next)
        if (nodes_[s].id == tx.id) throw std::logic_error("duplicate transaction id " + std::to_string(tx.id));

    const Index slot = free_head_;
    free_head_ = nodes_[slot].next;
    nodes_[slot].fee = tx.fee;
    nodes_[slot].id = tx.id;
    nodes_[slot].next = buckets_[b];
    buckets_[b] = slot;
    tree_insert(slot);
    ++size_;
}

void Mempool::unlink_from_bucket(Index slot)
{
    Index* link = &buckets_[bucket_index(nodes_[slot].id)];
    while (*link != slot) link = &nodes_[*link].next;
    *link = nodes_[slot].next;
}

void Mempool::erase_slot(Index slot)
{
    unlink_from_bucket(slot);
    tree_erase(slot);
    nodes_[slot].next = free_head_;
    free_head_ = slot;
    --size_;
}

bool Mempool::remove(TxId id)
{
    const Index slot = find_slot(id);
    if (slot == kNone) return false;
    erase_slot(slot);
    return true;
}

std::size_t Mempool::remove_all(std::span<const TxId> ids)
{
    std::size_t removed = 0;
    for (std::size_t base = 0; base < ids.size(); base += kWarmGroup) {
        const auto group = ids.subspan(base, std::min(kWarmGroup, ids.size() - base));
        warm_erase_paths(group);
        for (const auto id : group) removed += remove(id) ? 1 : 0;
    }
    return removed;
}

// Same idea as warm_insert_paths: walk the bucket chains of a group in
// lockstep, then touch the tree neighbours each erase will rewrite.
void Mempool::warm_erase_paths(std::span<const TxId> group) const
{
    std::array<Index, kWarmGroup> at{};
    const std::size_t n = group.size();
    for (std::size_t i = 0; i < n; ++i) __builtin_prefetch(&buckets_[bucket_index(group[i])]);
    for (std::size_t i = 0; i < n; ++i) at[i] = buckets_[bucket_index(group[i])];
    for (bool moving = true; moving;) {
        moving = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (at[i] == kNone || nodes_[at[i]].id == group[i]) continue;
            at[i] = nodes_[at[i]].next;
            moving = true;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (at[i] == kNone) continue;
        __builtin_prefetch(&nodes_[parent(at[i])]);
        __builtin_prefetch(&nodes_[left(at[i])]);
        __builtin_prefetch(&nodes_[right(at[i])]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (at[i] == kNone) continue;
        const Index p = parent(at[i]);
        if (p == nil()) continue;
        __builtin_prefetch(&nodes_[left(p) == at[i] ? right(p) : left(p)]);
        __builtin_prefetch(&nodes_[parent(p)]);
    }
}

void Mempool::evict_lowest(std::size_t k)
{
    if (k > size_) throw std::invalid_argument("evict_lowest: k exceeds pool size");
    for (std::size_t i = 0; i < k; ++i) erase_slot(min_);
}

std::size_t Mempool::merge_top(std::span<const Transaction> ranked)
{
    auto outranks = [](const Transaction& a, const Transaction& b) {
        return a.fee > b.fee || (a.fee == b.fee && a.id > b.id);
    };
    for (std::size_t k = 1; k < ranked.size(); ++k)
        if (!outranks(ranked[k - 1], ranked[k])) throw std::invalid_argument("merge_top: input not in descending order");

    // admitted batch entries form a prefix of `ranked`, evicted pool entries
    // a prefix of the ascending pool order
    const std::size_t free = capacity_ - size_;
    std::size_t admitted = 0;
    Index low = min_;
    for (; admitted < ranked.size(); ++admitted) {
        if (admitted < free) continue;
        if (low == nil()) break;
        const Transaction lowest{nodes_[low].id, nodes_[low].fee};
        if (!outranks(ranked[admitted], lowest)) break;
        low = successor(low);
    }
    if (admitted > free) evict_lowest(admitted - free);
    for (std::size_t base = 0; base < admitted; base += kWarmGroup) {
        const auto group = ranked.subspan(base, std::min(kWarmGroup, admitted - base));
        warm_insert_paths(group);
        for (const auto& tx : group) insert(tx);
    }
    return admitted;
}

// Read-only descents for a group of keys, advanced in lockstep so their
// cache misses overlap. The inserts that follow find their paths cached.
void Mempool::warm_insert_paths(std::span<const Transaction> batch) const
{
    std::array<Index, kWarmGroup> at{};
    std::array<WideKey, kWarmGroup> key{};
    const std::size_t n = batch.size();
    for (std::size_t i = 0; i < n; ++i) {
        at[i] = root_;
        key[i] = (static_cast<WideKey>(batch[i].fee) << 64) | batch[i].id;
        __builtin_prefetch(&buckets_[bucket_index(batch[i].id)]);
    }
    for (bool moving = true; moving;) {
        moving = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (at[i] == nil()) continue;
            at[i] = nodes_[at[i]].child[key[i] > wide_key(nodes_[at[i]])];
            moving = true;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Index head = buckets_[bucket_index(batch[i].id)];
        if (head != kNone) __builtin_prefetch(&nodes_[head]);
    }
    Index slot = free_head_;
    for (std::size_t i = 0; i < n && slot != kNone; ++i) {
        __builtin_prefetch(&nodes_[slot]);
        slot = nodes_[slot].next;
    }
}

std::vector<Transaction> Mempool::take_top_fee(std::size_t k) const
{
    if (k > size_) throw std::invalid_argument("take_top_fee: not enough transactions");
    std::vector<Transaction> out;
    out.reserve(k);
    for (Index i = max_; out.size() < k; i = predecessor(i)) out.push_back({nodes_[i].id, nodes_[i].fee});
    return out;
}

Transaction Mempool::select_random(Rng& rng, RandomAccess variant, const TxIdSet* excluded) const
{
    if (size_ == 0) throw std::logic_error("select_random on an empty mempool");

    auto eligible = [&](Index s) { return excluded == nullptr || excluded->count(nodes_[s].id) == 0; };
    Transaction out;
    auto take_from_bucket = [&](std::size_t b) {
        std::size_t count = 0;
        for (Index s = buckets_[b]; s != kNone; s = nodes_[s].next) count += eligible(s) ? 1 : 0;
        if (count == 0) return false;
        std::size_t choice = count == 1 ? 0 : static_cast<std::size_t>(uniform_int(rng, 0, count - 1));
        for (Index s = buckets_[b]; s != kNone; s = nodes_[s].next) {
            if (!eligible(s)) continue;
            if (choice-- == 0) {
                out = {nodes_[s].id, nodes_[s].fee};
                break;
            }
        }
        return true;
    };

    const std::size_t m = buckets_.size();
    if (variant == RandomAccess::Probe) {
        const auto start = static_cast<std::size_t>(uniform_int(rng, 0, m - 1));
        if (take_from_bucket(start)) return out;
        // alternate above/below, wrapping past either end of the table
        for (std::size_t d = 1; d <= m / 2; ++d) {
            const std::size_t up = (start + d) % m;
            if (take_from_bucket(up)) return out;
            const std::size_t down = (start + m - d) % m;
            if (down != up && take_from_bucket(down)) return out;
        }
    } else {
        for (std::size_t b = 0; b < m; ++b)
            if (take_from_bucket(b)) return out;
    }
    throw std::logic_error("select_random: every transaction is excluded");
}

std::optional<Transaction> Mempool::lowest() const
{
    if (size_ == 0) return std::nullopt;
    return Transaction{nodes_[min_].id, nodes_[min_].fee};
}

std::optional<Transaction> Mempool::highest() const
{
    if (size_ == 0) return std::nullopt;
    return Transaction{nodes_[max_].id, nodes_[max_].fee};
}

std::vector<Transaction> Mempool::sorted_ascending() const
{
    std::vector<Transaction> out;
    out.reserve(size_);
    for_each_ascending([&](const Transaction& tx) { out.push_back(tx); });
    return out;
}

MemoryFootprint Mempool::footprint() const
{
    MemoryFootprint f;
    // what a hashtable-only pool would need per slot: key and chain link
    constexpr std::size_t table_slot = sizeof(Fee) + sizeof(TxId) + sizeof(Index);
    f.hashtable_bytes = buckets_.capacity() * sizeof(Index) + capacity_ * table_slot;
    f.tree_bytes = nodes_.capacity() * sizeof(Node) - capacity_ * table_slot;
    return f;
}

// ---------------------------------------------------------------------------
// red-black tree over slot indices, nil() is the shared black sentinel

Mempool::Index Mempool::minimum(Index x) const
{
    while (left(x) != nil()) x = left(x);
    return x;
}

Mempool::Index Mempool::maximum(Index x) const
{
    while (right(x) != nil()) x = right(x);
    return x;
}

Mempool::Index Mempool::successor(Index x) const
{
    if (right(x) != nil()) return minimum(right(x));
    Index y = parent(x);
    while (y != nil() && x == right(y)) {
        x = y;
        y = parent(y);
    }
    return y;
}

Mempool::Index Mempool::predecessor(Index x) const
{
    if (left(x) != nil()) return maximum(left(x));
    Index y = parent(x);
    while (y != nil() && x == left(y)) {
        x = y;
        y = parent(y);
    }
    return y;
}

void Mempool::rotate_left(Index x)
{
    const Index y = right(x);
    set_right(x, left(y));
    if (left(y) != nil()) set_parent(left(y), x);
    set_parent(y, parent(x));
    if (parent(x) == nil()) root_ = y;
    else if (x == left(parent(x))) set_left(parent(x), y);
    else set_right(parent(x), y);
    set_left(y, x);
    set_parent(x, y);
}

void Mempool::rotate_right(Index x)
{
    const Index y = left(x);
    set_left(x, right(y));
    if (right(y) != nil()) set_parent(right(y), x);
    set_parent(y, parent(x));
    if (parent(x) == nil()) root_ = y;
    else if (x == right(parent(x))) set_right(parent(x), y);
    else set_left(parent(x), y);
    set_right(y, x);
    set_parent(x, y);
}

void Mempool::tree_insert(Index z)
{
    const WideKey key = wide_key(nodes_[z]);
    Index y = nil();
    Index x = root_;
    bool go_right = false;
    while (x != nil()) {
        y = x;
        go_right = key > wide_key(nodes_[x]);
        x = nodes_[x].child[go_right];
    }
    nodes_[z].child[0] = nil();
    nodes_[z].child[1] = nil();
    nodes_[z].parent_color = y | kRedBit;
    if (y == nil()) root_ = z;
    else nodes_[y].child[go_right] = z;

    if (min_ == nil() || less(z, min_)) min_ = z;
    if (max_ == nil() || less(max_, z)) max_ = z;
    insert_fixup(z);
}

void Mempool::insert_fixup(Index z)
{
    while (red(parent(z))) {
        const Index p = parent(z);
        const Index g = parent(p);
        if (p == left(g)) {
            const Index uncle = right(g);
            if (red(uncle)) {
                set_red(p, false);
                set_red(uncle, false);
                set_red(g, true);
                z = g;
            } else {
                if (z == right(p)) {
                    z = p;
                    rotate_left(z);
                }
                set_red(parent(z), false);
                set_red(parent(parent(z)), true);
                rotate_right(parent(parent(z)));
            }
        } else {
            const Index uncle = left(g);
            if (red(uncle)) {
                set_red(p, false);
                set_red(uncle, false);
                set_red(g, true);
                z = g;
            } else {
                if (z == left(p)) {
                    z = p;
                    rotate_right(z);
                }
                set_red(parent(z), false);
                set_red(parent(parent(z)), true);
                rotate_left(parent(parent(z)));
            }
        }
    }
    set_red(root_, false);
}

void Mempool::transplant(Index u, Index v)
{
    const Index p = parent(u);
    if (p == nil()) root_ = v;
    else if (u == left(p)) set_left(p, v);
    else set_right(p, v);
    set_parent(v, p);
}

void Mempool::tree_erase(Index z)
{
    if (z == min_) min_ = successor(z);
    if (z == max_) max_ = predecessor(z);

    Index y = z;
    bool y_was_red = red(y);
    Index x;
    if (left(z) == nil()) {
        x = right(z);
        transplant(z, right(z));
    } else if (right(z) == nil()) {
        x = left(z);
        transplant(z, left(z));
    } else {
        y = minimum(right(z));
        y_was_red = red(y);
        x = right(y);
        if (parent(y) == z) {
            set_parent(x, y);
        } else {
            transplant(y, right(y));
            set_right(y, right(z));
            set_parent(right(y), y);
        }
        transplant(z, y);
        set_left(y, left(z));
        set_parent(left(y), y);
        set_red(y, red(z));
    }
    if (!y_was_red) erase_fixup(x);
    set_red(nil(), false);
}

void Mempool::erase_fixup(Index x)
{
    while (x != root_ && !red(x)) {
        const Index p = parent(x);
        if (x == left(p)) {
            Index w = right(p);
            if (red(w)) {
                set_red(w, false);
                set_red(p, true);
                rotate_left(p);
                w = right(parent(x));
            }
            if (!red(left(w)) && !red(right(w))) {
                set_red(w, true);
                x = parent(x);
            } else {
                if (!red(right(w))) {
                    set_red(left(w), false);
                    set_red(w, true);
                    rotate_right(w);
                    w = right(parent(x));
                }
                set_red(w, red(parent(x)));
                set_red(parent(x), false);
                set_red(right(w), false);
                rotate_left(parent(x));
                x = root_;
            }
        } else {
            Index w = left(p);
            if (red(w)) {
                set_red(w, false);
                set_red(p, true);
                rotate_right(p);
                w = left(parent(x));
            }
            if (!red(right(w)) && !red(left(w))) {
                set_red(w, true);
                x = parent(x);
            } else {
                if (!red(left(w))) {
                    set_red(right(w), false);
                    set_red(w, true);
                    rotate_left(w);
                    w = left(parent(x));
                }
                set_red(w, red(parent(x)));
                set_red(parent(x), false);
                set_red(left(w), false);
                rotate_right(parent(x));
                x = root_;
            }
        }
    }
    set_red(x, false);
}

// ---------------------------------------------------------------------------

int Mempool::audit_subtree(Index x, std::size_t& count) const
{
    if (x == nil()) return 1;
    ++count;
    if (count > size_) throw std::logic_error("audit: tree has more nodes than size");
    const Index l = left(x);
    const Index r = right(x);
    if (l != nil() && (parent(l) != x || !less(l, x))) throw std::logic_error("audit: bad left child link");
    if (r != nil() && (parent(r) != x || !less(x, r))) throw std::logic_error("audit: bad right child link");
    if (red(x) && (red(l) || red(r))) throw std::logic_error("audit: red node with red child");
    const int lh = audit_subtree(l, count);
    const int rh = audit_subtree(r, count);
    if (lh != rh) throw std::logic_error("audit: unequal black height");
    return lh + (red(x) ? 0 : 1);
}

void Mempool::audit() const
{
    std::vector<bool> in_table(capacity_, false);
    std::size_t table_count = 0;
    for (std::size_t b = 0; b < buckets_.size(); ++b) {
        for (Index s = buckets_[b]; s != kNone; s = nodes_[s].next) {
            if (s >= capacity_ || in_table[s]) throw std::logic_error("audit: corrupt bucket chain");
            if (bucket_index(nodes_[s].id) != b) throw std::logic_error("audit: entry in the wrong bucket");
            in_table[s] = true;
            ++table_count;
        }
    }
    if (table_count != size_) throw std::logic_error("audit: hashtable count differs from size");

    std::size_t free_count = 0;
    for (Index s = free_head_; s != kNone; s = nodes_[s].next) {
        if (s >= capacity_ || in_table[s]) throw std::logic_error("audit: corrupt free list");
        if (++free_count > capacity_) throw std::logic_error("audit: free list cycles");
    }
    if (free_count + size_ != capacity_) throw std::logic_error("audit: slots leaked");

    if (red(nil())) throw std::logic_error("audit: sentinel turned red");
    if (root_ != nil() && (red(root_) || parent(root_) != nil())) throw std::logic_error("audit: bad root");
    std::size_t tree_count = 0;
    audit_subtree(root_, tree_count);
    if (tree_count != size_) throw std::logic_error("audit: tree count differs from size");

    // mirror: every tree node is a live hashtable slot, reached through its own id
    std::size_t walked = 0;
    for (Index i = root_ == nil() ? nil() : minimum(root_); i != nil(); i = successor(i)) {
        if (!in_table[i] || find_slot(nodes_[i].id) != i) throw std::logic_error("audit: tree and table disagree");
        ++walked;
    }
    if (walked != size_) throw std::logic_error("audit: in-order walk length differs from size");

    const Index true_min = root_ == nil() ? nil() : minimum(root_);
    const Index true_max = root_ == nil() ? nil() : maximum(root_);
    if (min_ != true_min || max_ != true_max) throw std::logic_error("audit: cached min/max stale");
}

} // namespace dagsim
