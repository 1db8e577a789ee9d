#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dagsim/mempool.hpp"
#include "support.hpp"

using namespace dagsim;

namespace {

std::vector<Fee> fees_of(const std::vector<Transaction>& txs)
{
    std::vector<Fee> out;
    for (const auto& t : txs) out.push_back(t.fee);
    return out;
}

// Exact Probe selection probabilities for an unexcluded pool: enumerate
// every start bucket, follow the probe order to the first occupied bucket,
// then split evenly over that bucket's chain.
std::map<TxId, double> probe_oracle(const Mempool& pool, const std::vector<TxId>& ids)
{
    const std::size_t m = pool.bucket_count();
    std::vector<std::vector<TxId>> buckets(m);
    for (const TxId id : ids) buckets[pool.bucket_index(id)].push_back(id);

    std::map<TxId, double> p;
    for (std::size_t start = 0; start < m; ++start) {
        std::size_t hit = m;
        if (!buckets[start].empty()) hit = start;
        for (std::size_t d = 1; hit == m && d <= m / 2; ++d) {
            if (!buckets[(start + d) % m].empty()) hit = (start + d) % m;
            else if (!buckets[(start + m - d) % m].empty()) hit = (start + m - d) % m;
        }
        REQUIRE(hit < m);
        for (const TxId id : buckets[hit]) p[id] += 1.0 / static_cast<double>(m * buckets[hit].size());
    }
    return p;
}

} // namespace

TEST_CASE("insert into an empty pool")
{
    Mempool pool(10, 1);
    pool.insert({1, 10});
    CHECK(pool.size() == 1);
    CHECK(pool.contains(1));
    CHECK(pool.fee_of(1) == 10u);
    CHECK_FALSE(pool.fee_of(2));
    pool.audit();
}

TEST_CASE("fill a table 2 sized pool")
{
    Mempool pool(10000, 99);
    Rng rng(1);
    for (TxId id = 0; id < 10000; ++id) pool.insert({id, uniform_int(rng, 1, 1000)});
    CHECK(pool.size() == 10000);
    const auto sorted = pool.sorted_ascending();
    CHECK(sorted.size() == 10000);
    CHECK(std::is_sorted(sorted.begin(), sorted.end(), [](const Transaction& a, const Transaction& b) {
        return a.fee < b.fee || (a.fee == b.fee && a.id < b.id);
    }));
    CHECK(pool.bucket_count() == 32768);
    pool.audit();
    CHECK_THROWS_AS(pool.insert({10001, 5}), std::logic_error);
}

TEST_CASE("equal fees iterate by id")
{
    Mempool pool(100, 5);
    for (TxId id = 100; id >= 1; --id) pool.insert({id, 5});
    const auto sorted = pool.sorted_ascending();
    REQUIRE(sorted.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(sorted[i].id == i + 1);
}

TEST_CASE("duplicate ids are refused")
{
    Mempool pool(4, 1);
    pool.insert({3, 1});
    CHECK_THROWS_AS(pool.insert({3, 2}), std::logic_error);
    CHECK(pool.size() == 1);
}

TEST_CASE("remove")
{
    Mempool pool(8, 2);
    pool.insert({1, 30});
    pool.insert({2, 10});
    pool.insert({3, 20});
    CHECK(pool.remove(2));
    CHECK_FALSE(pool.contains(2));
    CHECK_FALSE(pool.remove(2));
    CHECK_FALSE(pool.remove(99));
    CHECK(pool.size() == 2);
    CHECK(pool.sorted_ascending() == std::vector<Transaction>{{3, 20}, {1, 30}});
    pool.audit();
}

TEST_CASE("remove_all counts the ids present")
{
    Mempool pool(50, 2);
    for (TxId id = 0; id < 40; ++id) pool.insert({id, id % 7});
    const std::vector<TxId> ids{1, 5, 45, 9, 5, 100, 39};
    CHECK(pool.remove_all(ids) == 4);
    CHECK(pool.size() == 36);
    pool.audit();
}

TEST_CASE("evict_lowest")
{
    Mempool pool(8, 3);
    pool.insert({1, 5});
    pool.insert({2, 3});
    pool.insert({3, 9});
    pool.evict_lowest(1);
    CHECK_FALSE(pool.contains(2));
    CHECK(pool.size() == 2);

    Mempool ties(8, 3);
    ties.insert({2, 5});
    ties.insert({1, 5});
    ties.evict_lowest(1);
    CHECK_FALSE(ties.contains(1));
    CHECK(ties.contains(2));

    ties.evict_lowest(ties.size());
    CHECK(ties.empty());
    CHECK_FALSE(ties.lowest());
    CHECK_THROWS_AS(ties.evict_lowest(1), std::invalid_argument);
    ties.audit();
}

TEST_CASE("take_top_fee")
{
    Mempool pool(8, 4);
    pool.insert({1, 3});
    pool.insert({2, 5});
    pool.insert({3, 9});
    CHECK(fees_of(pool.take_top_fee(2)) == std::vector<Fee>{9, 5});
    CHECK(pool.size() == 3);
    CHECK_THROWS_AS(pool.take_top_fee(4), std::invalid_argument);

    auto all = pool.take_top_fee(3);
    std::reverse(all.begin(), all.end());
    CHECK(all == pool.sorted_ascending());
}

TEST_CASE("top 100 of a 10000 pool")
{
    Mempool pool(10000, 4);
    std::vector<Transaction> txs;
    Rng rng(8);
    for (TxId id = 0; id < 10000; ++id) txs.push_back({id, uniform_int(rng, 1, 1000)});
    for (const auto& t : txs) pool.insert(t);
    std::sort(txs.begin(), txs.end(), [](const Transaction& a, const Transaction& b) {
        return a.fee > b.fee || (a.fee == b.fee && a.id > b.id);
    });
    txs.resize(100);
    CHECK(pool.take_top_fee(100) == txs);
}

TEST_CASE("merge_top keeps the best of pool and batch")
{
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t cap = 1 + uniform_int(rng, 0, 60);
        Mempool pool(cap, trial);
        std::vector<Transaction> all;
        TxId next = 0;
        for (int round = 0; round < 6; ++round) {
            std::vector<Transaction> batch;
            const auto n = uniform_int(rng, 0, 40);
            for (std::uint64_t i = 0; i < n; ++i) batch.push_back({next++, uniform_int(rng, 1, 20)});
            all.insert(all.end(), batch.begin(), batch.end());
            std::sort(batch.begin(), batch.end(), [](const Transaction& a, const Transaction& b) {
                return a.fee > b.fee || (a.fee == b.fee && a.id > b.id);
            });
            pool.merge_top(batch);
            pool.audit();
        }
        // nothing is ever removed here, so the pool is the top-cap of everything offered
        std::sort(all.begin(), all.end(), [](const Transaction& a, const Transaction& b) {
            return a.fee > b.fee || (a.fee == b.fee && a.id > b.id);
        });
        if (all.size() > cap) all.resize(cap);
        std::reverse(all.begin(), all.end());
        CHECK(pool.sorted_ascending() == all);
    }

    Mempool pool(4, 1);
    const std::vector<Transaction> unsorted{{1, 1}, {2, 5}};
    CHECK_THROWS_AS(pool.merge_top(unsorted), std::invalid_argument);
}

TEST_CASE("random selection from a single transaction")
{
    for (const auto v : {RandomAccess::Probe, RandomAccess::Begin, RandomAccess::EqualKey}) {
        Mempool pool(16, 7);
        pool.insert({42, 1});
        Rng rng(1);
        CHECK(pool.select_random(rng, v).id == 42);
    }
    Mempool empty(4, 1);
    Rng rng(1);
    CHECK_THROWS_AS(empty.select_random(rng, RandomAccess::Probe), std::logic_error);
}

TEST_CASE("probe over a fully occupied table is close to uniform")
{
    // one entry per bucket: pick ids that land in distinct buckets
    const std::size_t n = 1000;
    Mempool pool(n, 1234, n);
    std::vector<bool> used(n, false);
    std::vector<TxId> ids;
    for (TxId id = 0; ids.size() < n; ++id) {
        const auto b = pool.bucket_index(id);
        if (used[b]) continue;
        used[b] = true;
        ids.push_back(id);
        pool.insert({id, id % 97});
    }
    std::map<TxId, int> counts;
    Rng rng(5);
    for (int i = 0; i < 1000000; ++i) ++counts[pool.select_random(rng, RandomAccess::Probe).id];
    REQUIRE(counts.size() == n);
    int lo = counts.begin()->second, hi = lo;
    for (const auto& [id, c] : counts) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(static_cast<double>(hi) / lo <= 1.35);
}

TEST_CASE("probe frequencies match the enumerated probe order")
{
    // default half-loaded table: gaps make the selection non-uniform, but
    // the exact probabilities follow from the bucket layout
    const std::size_t n = 1000;
    Mempool pool(n, 77);
    std::vector<TxId> ids;
    for (TxId id = 0; id < n; ++id) {
        pool.insert({id * 13 + 5, id});
        ids.push_back(id * 13 + 5);
    }
    const auto exact = probe_oracle(pool, ids);
    double total = 0;
    for (const auto& [id, p] : exact) total += p;
    CHECK(total == doctest::Approx(1.0));

    const int draws = 2000000;
    std::map<TxId, int> counts;
    Rng rng(6);
    for (int i = 0; i < draws; ++i) ++counts[pool.select_random(rng, RandomAccess::Probe).id];
    double worst = 0;
    for (const auto& [id, p] : exact) {
        const double expected = p * draws;
        const double z = std::abs(counts[id] - expected) / std::sqrt(expected * (1 - p));
        worst = std::max(worst, z);
    }
    CHECK(worst < 5.5); // max |z| over 1000 binomial counts
}

TEST_CASE("equal key pools choose in lockstep, salted pools do not")
{
    auto fill = [](Mempool& p) {
        for (TxId id = 0; id < 500; ++id) p.insert({id, id % 50 + 1});
    };
    Mempool a(1000, Mempool::kSharedSalt), b(1000, Mempool::kSharedSalt);
    fill(a);
    fill(b);
    Rng ra(3), rb(3);
    for (int i = 0; i < 1000; ++i)
        CHECK(a.select_random(ra, RandomAccess::EqualKey).id == b.select_random(rb, RandomAccess::EqualKey).id);

    Mempool c(1000, 111), d(1000, 222);
    fill(c);
    fill(d);
    Rng rc(3), rd(3);
    int same = 0;
    for (int i = 0; i < 1000; ++i)
        same += c.select_random(rc, RandomAccess::Probe).id == d.select_random(rd, RandomAccess::Probe).id ? 1 : 0;
    CHECK(same < 50);
}

TEST_CASE("begin scans from bucket zero")
{
    Mempool pool(64, 9);
    std::vector<TxId> ids;
    for (TxId id = 0; id < 40; ++id) {
        pool.insert({id, 1});
        ids.push_back(id);
    }
    std::size_t first = pool.bucket_count();
    for (const TxId id : ids) first = std::min(first, pool.bucket_index(id));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(pool.bucket_index(pool.select_random(rng, RandomAccess::Begin).id) == first);
}

TEST_CASE("exclusions are honoured")
{
    Mempool pool(32, 10);
    for (TxId id = 0; id < 10; ++id) pool.insert({id, 1});
    TxIdSet excluded;
    for (TxId id = 0; id < 10; ++id)
        if (id != 6) excluded.insert(id);
    Rng rng(2);
    for (const auto v : {RandomAccess::Probe, RandomAccess::Begin, RandomAccess::EqualKey})
        CHECK(pool.select_random(rng, v, &excluded).id == 6);
    excluded.insert(6);
    CHECK_THROWS_AS(pool.select_random(rng, RandomAccess::Probe, &excluded), std::logic_error);

    // drawing a whole block's worth without repeats
    TxIdSet chosen;
    for (int k = 0; k < 10; ++k) chosen.insert(pool.select_random(rng, RandomAccess::Probe, &chosen).id);
    CHECK(chosen.size() == 10);
}

TEST_CASE("removed transactions are never selected")
{
    Mempool pool(2000, 12);
    for (TxId id = 0; id < 2000; ++id) pool.insert({id, id % 300});
    for (TxId id = 0; id < 2000; id += 2) pool.remove(id);
    Rng rng(4);
    for (const auto v : {RandomAccess::Probe, RandomAccess::Begin, RandomAccess::EqualKey})
        for (int i = 0; i < 5000; ++i) CHECK(pool.select_random(rng, v).id % 2 == 1);
}

TEST_CASE("mirror holds through random operations")
{
    Rng rng(31);
    Mempool pool(300, 5);
    testing::NaiveMempool oracle(300);
    TxId next = 0;
    for (int op = 0; op < 20000; ++op) {
        const auto kind = uniform_int(rng, 0, 9);
        if (kind < 5 && pool.size() < 300) {
            const Transaction tx{next++, uniform_int(rng, 1, 40)};
            pool.insert(tx);
            oracle.insert(tx);
        } else if (kind < 8) {
            const TxId id = next == 0 ? 0 : uniform_int(rng, 0, next - 1);
            CHECK(pool.remove(id) == oracle.remove(id));
        } else if (kind == 8) {
            const auto k = uniform_int(rng, 0, std::min<std::uint64_t>(pool.size(), 5));
            pool.evict_lowest(k);
            oracle.evict_lowest(k);
        } else {
            const auto k = uniform_int(rng, 0, pool.size());
            CHECK(pool.take_top_fee(k) == oracle.take_top_fee(k));
        }
        pool.audit();
    }
    CHECK(pool.sorted_ascending() == oracle.sorted_ascending());
}

TEST_CASE("footprint splits table and tree")
{
    Mempool pool(10000, 1);
    const auto f = pool.footprint();
    CHECK(f.hashtable_bytes >= 32768 * 4 + 10000 * 20);
    CHECK(f.tree_bytes >= 10000 * 12);
    CHECK(f.total() < 3 * f.hashtable_bytes);
}

TEST_CASE("capacity limits")
{
    CHECK_THROWS_AS(Mempool(std::size_t{1} << 31, 1), std::invalid_argument);
    Mempool zero(0, 1);
    CHECK(zero.empty());
    CHECK(zero.merge_top(std::vector<Transaction>{{1, 1}}) == 0);
}
