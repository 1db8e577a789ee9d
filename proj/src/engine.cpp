#include "dagsim/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "dagsim/config.hpp"
#include "text_util.hpp"

namespace dagsim {

void EventQueue::push(Event event)
{
    event.seq = next_seq_++;
    heap_.push(event);
}

Event EventQueue::pop()
{
    Event e = heap_.top();
    heap_.pop();
    return e;
}

namespace {

DiscreteDistribution power_distribution(const std::vector<NodeSpec>& nodes)
{
    std::vector<DiscreteDistribution::Entry> entries;
    entries.reserve(nodes.size());
    for (const auto& n : nodes) entries.emplace_back(n.miner_id, n.mining_power);
    return DiscreteDistribution(std::move(entries));
}

std::string describe(const std::vector<std::string>& violations)
{
    std::string out = "invalid simulation setup:";
    for (const auto& v : violations) out += "\n  - " + v;
    return out;
}

bool ranks_above(const Transaction& a, const Transaction& b)
{
    return a.fee > b.fee || (a.fee == b.fee && a.id > b.id);
}

} // namespace

BlockClock::BlockClock(double lambda, const std::vector<NodeSpec>& nodes)
    : lambda_(lambda), winners_(power_distribution(nodes))
{
}

BlockClock::Draw BlockClock::next(Rng& rng) const
{
    Draw d;
    d.delta = exponential(rng, lambda_);
    d.winner = static_cast<MinerId>(winners_.sample(rng));
    return d;
}

Simulation::Simulation(SimConfig config, Topology topology, RunSink& sink, std::string topology_source)
    : config_(std::move(config)),
      topology_(std::move(topology)),
      topology_source_(std::move(topology_source)),
      sink_(sink),
      rng_(config_.rng_seed),
      clock_([&] {
          if (auto v = validate_config(config_, topology_); !v.empty()) throw std::invalid_argument(describe(v));
          return BlockClock(config_.block_interval_lambda, topology_.nodes);
      }())
{
    adjacency_ = build_adjacency(topology_);
    progress_every_ = std::max<std::uint64_t>(1, config_.total_blocks / 10);

    miners_.reserve(topology_.nodes.size());
    for (std::size_t i = 0; i < topology_.nodes.size(); ++i) {
        const std::uint64_t salt =
            config_.random_access_variant == RandomAccess::EqualKey ? Mempool::kSharedSalt : rng_();
        miners_.push_back(MinerState{Mempool(config_.mempool_capacity, salt), 0,
                                     std::vector<bool>(config_.total_blocks, false)});
    }
}

std::vector<Transaction> Simulation::fresh_transactions(std::uint64_t count)
{
    std::vector<Transaction> txs;
    txs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        txs.push_back({next_tx_id_++, uniform_int(rng_, config_.fee_range.lo, config_.fee_range.hi)});
    return txs;
}

// Each pool keeps the best `capacity` of (current contents + txs) by
// (fee, tx_id); a full pool only admits a transaction that outranks what it
// would push out.
void Simulation::insert_everywhere(std::vector<Transaction> txs)
{
    std::sort(txs.begin(), txs.end(), ranks_above);
    for (std::size_t m = 0; m < miners_.size(); ++m) {
        miners_[m].mempool.merge_top(txs);
        audit(static_cast<MinerId>(m));
    }
}

void Simulation::schedule_block()
{
    const auto draw = clock_.next(rng_);
    queue_.push({now_ + draw.delta, 0, EventKind::BlockMined, draw.winner, 0, 0});
}

void Simulation::start()
{
    if (started_) throw std::logic_error("simulation already started");
    started_ = true;

    RunMetadata meta;
    meta.seed = config_.rng_seed;
    meta.config = config_;
    meta.topology_source = topology_source_;
    meta.node_count = topology_.nodes.size();
    meta.link_count = topology_.links.size();
    meta.miners = topology_.nodes;
    sink_.begin(meta);

    std::size_t malicious = 0;
    for (const auto& n : topology_.nodes) malicious += n.strategy == Strategy::MaliciousMaxFee ? 1 : 0;
    {
        std::ostringstream msg;
        msg << "dagsim " << kSimulatorVersion << ": " << topology_.nodes.size() << " miners (" << malicious
            << " malicious), " << topology_.links.size() << " links, seed " << config_.rng_seed;
        sink_.progress(msg.str());
    }
    {
        std::ostringstream msg;
        msg << "lambda " << text::format_double(config_.block_interval_lambda) << " s, " << config_.total_blocks
            << " blocks of " << config_.block_size << " txs, mempool capacity " << config_.mempool_capacity
            << ", random access " << to_string(config_.random_access_variant);
        sink_.progress(msg.str());
    }

    insert_everywhere(fresh_transactions(config_.initial_tx_count));
    sink_.progress("initial transactions: " + std::to_string(config_.initial_tx_count) + " per miner");

    schedule_block();
    const double first_gen = uniform_real(rng_, config_.txgen_delay_range.lo, config_.txgen_delay_range.hi);
    queue_.push({first_gen, 0, EventKind::TxGeneration, 0, 0, 0});
}

bool Simulation::step()
{
    if (!started_) start();
    if (finished_) return false;
    if (queue_.empty()) {
        // unreachable while block and generation events reschedule themselves
        finished_ = true;
        sink_.finish({status_, blocks_.size(), blocks_.empty() ? 0.0 : blocks_.back().mined_at});
        return false;
    }

    const Event e = queue_.pop();
    if (e.time < now_) throw std::logic_error("event clock moved backwards");
    now_ = e.time;

    switch (e.kind) {
    case EventKind::BlockMined:
        if (handle_block_mined(e.miner) == nullptr) return false;
        if (blocks_.size() >= config_.total_blocks) {
            finished_ = true;
            std::ostringstream msg;
            msg << "simulation complete: " << blocks_.size() << " blocks, simulated time "
                << text::format_double(now_) << " s";
            sink_.progress(msg.str());
            sink_.finish({RunStatus::Complete, blocks_.size(), blocks_.back().mined_at});
            return false;
        }
        break;
    case EventKind::BlockDelivery:
        handle_block_delivery(e.block, e.miner, e.from);
        break;
    case EventKind::TxGeneration:
        handle_tx_generation();
        break;
    }
    return true;
}

RunResult Simulation::run()
{
    start();
    while (step()) {
    }
    return result();
}

RunResult Simulation::result() const
{
    return {status_, blocks_.size(), blocks_.empty() ? 0.0 : blocks_.back().mined_at, error_};
}

const Block* Simulation::handle_block_mined(MinerId id)
{
    auto& state = miners_.at(id);
    auto& pool = state.mempool;
    if (pool.size() < config_.block_size) {
        stop_early(id);
        return nullptr;
    }

    Block block;
    block.id = blocks_.size();
    block.miner = id;
    block.mined_at = now_;
    block.height = state.tip_height + 1;
    block.tx_ids.reserve(config_.block_size);
    block.fees.reserve(config_.block_size);

    if (topology_.nodes[id].strategy == Strategy::MaliciousMaxFee) {
        for (const auto& tx : pool.take_top_fee(config_.block_size)) {
            block.tx_ids.push_back(tx.id);
            block.fees.push_back(tx.fee);
        }
    } else {
        TxIdSet chosen;
        chosen.reserve(config_.block_size * 2);
        for (std::size_t k = 0; k < config_.block_size; ++k) {
            const auto tx = pool.select_random(rng_, config_.random_access_variant, &chosen);
            chosen.insert(tx.id);
            block.tx_ids.push_back(tx.id);
            block.fees.push_back(tx.fee);
        }
    }
    pool.remove_all(block.tx_ids);
    state.tip_height = block.height;
    if (block.id < state.seen_blocks.size()) state.seen_blocks[block.id] = true;

    blocks_.push_back(std::move(block));
    const Block& stored = blocks_.back();
    sink_.block(stored);
    emit({TraceEvent::Kind::Mined, now_, stored.id, id, id});

    if ((stored.id + 1) % progress_every_ == 0) {
        std::ostringstream msg;
        msg << "block " << stored.id + 1 << "/" << config_.total_blocks << " mined by miner " << id << " at t="
            << text::format_double(now_) << " s, height " << stored.height;
        sink_.progress(msg.str());
    }

    propagate(stored.id, id, id, false);
    schedule_block();
    audit(id);
    return &stored;
}

void Simulation::propagate(BlockId block, MinerId holder, MinerId skip, bool has_skip)
{
    for (std::size_t k = adjacency_.offsets[holder]; k < adjacency_.offsets[holder + 1]; ++k) {
        const MinerId peer = adjacency_.neighbors[k];
        if (has_skip && peer == skip) continue;
        // a peer that already has the block would drop the delivery; skip the event
        if (miners_[peer].seen(block)) continue;
        queue_.push({now_ + adjacency_.delays_ms[k] / 1000.0, 0, EventKind::BlockDelivery, peer, holder, block});
    }
}

void Simulation::handle_block_delivery(BlockId block_id, MinerId to, MinerId from)
{
    auto& state = miners_.at(to);
    if (state.seen(block_id)) {
        emit({TraceEvent::Kind::Ignored, now_, block_id, to, from});
        return;
    }
    const Block& block = blocks_.at(block_id);
    state.seen_blocks[block_id] = true;
    state.mempool.remove_all(block.tx_ids);
    state.tip_height = std::max(state.tip_height, block.height);
    emit({TraceEvent::Kind::Delivered, now_, block_id, to, from});
    propagate(block_id, to, from, true);
    audit(to);
}

void Simulation::handle_tx_generation()
{
    const auto count = uniform_int(rng_, config_.txgen_count_range.lo, config_.txgen_count_range.hi);
    insert_everywhere(fresh_transactions(count));
    const double delay = uniform_real(rng_, config_.txgen_delay_range.lo, config_.txgen_delay_range.hi);
    queue_.push({now_ + delay, 0, EventKind::TxGeneration, 0, 0, 0});
}

void Simulation::stop_early(MinerId id)
{
    finished_ = true;
    status_ = RunStatus::InsufficientTransactions;
    std::ostringstream err;
    err << "miner " << id << " has " << miners_[id].mempool.size() << " transactions but needs "
        << config_.block_size << " to mine block " << blocks_.size() << " at t=" << text::format_double(now_)
        << " s; stopping early";
    error_ = err.str();
    sink_.progress("error: " + error_);
    sink_.progress("mempool snapshot (miner_id: count, min_fee, max_fee):");
    for (std::size_t m = 0; m < miners_.size(); ++m) {
        const auto& pool = miners_[m].mempool;
        std::ostringstream line;
        line << m << ": " << pool.size() << ", ";
        if (pool.empty()) line << "-, -";
        else line << pool.lowest()->fee << ", " << pool.highest()->fee;
        if (full_dump_ && !pool.empty()) {
            line << " |";
            pool.for_each_ascending([&](const Transaction& tx) { line << ' ' << tx.id << ':' << tx.fee; });
        }
        sink_.progress(line.str());
    }
    sink_.finish({status_, blocks_.size(), blocks_.empty() ? 0.0 : blocks_.back().mined_at});
}

void Simulation::audit(MinerId id) const
{
    if (config_.audit_mempool) miners_[id].mempool.audit();
}

} // namespace dagsim
