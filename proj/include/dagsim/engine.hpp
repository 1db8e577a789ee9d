#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "dagsim/distribution.hpp"
#include "dagsim/mempool.hpp"
#include "dagsim/output.hpp"
#include "dagsim/random.hpp"
#include "dagsim/types.hpp"

namespace dagsim {

enum class EventKind : std::uint8_t { BlockMined, BlockDelivery, TxGeneration };

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0; // assigned by the queue
    EventKind kind = EventKind::TxGeneration;
    MinerId miner = 0; // BlockMined: the winner; BlockDelivery: the recipient
    MinerId from = 0;  // BlockDelivery: the peer that sent it
    BlockId block = 0;
};

// Min-queue on (time, seq); seq increases with every push, so equal-time
// events pop in the order they were scheduled.
class EventQueue {
public:
    void push(Event event);
    Event pop();
    const Event& top() const { return heap_.top(); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            return a.time > b.time || (a.time == b.time && a.seq > b.seq);
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

// Network-wide block clock: exponential gaps with mean lambda, winner drawn
// in proportion to mining power. By Poisson superposition this matches one
// exponential clock of rate power/lambda per miner.
class BlockClock {
public:
    struct Draw {
        double delta = 0.0;
        MinerId winner = 0;
    };

    BlockClock(double lambda, const std::vector<NodeSpec>& nodes);
    Draw next(Rng& rng) const;

private:
    double lambda_;
    DiscreteDistribution winners_;
};

inline BlockClock::Draw schedule_next_block(const BlockClock& clock, Rng& rng) { return clock.next(rng); }

struct MinerState {
    Mempool mempool;
    std::uint64_t tip_height = 0;
    std::vector<bool> seen_blocks; // indexed by block id

    bool seen(BlockId id) const { return id < seen_blocks.size() && seen_blocks[id]; }
};

struct TraceEvent {
    enum class Kind { Mined, Delivered, Ignored };
    Kind kind = Kind::Mined;
    double time = 0.0;
    BlockId block = 0;
    MinerId miner = 0; // the miner for Mined, the recipient otherwise
    MinerId from = 0;
};

struct RunResult {
    RunStatus status = RunStatus::Complete;
    std::uint64_t blocks_mined = 0;
    double last_block_time = 0.0;
    std::string error;
};

// One simulation run. Single-threaded; owns every miner's state and draws
// all randomness from one stream in event-processing order.
class Simulation {
public:
    // Throws std::invalid_argument listing every validate_config violation.
    Simulation(SimConfig config, Topology topology, RunSink& sink, std::string topology_source = {});

    RunResult run();

    // run() is start() followed by step() until it returns false.
    void start();
    bool step();
    bool finished() const { return finished_; }
    RunResult result() const;

    // Event handlers. handle_block_mined returns nullptr when the miner has
    // too few transactions, which ends the run early.
    const Block* handle_block_mined(MinerId miner);
    void handle_block_delivery(BlockId block, MinerId to, MinerId from);
    void handle_tx_generation();

    void set_trace(std::function<void(const TraceEvent&)> trace) { trace_ = std::move(trace); }
    void set_full_mempool_dump(bool enabled) { full_dump_ = enabled; }

    double now() const { return now_; }
    const SimConfig& config() const { return config_; }
    const Topology& topology() const { return topology_; }
    const MinerState& miner(MinerId id) const { return miners_.at(id); }
    Mempool& mempool(MinerId id) { return miners_.at(id).mempool; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const EventQueue& queue() const { return queue_; }
    EventQueue& queue() { return queue_; }
    TxId next_tx_id() const { return next_tx_id_; }

private:
    void insert_everywhere(std::vector<Transaction> txs);
    std::vector<Transaction> fresh_transactions(std::uint64_t count);
    void schedule_block();
    void propagate(BlockId block, MinerId holder, MinerId skip, bool has_skip);
    void stop_early(MinerId miner);
    void audit(MinerId id) const;
    void emit(const TraceEvent& e) const
    {
        if (trace_) trace_(e);
    }

    SimConfig config_;
    Topology topology_;
    std::string topology_source_;
    Adjacency adjacency_;
    RunSink& sink_;
    Rng rng_;
    BlockClock clock_;
    EventQueue queue_;
    std::vector<MinerState> miners_;
    std::vector<Block> blocks_;
    TxId next_tx_id_ = 0;
    double now_ = 0.0;
    bool started_ = false;
    bool finished_ = false;
    RunStatus status_ = RunStatus::Complete;
    std::string error_;
    std::uint64_t progress_every_ = 1;
    bool full_dump_ = false;
    std::function<void(const TraceEvent&)> trace_;
};

} // namespace dagsim
