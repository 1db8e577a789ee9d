#pragma once

// Helpers shared by the test programs.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "dagsim/output.hpp"
#include "dagsim/types.hpp"

namespace testing {

using namespace dagsim;

inline std::vector<NodeSpec> uniform_nodes(std::size_t n)
{
    std::vector<NodeSpec> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back({static_cast<MinerId>(i), 1.0 / static_cast<double>(n), Strategy::HonestRandom});
    return nodes;
}

inline Topology clique(std::size_t n, std::uint32_t delay_ms)
{
    Topology t{uniform_nodes(n), {}};
    for (MinerId a = 0; a < n; ++a)
        for (MinerId b = a + 1; b < n; ++b) t.links.push_back({a, b, delay_ms});
    return t;
}

// node 0 in the middle
inline Topology star(std::size_t leaves, std::uint32_t delay_ms)
{
    Topology t{uniform_nodes(leaves + 1), {}};
    for (MinerId b = 1; b <= leaves; ++b) t.links.push_back({0, b, delay_ms});
    return t;
}

inline Topology path(std::size_t n, std::uint32_t delay_ms)
{
    Topology t{uniform_nodes(n), {}};
    for (MinerId a = 0; a + 1 < n; ++a) t.links.push_back({a, a + 1, delay_ms});
    return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() /
                ("dagsim_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++)))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    static int& counter()
    {
        static int n = 0;
        return n;
    }
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Keeps everything a run produces in memory.
struct MemorySink : RunSink {
    std::optional<RunMetadata> meta;
    std::vector<Block> blocks;
    std::vector<std::string> progress_lines;
    std::optional<RunTrailer> trailer;

    void begin(const RunMetadata& m) override { meta = m; }
    void block(const Block& b) override { blocks.push_back(b); }
    void progress(std::string_view line) override { progress_lines.emplace_back(line); }
    void finish(const RunTrailer& t) override { trailer = t; }
};

// Writes a data file plus metadata for hand-built blocks. Each inner vector
// is one block's (tx_id, fee) list; miners[i] mined block i.
inline void write_run_files(const std::filesystem::path& prefix, const std::vector<std::vector<Transaction>>& blocks,
                            const std::vector<MinerId>& miners, const std::vector<NodeSpec>& nodes,
                            std::optional<double> last_block_time)
{
    const auto paths = OutputPaths::from_prefix(prefix);
    RunMetadata meta;
    meta.config.block_size = blocks.empty() ? 1 : blocks.front().size();
    meta.config.mempool_capacity = std::max<std::size_t>(meta.config.block_size, 1);
    meta.node_count = nodes.size();
    meta.miners = nodes;
    meta.topology_source = "test";
    {
        std::ofstream out(paths.meta);
        write_metadata(out, meta);
        if (last_block_time) write_metadata_trailer(out, {RunStatus::Complete, blocks.size(), *last_block_time});
    }
    std::ofstream data(paths.data);
    data << kDataHeader << '\n';
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (const auto& tx : blocks[b]) write_data_row(data, {tx.id, tx.fee, b, b + 1, miners[b]});
}

// Reference pool: a flat vector, linear scans, sort on demand.
class NaiveMempool {
public:
    explicit NaiveMempool(std::size_t capacity) : capacity_(capacity) {}

    std::size_t size() const { return txs_.size(); }

    void insert(const Transaction& tx)
    {
        if (txs_.size() == capacity_) throw std::logic_error("full");
        for (const auto& t : txs_)
            if (t.id == tx.id) throw std::logic_error("duplicate");
        txs_.push_back(tx);
    }

    bool remove(TxId id)
    {
        for (std::size_t i = 0; i < txs_.size(); ++i) {
            if (txs_[i].id != id) continue;
            txs_.erase(txs_.begin() + static_cast<std::ptrdiff_t>(i));
            return true;
        }
        return false;
    }

    bool contains(TxId id) const
    {
        return std::any_of(txs_.begin(), txs_.end(), [&](const Transaction& t) { return t.id == id; });
    }

    std::vector<Transaction> sorted_ascending() const
    {
        auto out = txs_;
        std::sort(out.begin(), out.end(), [](const Transaction& a, const Transaction& b) {
            return a.fee < b.fee || (a.fee == b.fee && a.id < b.id);
        });
        return out;
    }

    void evict_lowest(std::size_t k)
    {
        if (k > txs_.size()) throw std::invalid_argument("k");
        const auto sorted = sorted_ascending();
        for (std::size_t i = 0; i < k; ++i) remove(sorted[i].id);
    }

    std::vector<Transaction> take_top_fee(std::size_t k) const
    {
        if (k > txs_.size()) throw std::invalid_argument("k");
        auto sorted = sorted_ascending();
        std::reverse(sorted.begin(), sorted.end());
        sorted.resize(k);
        return sorted;
    }

private:
    std::size_t capacity_;
    std::vector<Transaction> txs_;
};

} // namespace testing
