#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagsim/types.hpp"

namespace dagsim {

inline constexpr std::string_view kSimulatorVersion = "1.0.0";
inline constexpr std::string_view kDataHeader = "tx_id,tx_fee,block_id,height,miner_id";

struct BlockRecord {
    TxId tx_id = 0;
    Fee tx_fee = 0;
    BlockId block_id = 0;
    std::uint64_t height = 0;
    MinerId miner_id = 0;

    friend bool operator==(const BlockRecord&, const BlockRecord&) = default;
};

std::string format_data_row(const BlockRecord& record);
void write_data_row(std::ostream& out, const BlockRecord& record);
// nullopt for anything that is not exactly five unsigned integer columns
std::optional<BlockRecord> parse_data_row(std::string_view line);

enum class RunStatus { Complete, InsufficientTransactions };
std::string_view to_string(RunStatus status);

// Appended to the metadata file when a run ends.
struct RunTrailer {
    RunStatus status = RunStatus::Complete;
    std::uint64_t blocks_mined = 0;
    double last_block_time = 0.0;

    friend bool operator==(const RunTrailer&, const RunTrailer&) = default;
};

struct RunMetadata {
    std::string simulator_version{kSimulatorVersion};
    std::uint64_t seed = 0;
    SimConfig config;
    std::string topology_source;
    std::size_t node_count = 0;
    std::size_t link_count = 0;
    std::vector<NodeSpec> miners;
    std::optional<RunTrailer> trailer; // absent when the run never finished

    friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

// Header part: key=value lines followed by `miner <id> <power> <strategy>`.
void write_metadata(std::ostream& out, const RunMetadata& meta);
void write_metadata_trailer(std::ostream& out, const RunTrailer& trailer);
RunMetadata parse_metadata(std::istream& in);
RunMetadata load_metadata(const std::filesystem::path& path);

// "<prefix>.data.csv" -> "<prefix>.meta"
std::filesystem::path metadata_path_for(const std::filesystem::path& data_path);

struct OutputPaths {
    std::filesystem::path data;
    std::filesystem::path meta;
    std::filesystem::path progress;

    static OutputPaths from_prefix(const std::filesystem::path& prefix);
};

// Receives everything a run produces. The default does nothing, which is
// what unit tests driving the engine by hand want.
class RunSink {
public:
    virtual ~RunSink() = default;
    virtual void begin(const RunMetadata&) {}
    virtual void block(const Block&) {}
    virtual void progress(std::string_view) {}
    virtual void finish(const RunTrailer&) {}
};

// Writes <prefix>.data.csv, <prefix>.meta and <prefix>.progress. Data rows
// are flushed once per block so an interrupted run leaves whole blocks.
// Any write failure throws std::runtime_error.
class FileRunSink : public RunSink {
public:
    FileRunSink(const std::filesystem::path& prefix, bool mirror_to_stdout);
    ~FileRunSink() override;

    void begin(const RunMetadata& meta) override;
    void block(const Block& block) override;
    void progress(std::string_view message) override;
    void finish(const RunTrailer& trailer) override;

    const OutputPaths& paths() const { return paths_; }

private:
    void check(std::ostream& stream, const std::filesystem::path& path);

    OutputPaths paths_;
    bool mirror_;
    std::ofstream data_;
    std::ofstream meta_;
    std::ofstream progress_;
    std::chrono::steady_clock::time_point started_;
    std::string row_buffer_;
};

} // namespace dagsim
