#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "dagsim/output.hpp"
#include "dagsim/types.hpp"

namespace dagsim {

// Streams the data file block by block. Only complete blocks (exactly
// block_size rows) are passed on; a short block at the very end, or a final
// line cut off without its newline, is treated as a crash remnant and
// skipped. Anything malformed before that throws std::runtime_error.
// Returns the number of complete blocks read.
std::uint64_t for_each_complete_block(const std::filesystem::path& data_path, std::size_t block_size,
                                      const std::function<void(const std::vector<BlockRecord>&)>& fn);

struct CollisionReport {
    std::uint64_t blocks = 0;
    std::uint64_t total_rows = 0;     // inclusion slots
    std::uint64_t distinct_count = 0; // distinct tx ids included at least once
    std::uint64_t unique_count = 0;   // tx ids included exactly once
    // distinct tx ids included 2, 3, 4, 5 and more than 5 times
    std::array<std::uint64_t, 5> duplicates_histogram{};
    std::uint64_t weighted_duplicate_sum = 0; // sum of (multiplicity - 1)
    double duplication_rate = 0.0;            // weighted_duplicate_sum / total_rows
    std::optional<double> simulated_duration; // last block time, from the metadata trailer
    std::optional<double> effective_throughput; // unique_count / simulated_duration
    std::vector<std::pair<TxId, std::uint32_t>> duplicates; // filled on request, sorted by id
};

inline constexpr std::array<const char*, 5> kHistogramLabels{"2", "3", "4", "5", "5+"};

CollisionReport analyze_collisions(const std::filesystem::path& data_path, bool list_duplicates = false);

struct ProfitRow {
    std::optional<MinerId> miner_id; // nullopt for the merged row
    std::size_t miner_count = 1;
    double mining_power = 0.0; // also the fair share
    std::uint64_t blocks_mined = 0;
    std::uint64_t fee_income = 0;
    std::uint64_t block_reward_income = 0;
    std::uint64_t total = 0;
    double profit_share = 0.0;
};

struct ProfitReport {
    double threshold = 0.0;
    std::uint64_t block_reward = 0;
    std::uint64_t blocks = 0;
    std::uint64_t total_income = 0;
    std::vector<ProfitRow> rows; // individual miners by id, then the merged row if any
};

// Miners with power >= threshold get their own row; the rest are merged.
ProfitReport analyze_profits(const std::filesystem::path& data_path, double power_threshold,
                             std::optional<std::uint64_t> block_reward = std::nullopt);

void write_collision_text(std::ostream& out, const CollisionReport& report);
void write_collision_csv(std::ostream& out, const CollisionReport& report);
void write_profit_text(std::ostream& out, const ProfitReport& report);
void write_profit_csv(std::ostream& out, const ProfitReport& report);

} // namespace dagsim
