#include "dagsim/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "text_util.hpp"

namespace dagsim {

std::uint64_t for_each_complete_block(const std::filesystem::path& data_path, std::size_t block_size,
                                      const std::function<void(const std::vector<BlockRecord>&)>& fn)
{
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open data file " + data_path.string());

    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kDataHeader)
        throw std::runtime_error(data_path.string() + ": missing data header");

    std::vector<BlockRecord> pending;
    pending.reserve(block_size);
    std::uint64_t complete = 0;
    std::size_t line_no = 1;
    auto corrupt = [&](const std::string& what) {
        throw std::runtime_error(data_path.string() + " line " + std::to_string(line_no) + ": " + what);
    };
    auto flush = [&] {
        if (pending.size() != block_size) corrupt("block " + std::to_string(pending.front().block_id) + " is incomplete");
        fn(pending);
        ++complete;
        pending.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        const bool cut_off = in.eof(); // last line without a trailing newline
        if (cut_off) break;
        if (text::trim(line).empty()) continue;
        const auto row = parse_data_row(line);
        if (!row) corrupt("malformed row");
        if (!pending.empty() && row->block_id != pending.front().block_id) {
            if (row->block_id != pending.front().block_id + 1) corrupt("block ids out of order");
            flush();
        } else if (pending.empty() && row->block_id != complete) {
            corrupt("block ids out of order");
        }
        pending.push_back(*row);
        if (pending.size() > block_size) corrupt("block has more than block_size rows");
    }
    if (pending.size() == block_size) flush();
    return complete;
}

CollisionReport analyze_collisions(const std::filesystem::path& data_path, bool list_duplicates)
{
    const auto meta = load_metadata(metadata_path_for(data_path));
    std::unordered_map<TxId, std::uint32_t> multiplicity;
    CollisionReport report;

    report.blocks = for_each_complete_block(data_path, meta.config.block_size, [&](const std::vector<BlockRecord>& rows) {
        for (const auto& r : rows) ++multiplicity[r.tx_id];
        report.total_rows += rows.size();
    });

    report.distinct_count = multiplicity.size();
    for (const auto& [id, count] : multiplicity) {
        if (count == 1) {
            ++report.unique_count;
            continue;
        }
        ++report.duplicates_histogram[std::min<std::uint32_t>(count, 6) - 2];
        report.weighted_duplicate_sum += count - 1;
        if (list_duplicates) report.duplicates.emplace_back(id, count);
    }
    std::sort(report.duplicates.begin(), report.duplicates.end());
    if (report.total_rows > 0)
        report.duplication_rate =
            static_cast<double>(report.weighted_duplicate_sum) / static_cast<double>(report.total_rows);

    if (meta.trailer && meta.trailer->blocks_mined == report.blocks && meta.trailer->last_block_time > 0.0) {
        report.simulated_duration = meta.trailer->last_block_time;
        report.effective_throughput = static_cast<double>(report.unique_count) / meta.trailer->last_block_time;
    }
    return report;
}

ProfitReport analyze_profits(const std::filesystem::path& data_path, double power_threshold,
                             std::optional<std::uint64_t> block_reward)
{
    const auto meta = load_metadata(metadata_path_for(data_path));
    const std::size_t n = meta.miners.size();
    std::vector<std::uint64_t> blocks(n, 0);
    std::vector<std::uint64_t> fees(n, 0);

    ProfitReport report;
    report.threshold = power_threshold;
    report.block_reward = block_reward.value_or(0);
    report.blocks = for_each_complete_block(data_path, meta.config.block_size, [&](const std::vector<BlockRecord>& rows) {
        const MinerId m = rows.front().miner_id;
        if (m >= n) throw std::runtime_error("data file names miner " + std::to_string(m) + " missing from metadata");
        ++blocks[m];
        for (const auto& r : rows) fees[m] += r.tx_fee;
    });

    ProfitRow merged;
    merged.miner_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& miner = meta.miners[i];
        ProfitRow row;
        row.miner_id = miner.miner_id;
        row.mining_power = miner.mining_power;
        row.blocks_mined = blocks[i];
        row.fee_income = fees[i];
        row.block_reward_income = blocks[i] * report.block_reward;
        row.total = row.fee_income + row.block_reward_income;
        report.total_income += row.total;
        if (miner.mining_power >= power_threshold) {
            report.rows.push_back(row);
        } else {
            ++merged.miner_count;
            merged.mining_power += row.mining_power;
            merged.blocks_mined += row.blocks_mined;
            merged.fee_income += row.fee_income;
            merged.block_reward_income += row.block_reward_income;
            merged.total += row.total;
        }
    }
    if (merged.miner_count > 0) report.rows.push_back(merged);

    // with no income at all every share stays 0
    if (report.total_income > 0)
        for (auto& row : report.rows)
            row.profit_share = static_cast<double>(row.total) / static_cast<double>(report.total_income);
    return report;
}

void write_collision_text(std::ostream& out, const CollisionReport& r)
{
    out << "# duplication_rate = sum over duplicated txs of (multiplicity - 1) / total inclusion rows\n"
        << "blocks:                 " << r.blocks << '\n'
        << "inclusion rows:         " << r.total_rows << '\n'
        << "distinct transactions:  " << r.distinct_count << '\n'
        << "unique transactions:    " << r.unique_count << '\n';
    for (std::size_t i = 0; i < r.duplicates_histogram.size(); ++i)
        out << "included " << std::setw(2) << std::left << kHistogramLabels[i] << std::right
            << " times:       " << r.duplicates_histogram[i] << '\n';
    out << "weighted duplicate sum: " << r.weighted_duplicate_sum << '\n'
        << "duplication rate:       " << std::setprecision(6) << r.duplication_rate << '\n';
    if (r.effective_throughput)
        out << "effective throughput:   " << *r.effective_throughput << " tx/s over " << *r.simulated_duration << " s\n";
    else
        out << "effective throughput:   n/a (run did not finish)\n";
    if (!r.duplicates.empty()) {
        out << "duplicated transactions (tx_id multiplicity):\n";
        for (const auto& [id, count] : r.duplicates) out << "  " << id << ' ' << count << '\n';
    }
}

void write_collision_csv(std::ostream& out, const CollisionReport& r)
{
    out << "blocks,total_rows,distinct_count,unique_count,dup_2,dup_3,dup_4,dup_5,dup_5plus,"
           "weighted_duplicate_sum,duplication_rate,simulated_duration,effective_throughput\n";
    out << r.blocks << ',' << r.total_rows << ',' << r.distinct_count << ',' << r.unique_count;
    for (const auto h : r.duplicates_histogram) out << ',' << h;
    out << ',' << r.weighted_duplicate_sum << ',' << text::format_double(r.duplication_rate) << ','
        << (r.simulated_duration ? text::format_double(*r.simulated_duration) : "") << ','
        << (r.effective_throughput ? text::format_double(*r.effective_throughput) : "") << '\n';
}

void write_profit_text(std::ostream& out, const ProfitReport& r)
{
    out << "# threshold " << r.threshold << ", block reward " << r.block_reward << ", " << r.blocks
        << " blocks, total income " << r.total_income << '\n';
    out << std::left << std::setw(16) << "miner" << std::right << std::setw(12) << "power" << std::setw(10)
        << "blocks" << std::setw(16) << "fees" << std::setw(16) << "rewards" << std::setw(12) << "share" << '\n';
    for (const auto& row : r.rows) {
        const std::string name = row.miner_id ? std::to_string(*row.miner_id)
                                              : "merged(" + std::to_string(row.miner_count) + ")";
        out << std::left << std::setw(16) << name << std::right << std::fixed << std::setprecision(6)
            << std::setw(12) << row.mining_power << std::setw(10) << row.blocks_mined << std::setw(16)
            << row.fee_income << std::setw(16) << row.block_reward_income << std::setw(12) << row.profit_share
            << '\n';
        out.unsetf(std::ios::fixed);
    }
}

void write_profit_csv(std::ostream& out, const ProfitReport& r)
{
    out << "miner,miner_count,mining_power,blocks_mined,fee_income,block_reward_income,total,profit_share\n";
    for (const auto& row : r.rows) {
        out << (row.miner_id ? std::to_string(*row.miner_id) : std::string("merged")) << ',' << row.miner_count << ','
            << text::format_double(row.mining_power) << ',' << row.blocks_mined << ',' << row.fee_income << ','
            << row.block_reward_income << ',' << row.total << ',' << text::format_double(row.profit_share) << '\n';
    }
}

} // namespace dagsim
