#include "dagsim/output.hpp"

#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "dagsim/config.hpp"
#include "text_util.hpp"

namespace dagsim {

std::string format_data_row(const BlockRecord& r)
{
    std::string line;
    line.reserve(48);
    line += std::to_string(r.tx_id);
    line += ',';
    line += std::to_string(r.tx_fee);
    line += ',';
    line += std::to_string(r.block_id);
    line += ',';
    line += std::to_string(r.height);
    line += ',';
    line += std::to_string(r.miner_id);
    return line;
}

void write_data_row(std::ostream& out, const BlockRecord& record) { out << format_data_row(record) << '\n'; }

std::optional<BlockRecord> parse_data_row(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto f = text::split(line, ',');
    if (f.size() != 5) return std::nullopt;
    BlockRecord r;
    if (!text::try_parse(f[0], r.tx_id) || !text::try_parse(f[1], r.tx_fee) || !text::try_parse(f[2], r.block_id) ||
        !text::try_parse(f[3], r.height) || !text::try_parse(f[4], r.miner_id))
        return std::nullopt;
    return r;
}

std::string_view to_string(RunStatus status)
{
    return status == RunStatus::Complete ? "complete" : "insufficient_transactions";
}

void write_metadata(std::ostream& out, const RunMetadata& meta)
{
    out << "simulator_version=" << meta.simulator_version << '\n'
        << "seed=" << meta.seed << '\n'
        << "topology_source=" << meta.topology_source << '\n'
        << "topology_nodes=" << meta.node_count << '\n'
        << "topology_links=" << meta.link_count << '\n';
    write_config(out, meta.config);
    for (const auto& m : meta.miners)
        out << "miner " << m.miner_id << ' ' << text::format_double(m.mining_power) << ' ' << to_string(m.strategy)
            << '\n';
}

void write_metadata_trailer(std::ostream& out, const RunTrailer& trailer)
{
    out << "status=" << to_string(trailer.status) << '\n'
        << "blocks_mined=" << trailer.blocks_mined << '\n'
        << "last_block_time=" << text::format_double(trailer.last_block_time) << '\n';
}

RunMetadata parse_metadata(std::istream& in)
{
    RunMetadata meta;
    meta.simulator_version.clear();
    RunTrailer trailer;
    int trailer_keys = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto where = "metadata line " + std::to_string(line_no) + ": ";
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        try {
            if (body.starts_with("miner ")) {
                const auto f = text::split_ws(body);
                if (f.size() != 4) throw std::invalid_argument("expected 'miner <id> <power> <strategy>'");
                const auto strategy = parse_strategy(f[3]);
                if (!strategy) throw std::invalid_argument("unknown strategy");
                meta.miners.push_back({text::parse<MinerId>(f[1], "miner id"), text::parse<double>(f[2], "power"),
                                       *strategy});
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw std::invalid_argument("expected key=value");
            const auto key = body.substr(0, eq);
            const auto value = body.substr(eq + 1);
            if (key == "simulator_version") meta.simulator_version = std::string(value);
            else if (key == "seed") meta.seed = text::parse<std::uint64_t>(value, key);
            else if (key == "topology_source") meta.topology_source = std::string(value);
            else if (key == "topology_nodes") meta.node_count = text::parse<std::size_t>(value, key);
            else if (key == "topology_links") meta.link_count = text::parse<std::size_t>(value, key);
            else if (key == "status") {
                if (value == "complete") trailer.status = RunStatus::Complete;
                else if (value == "insufficient_transactions") trailer.status = RunStatus::InsufficientTransactions;
                else throw std::invalid_argument("unknown status");
                ++trailer_keys;
            } else if (key == "blocks_mined") {
                trailer.blocks_mined = text::parse<std::uint64_t>(value, key);
                ++trailer_keys;
            } else if (key == "last_block_time") {
                trailer.last_block_time = text::parse<double>(value, key);
                ++trailer_keys;
            } else if (!apply_config_key(meta.config, key, value)) {
                throw std::invalid_argument("unknown key '" + std::string(key) + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + e.what());
        }
    }
    if (trailer_keys == 3) meta.trailer = trailer;
    else if (trailer_keys != 0) throw std::runtime_error("metadata trailer is incomplete");
    if (meta.miners.size() != meta.node_count) throw std::runtime_error("metadata miner list does not match topology_nodes");
    return meta;
}

RunMetadata load_metadata(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metadata file " + path.string());
    return parse_metadata(in);
}

std::filesystem::path metadata_path_for(const std::filesystem::path& data_path)
{
    const std::string name = data_path.filename().string();
    constexpr std::string_view suffix = ".data.csv";
    std::filesystem::path out = data_path;
    if (name.size() > suffix.size() && name.ends_with(suffix))
        out.replace_filename(name.substr(0, name.size() - suffix.size()) + ".meta");
    else
        out.replace_extension(".meta");
    return out;
}

OutputPaths OutputPaths::from_prefix(const std::filesystem::path& prefix)
{
    const std::string p = prefix.string();
    return {p + ".data.csv", p + ".meta", p + ".progress"};
}

FileRunSink::FileRunSink(const std::filesystem::path& prefix, bool mirror_to_stdout)
    : paths_(OutputPaths::from_prefix(prefix)), mirror_(mirror_to_stdout), started_(std::chrono::steady_clock::now())
{
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
    progress_.open(paths_.progress, std::ios::out | std::ios::trunc);
    if (!progress_) throw std::runtime_error("cannot open " + paths_.progress.string());
    data_.open(paths_.data, std::ios::out | std::ios::trunc);
    meta_.open(paths_.meta, std::ios::out | std::ios::trunc);
    if (!data_ || !meta_) {
        progress("error: cannot open output files for prefix " + prefix.string());
        throw std::runtime_error("cannot open output files for prefix " + prefix.string());
    }
}

FileRunSink::~FileRunSink() = default;

void FileRunSink::check(std::ostream& stream, const std::filesystem::path& path)
{
    if (stream.good()) return;
    const auto msg = "error: write failed for " + path.string();
    if (&stream != &progress_) {
        progress_.clear();
        progress(msg);
    }
    throw std::runtime_error(msg);
}

void FileRunSink::begin(const RunMetadata& meta)
{
    write_metadata(meta_, meta);
    meta_.flush();
    check(meta_, paths_.meta);
    data_ << kDataHeader << '\n';
    data_.flush();
    check(data_, paths_.data);
}

void FileRunSink::block(const Block& block)
{
    row_buffer_.clear();
    for (std::size_t i = 0; i < block.tx_ids.size(); ++i) {
        row_buffer_ += format_data_row({block.tx_ids[i], block.fees[i], block.id, block.height, block.miner});
        row_buffer_ += '\n';
    }
    data_.write(row_buffer_.data(), static_cast<std::streamsize>(row_buffer_.size()));
    data_.flush();
    check(data_, paths_.data);
}

void FileRunSink::progress(std::string_view message)
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm local{};
    localtime_r(&now, &local);
    std::ostringstream line;
    line << '[' << std::put_time(&local, "%Y-%m-%d %H:%M:%S") << "] " << message << '\n';
    const auto s = line.str();
    progress_ << s;
    progress_.flush();
    if (mirror_) std::cout << s << std::flush;
    check(progress_, paths_.progress);
}

void FileRunSink::finish(const RunTrailer& trailer)
{
    write_metadata_trailer(meta_, trailer);
    meta_.flush();
    check(meta_, paths_.meta);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    std::ostringstream msg;
    msg << "total duration " << std::fixed << std::setprecision(3) << elapsed << " s";
    progress(msg.str());
}

} // namespace dagsim
