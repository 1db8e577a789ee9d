#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dagsim/types.hpp"

namespace dagsim {

// Every violated invariant of the configuration and topology, in a fixed
// order. An empty result means the pair is runnable.
std::vector<std::string> validate_config(const SimConfig& config, const Topology& topology);

// Topology text format:
//   nodes <N> links <L>
//   node <miner_id> <mining_power> <honest|malicious>
//   link <a> <b> <delay_ms>
// Lines starting with '#' are comments.
Topology parse_topology(std::istream& in);
void write_topology(std::ostream& out, const Topology& topology);
Topology load_topology(const std::filesystem::path& path);
void save_topology(const std::filesystem::path& path, const Topology& topology);

// Config text format: `key=value` per line, keys named after SimConfig
// fields. Ranges are written `lo,hi`. Missing keys keep their defaults.
SimConfig parse_config(std::istream& in);
void write_config(std::ostream& out, const SimConfig& config);
SimConfig load_config(const std::filesystem::path& path);

// Applies one `key=value` pair. Returns false for an unknown key; throws
// std::invalid_argument for a malformed value.
bool apply_config_key(SimConfig& config, std::string_view key, std::string_view value);

} // namespace dagsim
