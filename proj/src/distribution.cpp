#include "dagsim/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "text_util.hpp"

namespace dagsim {

DiscreteDistribution::DiscreteDistribution(std::vector<Entry> entries) : entries_(std::move(entries))
{
    if (entries_.empty()) throw std::invalid_argument("distribution has no entries");
    std::set<std::int64_t> values;
    double running = 0.0;
    cumulative_.reserve(entries_.size());
    for (const auto& [value, weight] : entries_) {
        if (!std::isfinite(weight) || weight < 0.0)
            throw std::invalid_argument("distribution weight for value " + std::to_string(value) + " is invalid");
        if (!values.insert(value).second)
            throw std::invalid_argument("distribution value " + std::to_string(value) + " repeats");
        running += weight;
        cumulative_.push_back(running);
    }
    if (!(running > 0.0)) throw std::invalid_argument("distribution total weight is zero");
}

double DiscreteDistribution::mean() const
{
    double acc = 0.0;
    for (const auto& [value, weight] : entries_) acc += static_cast<double>(value) * weight;
    return acc / total_weight();
}

std::int64_t DiscreteDistribution::min_value() const
{
    std::optional<std::int64_t> best;
    for (const auto& e : entries_)
        if (e.second > 0.0 && (!best || e.first < *best)) best = e.first;
    return *best; // the constructor guarantees a positive weight
}

std::int64_t DiscreteDistribution::max_value() const
{
    std::optional<std::int64_t> best;
    for (const auto& e : entries_)
        if (e.second > 0.0 && (!best || e.first > *best)) best = e.first;
    return *best; // the constructor guarantees a positive weight
}

std::int64_t DiscreteDistribution::sample(Rng& rng) const
{
    const double target = uniform01(rng) * total_weight();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    if (idx == entries_.size()) {
        // rounding put target on the total; take the last entry with mass
        idx = entries_.size() - 1;
        while (entries_[idx].second <= 0.0) --idx;
    }
    return entries_[idx].first;
}

DiscreteDistribution parse_distribution(std::istream& in)
{
    std::vector<DiscreteDistribution::Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = text::strip_comment(line);
        if (body.empty()) continue;
        const auto f = text::split_ws(body);
        if (f.size() != 2)
            throw std::runtime_error("distribution line " + std::to_string(line_no) + ": expected 'value weight'");
        try {
            entries.emplace_back(text::parse<std::int64_t>(f[0], "value"), text::parse<double>(f[1], "weight"));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("distribution line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return DiscreteDistribution(std::move(entries));
}

DiscreteDistribution load_distribution(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open distribution file " + path.string());
    return parse_distribution(in);
}

} // namespace dagsim
