#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dagsim/random.hpp"

namespace dagsim {

// Finite distribution over integer values with non-negative weights.
class DiscreteDistribution {
public:
    using Entry = std::pair<std::int64_t, double>; // (value, weight)

    // Throws std::invalid_argument when empty, when a weight is negative or
    // non-finite, when all weights are zero, or when a value repeats.
    explicit DiscreteDistribution(std::vector<Entry> entries);

    const std::vector<Entry>& entries() const { return entries_; }
    double total_weight() const { return cumulative_.back(); }
    double mean() const;
    std::int64_t min_value() const;
    std::int64_t max_value() const;

    // One engine draw per call.
    std::int64_t sample(Rng& rng) const;

private:
    std::vector<Entry> entries_;
    std::vector<double> cumulative_;
};

inline std::int64_t sample_discrete(const DiscreteDistribution& dist, Rng& rng) { return dist.sample(rng); }

// Two whitespace-separated columns `value weight`; '#' starts a comment.
DiscreteDistribution parse_distribution(std::istream& in);
DiscreteDistribution load_distribution(const std::filesystem::path& path);

} // namespace dagsim
