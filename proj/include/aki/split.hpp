#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "aki/events.hpp"

namespace aki {

enum class Partition { DEVELOPMENT = 0, VALIDATION = 1, CALIBRATION = 2, TEST = 3 };

const char* to_string(Partition p);

struct CohortSplit {
    std::map<std::string, Partition> assignment;  // patient_id -> partition
    std::uint64_t seed = 0;
    std::array<double, 4> ratios{};

    Partition partition_of(const std::string& patient_id) const;
};

// Patient-level split: patients sorted by id, shuffled with the seeded PRNG,
// then cut at cumulative-ratio boundaries. All encounters of a patient land
// in one partition.
CohortSplit split_cohort(const EventStore& store, const std::array<double, 4>& ratios,
                         std::uint64_t seed);

constexpr std::array<double, 4> kDefaultSplitRatios{0.70, 0.10, 0.05, 0.15};

}  // namespace aki
