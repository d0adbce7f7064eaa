#include "aki/split.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aki/rng.hpp"

namespace aki {

const char* to_string(Partition p) {
    switch (p) {
        case Partition::DEVELOPMENT: return "DEVELOPMENT";
        case Partition::VALIDATION: return "VALIDATION";
        case Partition::CALIBRATION: return "CALIBRATION";
        case Partition::TEST: return "TEST";
    }
    return "?";
}

Partition CohortSplit::partition_of(const std::string& patient_id) const {
    auto it = assignment.find(patient_id);
    if (it == assignment.end())
        throw std::out_of_range("split: unknown patient " + patient_id);
    return it->second;
}

CohortSplit split_cohort(const EventStore& store, const std::array<double, 4>& ratios,
                         std::uint64_t seed) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw std::invalid_argument("split_cohort: negative ratio");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_cohort: ratios must sum to 1");

    std::vector<std::string> patients;
    patients.reserve(store.patients.size());
    for (const auto& [pid, pd] : store.patients) patients.push_back(pid);  // map order = sorted

    Rng rng(seed);
    rng.shuffle(patients);

    const auto n = static_cast<double>(patients.size());
    std::array<std::size_t, 4> cuts{};
    double cum = 0.0;
    for (int i = 0; i < 4; ++i) {
        cum += ratios[i];
        cuts[i] = static_cast<std::size_t>(std::llround(cum * n));
    }
    cuts[3] = patients.size();

    CohortSplit split;
    split.seed = seed;
    split.ratios = ratios;
    std::size_t idx = 0;
    for (int part = 0; part < 4; ++part)
        for (; idx < cuts[part]; ++idx)
            split.assignment.emplace(patients[idx], static_cast<Partition>(part));
    return split;
}

}  // namespace aki
