#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aki/events.hpp"

namespace aki {

// NxP consensus score of a drug; NEW marks additions without a published
// score (contrast media, recent approvals).
struct NxpScore {
    bool is_new = false;
    double value = 0.0;  // meaningful only when !is_new

    static NxpScore score(double v) { return {false, v}; }
    static NxpScore added() { return {true, 0.0}; }
};

// Linear map of the five eligible scores onto [0.2, 1.0]; NEW entries get 0.2.
double weight_from_nxp(const NxpScore& score);

struct NephrotoxinEntry {
    std::string drug_code;
    std::string name;
    NxpScore nxp;
    double weight = 0.0;  // in [0.2, 1.0]
    std::set<std::string> excluded_routes;
};

struct RegistryLoadReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<std::string> warnings;
};

class NephrotoxinRegistry {
public:
    void add(NephrotoxinEntry entry);  // last entry wins on duplicate codes
    const NephrotoxinEntry* find(const std::string& drug_code) const;
    std::vector<std::string> codes() const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, NephrotoxinEntry> entries_;
};

// Registry file: tab-separated `drug_code  name  nxp_score  weight  excluded_routes`
// with nxp_score either a number or NEW; weight derived from the score when
// the column is empty; excluded_routes comma-joined. Combination products
// list component scores joined by '+' and take the maximum.
NephrotoxinRegistry load_registry(const std::string& path, RegistryLoadReport& report);

// Sum of weights over the distinct registry drugs administered that day;
// repeats of one drug count once.
double daily_burden(const std::vector<const ClinicalEvent*>& med_events_on_day,
                    const NephrotoxinRegistry& registry);

struct BurdenSeries {
    std::string encounter_id;
    std::map<std::int64_t, double> daily;  // day index -> daily burden

    // 7-day sum over day indices d-6..d, missing days contributing zero.
    double accumulated(std::int64_t day) const;
};

// Burdens over all medication events visible to the encounter (preadmission
// days inside any later lookback window included).
BurdenSeries burden_series(const EncounterTimeline& tl, const NephrotoxinRegistry& registry,
                           Instant day_boundary_offset = 0);

}  // namespace aki
