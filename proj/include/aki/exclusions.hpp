#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aki/events.hpp"
#include "aki/staging.hpp"

namespace aki {

enum class ExclusionReason { ESKD_OR_LOW_EGFR, NO_EARLY_SCR, SHORT_LOS };

const char* to_string(ExclusionReason r);

struct ExclusionRules {
    std::vector<std::string> eskd_code_prefixes = {"N18.6", "ESKD"};
    double egfr_floor = 15.0;        // mL/min/1.73m^2
    int early_scr_calendar_days = 2; // admission day plus the next day
    Instant min_los = 48 * kHour;
};

struct ExclusionReport {
    std::size_t considered = 0;
    std::size_t included = 0;
    std::size_t eskd_or_low_egfr = 0;
    std::size_t no_early_scr = 0;
    std::size_t short_los = 0;
    std::vector<std::pair<std::string, ExclusionReason>> excluded;  // (encounter_id, reason)
};

// Drops encounters matching, in precedence order: ESKD code or baseline
// eGFR below the floor, then no SCr within the first two calendar days,
// then stay shorter than 48 hours. First matching reason wins.
EventStore apply_exclusions(const EventStore& store, const ExclusionRules& rules,
                            const PhenotypeConfig& pheno, ExclusionReport& report);

void write_exclusion_report(const ExclusionReport& report, std::ostream& out);

}  // namespace aki
