#include "aki/exclusions.hpp"

#include <optional>
#include <ostream>

namespace aki {

namespace {

bool has_eskd_code(const EncounterTimeline& tl, const std::vector<std::string>& prefixes) {
    auto matches = [&](const ClinicalEvent& e) {
        if (e.kind != EventKind::DIAGNOSIS) return false;
        for (const auto& p : prefixes)
            if (e.code.rfind(p, 0) == 0) return true;
        return false;
    };
    for (const auto* e : tl.preadmission_events)
        if (matches(*e)) return true;
    for (const auto* e : tl.admission_events)
        if (matches(*e)) return true;
    return false;
}

bool has_early_scr(const EncounterTimeline& tl, const PhenotypeConfig& pheno, int calendar_days) {
    const std::int64_t admit_day = day_index(tl.encounter->admit_time, pheno.day_boundary_offset);
    for (const auto& p : extract_scr(tl.admission_events, pheno.scr_code)) {
        const std::int64_t d = day_index(p.time, pheno.day_boundary_offset);
        if (d - admit_day < calendar_days) return true;
    }
    return false;
}

std::optional<ExclusionReason> first_matching_reason(const EncounterTimeline& tl,
                                                     const ExclusionRules& rules,
                                                     const PhenotypeConfig& pheno) {
    if (has_eskd_code(tl, rules.eskd_code_prefixes)) return ExclusionReason::ESKD_OR_LOW_EGFR;
    const auto ref = initial_reference_creatinine(tl, pheno);
    const double baseline_egfr =
        egfr_ckdepi_2021(ref.value, tl.encounter->age_years, tl.encounter->sex, pheno.renal);
    if (baseline_egfr < rules.egfr_floor) return ExclusionReason::ESKD_OR_LOW_EGFR;
    if (!has_early_scr(tl, pheno, rules.early_scr_calendar_days))
        return ExclusionReason::NO_EARLY_SCR;
    if (tl.encounter->los() < rules.min_los) return ExclusionReason::SHORT_LOS;
    return std::nullopt;
}

}  // namespace

const char* to_string(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::ESKD_OR_LOW_EGFR: return "ESKD_OR_LOW_EGFR";
        case ExclusionReason::NO_EARLY_SCR: return "NO_EARLY_SCR";
        case ExclusionReason::SHORT_LOS: return "SHORT_LOS";
    }
    return "?";
}

EventStore apply_exclusions(const EventStore& store, const ExclusionRules& rules,
                            const PhenotypeConfig& pheno, ExclusionReport& report) {
    EventStore included;
    for (const auto& [pid, pd] : store.patients) {
        PatientData kept;
        kept.pool = pd.pool;
        for (const auto& enc : pd.encounters) {
            report.considered++;
            const auto tl = store.timeline(enc.record, pd);
            const auto reason = first_matching_reason(tl, rules, pheno);
            if (!reason) {
                kept.encounters.push_back(enc);
                report.included++;
                continue;
            }
            report.excluded.emplace_back(enc.record.encounter_id, *reason);
            switch (*reason) {
                case ExclusionReason::ESKD_OR_LOW_EGFR: report.eskd_or_low_egfr++; break;
                case ExclusionReason::NO_EARLY_SCR: report.no_early_scr++; break;
                case ExclusionReason::SHORT_LOS: report.short_los++; break;
            }
        }
        if (!kept.encounters.empty()) included.patients.emplace(pid, std::move(kept));
    }
    return included;
}

void write_exclusion_report(const ExclusionReport& report, std::ostream& out) {
    for (const auto& [id, reason] : report.excluded) out << id << '\t' << to_string(reason) << '\n';
    out << "# encounters considered: " << report.considered << '\n';
    out << "# excluded ESKD or baseline eGFR < 15: " << report.eskd_or_low_egfr << '\n';
    out << "# excluded no SCr within first two days: " << report.no_early_scr << '\n';
    out << "# excluded length of stay < 48 h: " << report.short_los << '\n';
    out << "# encounters included: " << report.included << '\n';
}

}  // namespace aki
