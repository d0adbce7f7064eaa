#include "aki/events.hpp"

#include <algorithm>

namespace aki {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::LAB: return "LAB";
        case EventKind::VITAL: return "VITAL";
        case EventKind::MEDICATION: return "MEDICATION";
        case EventKind::DIALYSIS: return "DIALYSIS";
        case EventKind::DIAGNOSIS: return "DIAGNOSIS";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_string(const std::string& s) {
    if (s == "LAB") return EventKind::LAB;
    if (s == "VITAL") return EventKind::VITAL;
    if (s == "MEDICATION") return EventKind::MEDICATION;
    if (s == "DIALYSIS") return EventKind::DIALYSIS;
    if (s == "DIAGNOSIS") return EventKind::DIAGNOSIS;
    return std::nullopt;
}

const char* to_string(Sex s) { return s == Sex::FEMALE ? "FEMALE" : "MALE"; }

const char* to_string(Race r) {
    switch (r) {
        case Race::WHITE: return "WHITE";
        case Race::AFRICAN_AMERICAN: return "AFRICAN_AMERICAN";
        case Race::OTHER: return "OTHER";
        case Race::MISSING: return "MISSING";
    }
    return "?";
}

const char* to_string(Ethnicity e) {
    switch (e) {
        case Ethnicity::HISPANIC: return "HISPANIC";
        case Ethnicity::NON_HISPANIC: return "NON_HISPANIC";
        case Ethnicity::MISSING: return "MISSING";
    }
    return "?";
}

std::optional<Sex> sex_from_string(const std::string& s) {
    if (s == "FEMALE") return Sex::FEMALE;
    if (s == "MALE") return Sex::MALE;
    return std::nullopt;
}

std::optional<Race> race_from_string(const std::string& s) {
    if (s == "WHITE") return Race::WHITE;
    if (s == "AFRICAN_AMERICAN") return Race::AFRICAN_AMERICAN;
    if (s == "OTHER") return Race::OTHER;
    if (s == "MISSING" || s.empty()) return Race::MISSING;
    return std::nullopt;
}

std::optional<Ethnicity> ethnicity_from_string(const std::string& s) {
    if (s == "HISPANIC") return Ethnicity::HISPANIC;
    if (s == "NON_HISPANIC") return Ethnicity::NON_HISPANIC;
    if (s == "MISSING" || s.empty()) return Ethnicity::MISSING;
    return std::nullopt;
}

std::size_t EventStore::encounter_count() const {
    std::size_t n = 0;
    for (const auto& [id, pd] : patients) n += pd.encounters.size();
    return n;
}

std::size_t EventStore::event_count() const {
    std::size_t n = 0;
    for (const auto& [id, pd] : patients) {
        n += pd.pool.size();
        for (const auto& enc : pd.encounters) n += enc.events.size();
    }
    return n;
}

const Encounter* EventStore::find_encounter(const std::string& encounter_id) const {
    for (const auto& [id, pd] : patients)
        for (const auto& enc : pd.encounters)
            if (enc.record.encounter_id == encounter_id) return &enc;
    return nullptr;
}

EncounterTimeline EventStore::timeline(const EncounterRecord& rec, const PatientData& pd) const {
    EncounterTimeline tl;
    tl.encounter = &rec;
    const Instant lo = rec.admit_time - kPreadmissionLookback;
    for (const auto& e : pd.pool)
        if (e.timestamp >= lo && e.timestamp < rec.admit_time) tl.preadmission_events.push_back(&e);
    for (const auto& enc : pd.encounters)
        if (&enc.record == &rec)
            for (const auto& e : enc.events) tl.admission_events.push_back(&e);
    return tl;
}

std::vector<EncounterTimeline> EventStore::timelines() const {
    std::vector<EncounterTimeline> out;
    for (const auto& [id, pd] : patients)
        for (const auto& enc : pd.encounters) out.push_back(timeline(enc.record, pd));
    return out;
}

}  // namespace aki
