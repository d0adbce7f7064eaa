#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aki/time.hpp"

namespace aki {

enum class EventKind { LAB, VITAL, MEDICATION, DIALYSIS, DIAGNOSIS };

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(const std::string& s);

struct ClinicalEvent {
    std::string patient_id;
    std::string encounter_id;  // empty for patient-level (preadmission) events
    Instant timestamp = 0;
    EventKind kind = EventKind::LAB;
    std::string code;
    std::optional<double> value;
    std::string unit;
};

enum class Sex { FEMALE, MALE };
enum class Race { WHITE, AFRICAN_AMERICAN, OTHER, MISSING };
enum class Ethnicity { HISPANIC, NON_HISPANIC, MISSING };

const char* to_string(Sex s);
const char* to_string(Race r);
const char* to_string(Ethnicity e);
std::optional<Sex> sex_from_string(const std::string& s);
std::optional<Race> race_from_string(const std::string& s);
std::optional<Ethnicity> ethnicity_from_string(const std::string& s);

struct EncounterRecord {
    std::string encounter_id;
    std::string patient_id;
    Instant admit_time = 0;
    Instant discharge_time = 0;
    double age_years = 0.0;
    Sex sex = Sex::FEMALE;
    Race race = Race::MISSING;
    Ethnicity ethnicity = Ethnicity::MISSING;
    int admission_source = 0;  // binary
    std::string insurance;
    int language = 0;  // binary: primary language flag

    Instant los() const { return discharge_time - admit_time; }
};

struct Encounter {
    EncounterRecord record;
    std::vector<ClinicalEvent> events;  // tagged with this encounter, time ordered
};

struct PatientData {
    std::vector<ClinicalEvent> pool;  // untagged patient-level events, time ordered
    std::vector<Encounter> encounters;
};

// Materialized per-encounter view: preadmission events restricted to the
// 365 days before admission, strictly before admit_time.
struct EncounterTimeline {
    const EncounterRecord* encounter = nullptr;
    std::vector<const ClinicalEvent*> preadmission_events;
    std::vector<const ClinicalEvent*> admission_events;
};

struct EventStore {
    std::map<std::string, PatientData> patients;

    std::size_t encounter_count() const;
    std::size_t event_count() const;
    const Encounter* find_encounter(const std::string& encounter_id) const;

    // All timelines across all patients, encounter order by (patient, admit).
    std::vector<EncounterTimeline> timelines() const;
    EncounterTimeline timeline(const EncounterRecord& rec, const PatientData& pd) const;
};

constexpr Instant kPreadmissionLookback = 365 * kDay;

}  // namespace aki
