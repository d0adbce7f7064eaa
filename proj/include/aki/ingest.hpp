#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aki/events.hpp"

namespace aki {

struct ParseReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t duplicates_dropped = 0;
    std::vector<std::pair<std::size_t, std::string>> reject_reasons;  // (line no, reason)
};

// Event file: UTF-8 newline-delimited, tab-separated
//   patient_id  encounter_id  timestamp  kind  code  value  unit
// Absent value/unit are empty fields. Malformed lines are skipped and
// counted; exact duplicates (patient, timestamp, kind, code, value) kept once.
std::vector<ClinicalEvent> read_events(const std::string& path, ParseReport& report);

// Encounter file: tab-separated
//   encounter_id patient_id admit discharge age sex race ethnicity admission_source insurance language
std::vector<EncounterRecord> read_encounters(const std::string& path, ParseReport& report);

// Groups events by patient/encounter and sorts by timestamp (stable: input
// order breaks ties). Tagged events outside [admit, discharge] are rejected.
EventStore assemble_store(std::vector<ClinicalEvent> events,
                          std::vector<EncounterRecord> encounters,
                          ParseReport& report);

EventStore ingest(const std::string& events_path, const std::string& encounters_path,
                  ParseReport& report);

void write_events(const EventStore& store, std::ostream& out);
void write_encounters(const EventStore& store, std::ostream& out);
void write_store(const EventStore& store, const std::string& events_path,
                 const std::string& encounters_path);

std::string format_event(const ClinicalEvent& e);
std::string format_encounter(const EncounterRecord& r);

}  // namespace aki
