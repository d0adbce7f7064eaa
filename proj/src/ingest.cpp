#include "aki/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace aki {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0' && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (!end || *end != '\0') return false;
    out = static_cast<int>(v);
    return true;
}

struct DedupKey {
    std::string patient;
    Instant t;
    int kind;
    std::string code;
    std::uint64_t value_bits;

    bool operator==(const DedupKey&) const = default;
};

struct DedupHash {
    std::size_t operator()(const DedupKey& k) const {
        std::size_t h = std::hash<std::string>{}(k.patient);
        h = h * 1099511628211ULL ^ std::hash<Instant>{}(k.t);
        h = h * 1099511628211ULL ^ static_cast<std::size_t>(k.kind);
        h = h * 1099511628211ULL ^ std::hash<std::string>{}(k.code);
        h = h * 1099511628211ULL ^ k.value_bits;
        return h;
    }
};

std::uint64_t value_bits(const std::optional<double>& v) {
    if (!v) return 0xFFFFFFFFFFFFFFFFULL;
    std::uint64_t bits;
    double d = *v;
    std::memcpy(&bits, &d, sizeof(bits));
    return bits;
}

}  // namespace

std::vector<ClinicalEvent> read_events(const std::string& path, ParseReport& report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event file: " + path);

    std::vector<ClinicalEvent> events;
    std::unordered_set<DedupKey, DedupHash> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_tabs(line);
        if (f.size() != 7) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, "expected 7 tab-separated fields");
            continue;
        }
        ClinicalEvent e;
        e.patient_id = f[0];
        e.encounter_id = f[1];
        auto t = parse_instant(f[2]);
        if (e.patient_id.empty() || !t) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, !t ? "bad timestamp" : "empty patient_id");
            continue;
        }
        e.timestamp = *t;
        auto kind = event_kind_from_string(f[3]);
        if (!kind || f[4].empty()) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, !kind ? "bad kind" : "empty code");
            continue;
        }
        e.kind = *kind;
        e.code = f[4];
        if (!f[5].empty()) {
            double v;
            if (!parse_double(f[5], v)) {
                report.rejected++;
                report.reject_reasons.emplace_back(lineno, "bad value");
                continue;
            }
            e.value = v;
        }
        if ((e.kind == EventKind::LAB || e.kind == EventKind::VITAL) && !e.value) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, "LAB/VITAL requires a value");
            continue;
        }
        e.unit = f[6];

        DedupKey key{e.patient_id, e.timestamp, static_cast<int>(e.kind), e.code, value_bits(e.value)};
        if (!seen.insert(key).second) {
            report.duplicates_dropped++;
            continue;
        }
        report.accepted++;
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<EncounterRecord> read_encounters(const std::string& path, ParseReport& report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open encounter file: " + path);

    std::vector<EncounterRecord> recs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_tabs(line);
        if (f.size() != 11) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, "expected 11 tab-separated fields");
            continue;
        }
        EncounterRecord r;
        r.encounter_id = f[0];
        r.patient_id = f[1];
        auto admit = parse_instant(f[2]);
        auto discharge = parse_instant(f[3]);
        auto sex = sex_from_string(f[5]);
        auto race = race_from_string(f[6]);
        auto eth = ethnicity_from_string(f[7]);
        double age;
        int adm_src, lang;
        bool ok = !r.encounter_id.empty() && !r.patient_id.empty() && admit && discharge &&
                  parse_double(f[4], age) && sex && race && eth && parse_int(f[8], adm_src) &&
                  parse_int(f[10], lang);
        if (!ok) {
            report.rejected++;
            report.reject_reasons.emplace_back(lineno, "malformed encounter record");
            continue;
        }
        r.admit_time = *admit;
        r.discharge_time = *discharge;
        if (r.discharge_time <= r.admit_time || age < 18.0) {
            report.rejected++;
            report.reject_reasons.emplace_back(
                lineno, age < 18.0 ? "age below 18" : "discharge not after admit");
            continue;
        }
        r.age_years = age;
        r.sex = *sex;
        r.race = *race;
        r.ethnicity = *eth;
        r.admission_source = adm_src;
        r.insurance = f[9];
        r.language = lang;
        report.accepted++;
        recs.push_back(std::move(r));
    }
    return recs;
}

EventStore assemble_store(std::vector<ClinicalEvent> events,
                          std::vector<EncounterRecord> encounters, ParseReport& report) {
    EventStore store;
    for (auto& rec : encounters) {
        auto& pd = store.patients[rec.patient_id];
        pd.encounters.push_back(Encounter{std::move(rec), {}});
    }
    for (auto& [pid, pd] : store.patients) {
        std::stable_sort(pd.encounters.begin(), pd.encounters.end(),
                         [](const Encounter& a, const Encounter& b) {
                             return a.record.admit_time < b.record.admit_time;
                         });
    }
    for (auto& e : events) {
        auto it = store.patients.find(e.patient_id);
        if (e.encounter_id.empty()) {
            if (it == store.patients.end()) {
                report.rejected++;
                report.reject_reasons.emplace_back(0, "event for unknown patient " + e.patient_id);
                continue;
            }
            it->second.pool.push_back(std::move(e));
            continue;
        }
        Encounter* enc = nullptr;
        if (it != store.patients.end()) {
            for (auto& candidate : it->second.encounters)
                if (candidate.record.encounter_id == e.encounter_id) enc = &candidate;
        }
        if (!enc) {
            report.rejected++;
            report.reject_reasons.emplace_back(0, "event for unknown encounter " + e.encounter_id);
            continue;
        }
        if (e.timestamp < enc->record.admit_time || e.timestamp > enc->record.discharge_time) {
            report.rejected++;
            report.reject_reasons.emplace_back(0, "event outside encounter interval " + e.encounter_id);
            continue;
        }
        enc->events.push_back(std::move(e));
    }
    for (auto& [pid, pd] : store.patients) {
        std::stable_sort(pd.pool.begin(), pd.pool.end(),
                         [](const ClinicalEvent& a, const ClinicalEvent& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (auto& enc : pd.encounters)
            std::stable_sort(enc.events.begin(), enc.events.end(),
                             [](const ClinicalEvent& a, const ClinicalEvent& b) {
                                 return a.timestamp < b.timestamp;
                             });
    }
    return store;
}

EventStore ingest(const std::string& events_path, const std::string& encounters_path,
                  ParseReport& report) {
    auto events = read_events(events_path, report);
    auto encounters = read_encounters(encounters_path, report);
    return assemble_store(std::move(events), std::move(encounters), report);
}

std::string format_event(const ClinicalEvent& e) {
    std::string out = e.patient_id;
    out += '\t';
    out += e.encounter_id;
    out += '\t';
    out += format_instant(e.timestamp);
    out += '\t';
    out += to_string(e.kind);
    out += '\t';
    out += e.code;
    out += '\t';
    if (e.value) out += format_double(*e.value);
    out += '\t';
    out += e.unit;
    return out;
}

std::string format_encounter(const EncounterRecord& r) {
    std::string out = r.encounter_id;
    out += '\t';
    out += r.patient_id;
    out += '\t';
    out += format_instant(r.admit_time);
    out += '\t';
    out += format_instant(r.discharge_time);
    out += '\t';
    out += format_double(r.age_years);
    out += '\t';
    out += to_string(r.sex);
    out += '\t';
    out += to_string(r.race);
    out += '\t';
    out += to_string(r.ethnicity);
    out += '\t';
    out += std::to_string(r.admission_source);
    out += '\t';
    out += r.insurance;
    out += '\t';
    out += std::to_string(r.language);
    return out;
}

void write_events(const EventStore& store, std::ostream& out) {
    for (const auto& [pid, pd] : store.patients) {
        for (const auto& e : pd.pool) out << format_event(e) << '\n';
        for (const auto& enc : pd.encounters)
            for (const auto& e : enc.events) out << format_event(e) << '\n';
    }
}

void write_encounters(const EventStore& store, std::ostream& out) {
    for (const auto& [pid, pd] : store.patients)
        for (const auto& enc : pd.encounters) out << format_encounter(enc.record) << '\n';
}

void write_store(const EventStore& store, const std::string& events_path,
                 const std::string& encounters_path) {
    std::ofstream ev(events_path);
    if (!ev) throw std::runtime_error("cannot write " + events_path);
    write_events(store, ev);
    std::ofstream en(encounters_path);
    if (!en) throw std::runtime_error("cannot write " + encounters_path);
    write_encounters(store, en);
}

}  // namespace aki
