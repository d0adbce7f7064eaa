#include "aki/nephrotox.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aki {

double weight_from_nxp(const NxpScore& score) {
    if (score.is_new) return 0.2;
    const double v = score.value;
    for (double eligible : {1.0, 1.5, 2.0, 2.5, 3.0})
        if (std::abs(v - eligible) < 1e-9) return 0.2 + (v - 1.0) * 0.4;
    throw std::domain_error("weight_from_nxp: score must be one of 1.0..3.0 in 0.5 steps or NEW");
}

void NephrotoxinRegistry::add(NephrotoxinEntry entry) {
    entries_[entry.drug_code] = std::move(entry);
}

const NephrotoxinEntry* NephrotoxinRegistry::find(const std::string& drug_code) const {
    auto it = entries_.find(drug_code);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> NephrotoxinRegistry::codes() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [code, entry] : entries_) out.push_back(code);
    return out;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// Parses "2.5", "NEW", or a combination like "1.0+2.5" (max component wins).
std::optional<NxpScore> parse_nxp(const std::string& field) {
    bool any_new = false;
    double best = -1.0;
    for (const auto& part : split(field, '+')) {
        if (part == "NEW") {
            any_new = true;
            continue;
        }
        char* end = nullptr;
        double v = std::strtod(part.c_str(), &end);
        if (!end || *end != '\0') return std::nullopt;
        best = std::max(best, v);
    }
    if (best >= 0.0) return NxpScore::score(best);
    if (any_new) return NxpScore::added();
    return std::nullopt;
}

}  // namespace

NephrotoxinRegistry load_registry(const std::string& path, RegistryLoadReport& report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open nephrotoxin registry: " + path);

    NephrotoxinRegistry registry;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() != 5) {
            report.rejected++;
            report.warnings.push_back("line " + std::to_string(lineno) + ": expected 5 fields");
            continue;
        }
        NephrotoxinEntry e;
        e.drug_code = f[0];
        e.name = f[1];
        auto nxp = parse_nxp(f[2]);
        if (!nxp) {
            report.rejected++;
            report.warnings.push_back("line " + std::to_string(lineno) + ": bad nxp_score");
            continue;
        }
        if (!nxp->is_new && nxp->value < 1.0) {
            report.rejected++;
            report.warnings.push_back("line " + std::to_string(lineno) +
                                      ": nxp_score below 1 is not registry eligible");
            continue;
        }
        e.nxp = *nxp;
        if (f[3].empty()) {
            e.weight = weight_from_nxp(e.nxp);
        } else {
            char* end = nullptr;
            e.weight = std::strtod(f[3].c_str(), &end);
            if (!end || *end != '\0' || e.weight < 0.2 || e.weight > 1.0) {
                report.rejected++;
                report.warnings.push_back("line " + std::to_string(lineno) +
                                          ": weight outside [0.2, 1.0]");
                continue;
            }
        }
        if (!f[4].empty())
            for (auto& route : split(f[4], ',')) e.excluded_routes.insert(route);

        if (registry.find(e.drug_code))
            report.warnings.push_back("duplicate drug_code " + e.drug_code + "; last entry wins");
        report.accepted++;
        registry.add(std::move(e));
    }
    if (registry.empty()) report.warnings.push_back("registry is empty");
    return registry;
}

double daily_burden(const std::vector<const ClinicalEvent*>& med_events_on_day,
                    const NephrotoxinRegistry& registry) {
    std::set<std::string> seen;
    double burden = 0.0;
    for (const auto* e : med_events_on_day) {
        if (e->kind != EventKind::MEDICATION) continue;
        const auto* entry = registry.find(e->code);
        if (!entry) continue;
        // route exclusions: an administration via an excluded route does not count
        if (!e->unit.empty() && entry->excluded_routes.count(e->unit)) continue;
        if (seen.insert(e->code).second) burden += entry->weight;
    }
    return burden;
}

double BurdenSeries::accumulated(std::int64_t day) const {
    double sum = 0.0;
    for (std::int64_t d = day - 6; d <= day; ++d) {
        auto it = daily.find(d);
        if (it != daily.end()) sum += it->second;
    }
    return sum;
}

BurdenSeries burden_series(const EncounterTimeline& tl, const NephrotoxinRegistry& registry,
                           Instant day_boundary_offset) {
    BurdenSeries series;
    series.encounter_id = tl.encounter->encounter_id;

    std::map<std::int64_t, std::vector<const ClinicalEvent*>> by_day;
    auto collect = [&](const std::vector<const ClinicalEvent*>& events) {
        for (const auto* e : events)
            if (e->kind == EventKind::MEDICATION)
                by_day[day_index(e->timestamp, day_boundary_offset)].push_back(e);
    };
    collect(tl.preadmission_events);
    collect(tl.admission_events);

    for (const auto& [day, events] : by_day) {
        double b = daily_burden(events, registry);
        if (b > 0.0) series.daily[day] = b;
    }
    return series;
}

}  // namespace aki
