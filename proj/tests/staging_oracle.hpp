// Test-only brute-force re-derivation of the KDIGO staging rules on a
// 1-hour grid, plus a small randomized encounter fixture generator. Kept
// independent of the production staging path: every rule is re-evaluated
// from scratch with full rescans at each query.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "aki/events.hpp"
#include "aki/renal.hpp"
#include "aki/rng.hpp"
#include "aki/staging.hpp"

namespace oracle {

struct FixtureEncounter {
    aki::EncounterRecord rec;
    std::vector<aki::ClinicalEvent> pre_events;
    std::vector<aki::ClinicalEvent> adm_events;

    aki::EncounterTimeline view() const {
        aki::EncounterTimeline tl;
        tl.encounter = &rec;
        for (const auto& e : pre_events) tl.preadmission_events.push_back(&e);
        for (const auto& e : adm_events) tl.admission_events.push_back(&e);
        return tl;
    }
};

// Random encounter with SCr measurements on whole-hour boundaries so the
// hourly grid sees every stage change. Occasionally plants RRT and
// preadmission creatinines.
inline FixtureEncounter random_encounter(aki::Rng& rng, int index) {
    using namespace aki;
    FixtureEncounter fx;
    fx.rec.patient_id = "op" + std::to_string(index);
    fx.rec.encounter_id = "oe" + std::to_string(index);
    fx.rec.admit_time = *parse_instant("2020-06-01T00:00:00Z") +
                        static_cast<Instant>(rng.uniform_index(24)) * kHour;
    const int los_hours = 48 + static_cast<int>(rng.uniform_index(24 * 9));
    fx.rec.discharge_time = fx.rec.admit_time + los_hours * kHour;
    fx.rec.age_years = 18 + rng.uniform(0.0, 70.0);
    fx.rec.sex = rng.bernoulli(0.5) ? Sex::FEMALE : Sex::MALE;
    fx.rec.race = rng.bernoulli(0.2) ? Race::AFRICAN_AMERICAN : Race::WHITE;

    const double base_scr = rng.uniform(0.5, 1.6);
    auto lab = [&](Instant t, double v, const std::string& enc) {
        ClinicalEvent e;
        e.patient_id = fx.rec.patient_id;
        e.encounter_id = enc;
        e.timestamp = t;
        e.kind = EventKind::LAB;
        e.code = "creatinine";
        e.value = v;
        e.unit = "mg/dL";
        return e;
    };

    const int n_pre = static_cast<int>(rng.uniform_index(4));
    for (int i = 0; i < n_pre; ++i) {
        const Instant t = fx.rec.admit_time - static_cast<Instant>(1 + rng.uniform_index(10 * 24)) * kHour;
        fx.pre_events.push_back(lab(t, base_scr * rng.uniform(0.85, 1.15), ""));
    }
    std::sort(fx.pre_events.begin(), fx.pre_events.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    // random walk over creatinine with occasional jumps into AKI territory
    double scr = base_scr * rng.uniform(0.9, 1.1);
    for (int h = static_cast<int>(rng.uniform_index(12)); h < los_hours;
         h += 6 + static_cast<int>(rng.uniform_index(18))) {
        if (rng.bernoulli(0.18)) scr *= rng.uniform(1.2, 2.2);
        if (rng.bernoulli(0.15)) scr *= rng.uniform(0.55, 0.9);
        scr = std::clamp(scr, 0.3, 9.0);
        fx.adm_events.push_back(lab(fx.rec.admit_time + h * kHour, scr, fx.rec.encounter_id));
    }
    if (fx.adm_events.empty())
        fx.adm_events.push_back(lab(fx.rec.admit_time + 2 * kHour, scr, fx.rec.encounter_id));

    if (rng.bernoulli(0.08)) {
        ClinicalEvent e;
        e.patient_id = fx.rec.patient_id;
        e.encounter_id = fx.rec.encounter_id;
        e.timestamp = fx.rec.admit_time +
                      static_cast<Instant>(rng.uniform_index(los_hours)) * kHour;
        e.kind = EventKind::DIALYSIS;
        e.code = "rrt";
        fx.adm_events.push_back(e);
        std::sort(fx.adm_events.begin(), fx.adm_events.end(),
                  [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    }
    return fx;
}

struct ScrObs {
    aki::Instant t;
    double v;
};

inline double initial_reference_brute(const FixtureEncounter& fx, const aki::PhenotypeConfig& cfg) {
    using namespace aki;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : fx.pre_events)
        if (e.kind == EventKind::LAB && e.code == cfg.scr_code &&
            e.timestamp >= fx.rec.admit_time - 7 * kDay && e.timestamp < fx.rec.admit_time)
            best = std::min(best, *e.value);
    // first in-admission creatinine, if it falls on the admission day
    for (const auto& e : fx.adm_events)
        if (e.kind == EventKind::LAB && e.code == cfg.scr_code) {
            if (day_index(e.timestamp, cfg.day_boundary_offset) ==
                day_index(fx.rec.admit_time, cfg.day_boundary_offset))
                best = std::min(best, *e.value);
            break;
        }
    if (std::isfinite(best)) return best;
    return backcalc_scr(cfg.renal.assumed_egfr_for_backcalc, fx.rec.age_years, fx.rec.sex,
                        cfg.renal);
}

// Stage of the i-th creatinine measurement, every rule rescanned.
inline aki::AkiStage stage_of_measurement_brute(const std::vector<ScrObs>& scr, std::size_t i,
                                                double initial_ref) {
    using namespace aki;
    const double value = scr[i].v;
    double ref = initial_ref;
    for (std::size_t j = 0; j <= i; ++j)
        if (scr[j].t >= scr[i].t - 7 * kDay) ref = std::min(ref, scr[j].v);

    bool rise = false;
    for (std::size_t j = 0; j < i; ++j)
        if (scr[j].t >= scr[i].t - 48 * kHour && scr[j].t < scr[i].t && value - scr[j].v >= 0.3)
            rise = true;
    const double ratio = value / ref;
    const bool aki = rise || (value - ref >= 0.3) || (ratio >= 1.5);
    if (!aki) return AkiStage::NONE;
    if (ratio >= 3.0 || value >= 4.0) return AkiStage::STAGE3;
    if (ratio >= 2.0) return AkiStage::STAGE2;
    return AkiStage::STAGE1;
}

struct BruteStages {
    std::vector<aki::AkiStage> hourly;  // stage at admit + h hours, h = 0..los
    aki::AkiStage worst = aki::AkiStage::NONE;
};

inline BruteStages hourly_stages_brute(const FixtureEncounter& fx, const aki::PhenotypeConfig& cfg) {
    using namespace aki;
    std::vector<ScrObs> scr;
    for (const auto& e : fx.adm_events)
        if (e.kind == EventKind::LAB && e.code == cfg.scr_code) scr.push_back({e.timestamp, *e.value});
    Instant rrt_start = 0;
    bool has_rrt = false;
    for (const auto& e : fx.adm_events)
        if (e.kind == EventKind::DIALYSIS && !has_rrt) {
            has_rrt = true;
            rrt_start = e.timestamp;
        }
    const double initial_ref = initial_reference_brute(fx, cfg);

    BruteStages out;
    const int los_hours = static_cast<int>((fx.rec.discharge_time - fx.rec.admit_time) / kHour);
    for (int h = 0; h <= los_hours; ++h) {
        const Instant now = fx.rec.admit_time + h * kHour;
        AkiStage s = AkiStage::NONE;
        if (has_rrt && rrt_start <= now) {
            s = AkiStage::STAGE3_RRT;
        } else {
            // most recent measurement at or before now
            std::size_t latest = scr.size();
            for (std::size_t i = 0; i < scr.size(); ++i)
                if (scr[i].t <= now) latest = i;
            if (latest != scr.size()) s = stage_of_measurement_brute(scr, latest, initial_ref);
        }
        out.hourly.push_back(s);
        out.worst = max_stage(out.worst, s);
    }
    return out;
}

struct BruteLabel {
    bool label;
    bool already_severe;
    bool censored;
};

inline std::vector<BruteLabel> label_windows_brute(const FixtureEncounter& fx,
                                                   const BruteStages& stages) {
    using namespace aki;
    std::vector<BruteLabel> out;
    const int los_hours = static_cast<int>((fx.rec.discharge_time - fx.rec.admit_time) / kHour);
    for (int k = 0;; ++k) {
        const int end_h = 12 * (k + 1);
        if (end_h > los_hours) break;
        const int horizon_h = std::min(end_h + 48, los_hours);
        AkiStage worst = AkiStage::NONE;
        if (horizon_h > end_h) {
            worst = stages.hourly[end_h];  // carried into the open interval
            for (int h = end_h + 1; h <= horizon_h; ++h) worst = max_stage(worst, stages.hourly[h]);
        }
        BruteLabel l{};
        l.label = !(worst < AkiStage::STAGE2);
        l.already_severe = !(stages.hourly[end_h] < AkiStage::STAGE2);
        l.censored = (los_hours - end_h < 48) && !l.label;
        out.push_back(l);
    }
    return out;
}

}  // namespace oracle
