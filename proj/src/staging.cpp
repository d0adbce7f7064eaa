#include "aki/staging.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace aki {

const char* to_string(AkiStage s) {
    switch (s) {
        case AkiStage::NONE: return "NONE";
        case AkiStage::STAGE1: return "STAGE1";
        case AkiStage::STAGE2: return "STAGE2";
        case AkiStage::STAGE3: return "STAGE3";
        case AkiStage::STAGE3_RRT: return "STAGE3_RRT";
    }
    return "?";
}

AkiStage StageTimeline::stage_at(Instant t) const {
    AkiStage s = AkiStage::NONE;
    for (const auto& bp : breakpoints) {
        if (bp.time > t) break;
        s = bp.stage;
    }
    return s;
}

AkiStage StageTimeline::max_stage_over(Instant t0, Instant t1) const {
    if (t1 <= t0) return AkiStage::NONE;  // empty interval
    AkiStage s = stage_at(t0);  // carries into (t0, next breakpoint)
    for (const auto& bp : breakpoints) {
        if (bp.time <= t0) continue;
        if (bp.time > t1) break;
        s = max_stage(s, bp.stage);
    }
    return s;
}

std::uint64_t TransitionTable::row_sum(int row) const {
    std::uint64_t n = 0;
    for (auto c : counts[row]) n += c;
    return n;
}

std::array<std::array<double, 5>, 5> TransitionTable::probabilities() const {
    std::array<std::array<double, 5>, 5> p{};
    for (int r = 0; r < 5; ++r) {
        const double total = static_cast<double>(row_sum(r));
        for (int c = 0; c < 5; ++c)
            p[r][c] = total > 0 ? static_cast<double>(counts[r][c]) / total
                                : std::numeric_limits<double>::quiet_NaN();
    }
    return p;
}

void TransitionTable::merge(const TransitionTable& other) {
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) counts[r][c] += other.counts[r][c];
}

std::vector<ScrPoint> extract_scr(const std::vector<const ClinicalEvent*>& events,
                                  const std::string& scr_code) {
    std::vector<ScrPoint> out;
    for (const auto* e : events)
        if (e->kind == EventKind::LAB && e->code == scr_code && e->value)
            out.push_back({e->timestamp, *e->value});
    return out;
}

ReferenceCreatinine initial_reference_creatinine(const EncounterTimeline& tl,
                                                 const PhenotypeConfig& cfg) {
    const auto& rec = *tl.encounter;
    const Instant admit = rec.admit_time;
    const std::int64_t admit_day = day_index(admit, cfg.day_boundary_offset);

    double min_scr = std::numeric_limits<double>::infinity();
    for (const auto& p : extract_scr(tl.preadmission_events, cfg.scr_code))
        if (p.time >= admit - kReferenceLookback) min_scr = std::min(min_scr, p.value);
    // first creatinine on the admission calendar day also qualifies
    for (const auto& p : extract_scr(tl.admission_events, cfg.scr_code)) {
        if (day_index(p.time, cfg.day_boundary_offset) == admit_day) min_scr = std::min(min_scr, p.value);
        break;  // only the first in-admission SCr is eligible
    }

    if (std::isfinite(min_scr))
        return {min_scr, ReferenceSource::MEASURED_PREADMISSION, admit};

    double est = backcalc_scr(cfg.renal.assumed_egfr_for_backcalc, rec.age_years, rec.sex, cfg.renal);
    return {est, ReferenceSource::ESTIMATED_BACKCALC, admit};
}

ReferenceCreatinine rolling_reference(const ReferenceCreatinine& initial,
                                      const std::vector<ScrPoint>& scr_history, Instant t) {
    double rolling = std::numeric_limits<double>::infinity();
    for (const auto& p : scr_history)
        if (p.time >= t - kReferenceLookback && p.time <= t) rolling = std::min(rolling, p.value);
    if (rolling < initial.value) return {rolling, ReferenceSource::ROLLING_UPDATE, t};
    return {initial.value, initial.source, initial.as_of};
}

AkiStage stage_at_measurement(double scr, const ReferenceCreatinine& ref,
                              const std::vector<double>& lookback_48h, bool rrt_active) {
    if (!(scr > 0.0)) throw std::domain_error("stage_at_measurement: scr must be positive");
    if (rrt_active) return AkiStage::STAGE3_RRT;

    const double ratio = scr / ref.value;
    bool rise_48h = false;
    for (double prior : lookback_48h)
        if (scr - prior >= 0.3) rise_48h = true;
    const bool aki = rise_48h || (scr - ref.value >= 0.3) || (ratio >= 1.5);
    if (!aki) return AkiStage::NONE;
    if (ratio >= 3.0 || scr >= 4.0) return AkiStage::STAGE3;
    if (ratio >= 2.0) return AkiStage::STAGE2;
    return AkiStage::STAGE1;
}

StageTimeline build_stage_timeline(const EncounterTimeline& tl, const PhenotypeConfig& cfg) {
    const auto& rec = *tl.encounter;
    StageTimeline st;
    st.encounter_id = rec.encounter_id;
    st.admit_time = rec.admit_time;
    st.discharge_time = rec.discharge_time;

    const auto scr = extract_scr(tl.admission_events, cfg.scr_code);
    if (scr.empty())
        throw std::logic_error("build_stage_timeline: no in-admission SCr (exclusions not applied?)");
    const auto initial = initial_reference_creatinine(tl, cfg);

    Instant rrt_start = 0;
    bool has_rrt = false;
    for (const auto* e : tl.admission_events)
        if (e->kind == EventKind::DIALYSIS) {
            rrt_start = e->timestamp;
            has_rrt = true;
            break;
        }

    std::size_t i = 0;
    bool rrt_emitted = false;
    while (i < scr.size()) {
        const auto& p = scr[i];
        if (has_rrt && !rrt_emitted && rrt_start <= p.time) {
            st.breakpoints.push_back({rrt_start, AkiStage::STAGE3_RRT, 0.0, true});
            rrt_emitted = true;
            continue;
        }
        if (rrt_emitted) {
            st.breakpoints.push_back({p.time, AkiStage::STAGE3_RRT, p.value, true});
            ++i;
            continue;
        }
        std::vector<ScrPoint> history(scr.begin(), scr.begin() + static_cast<long>(i) + 1);
        const auto ref = rolling_reference(initial, history, p.time);
        std::vector<double> lookback;
        for (std::size_t j = 0; j < i; ++j)
            if (scr[j].time >= p.time - kRiseLookback && scr[j].time < p.time)
                lookback.push_back(scr[j].value);
        st.breakpoints.push_back({p.time, stage_at_measurement(p.value, ref, lookback, false),
                                  p.value, false});
        ++i;
    }
    if (has_rrt && !rrt_emitted)
        st.breakpoints.push_back({rrt_start, AkiStage::STAGE3_RRT, 0.0, true});

    for (const auto& bp : st.breakpoints) st.worst_stage = max_stage(st.worst_stage, bp.stage);
    return st;
}

std::vector<WindowLabel> label_windows(const StageTimeline& st) {
    std::vector<WindowLabel> out;
    for (int k = 0;; ++k) {
        const Instant end = st.admit_time + static_cast<Instant>(k + 1) * kWindowStep;
        if (end > st.discharge_time) break;
        WindowLabel w;
        w.encounter_id = st.encounter_id;
        w.window_index = k;
        const Instant horizon_end = std::min(end + kOutcomeHorizon, st.discharge_time);
        w.label = !(st.max_stage_over(end, horizon_end) < AkiStage::STAGE2);
        w.already_severe = !(st.stage_at(end) < AkiStage::STAGE2);
        w.censored = (st.discharge_time - end < kOutcomeHorizon) && !w.label;
        out.push_back(std::move(w));
    }
    return out;
}

TransitionTable transition_table(const std::vector<StageTimeline>& timelines, Instant horizon,
                                 Instant step) {
    TransitionTable table;
    for (const auto& st : timelines) {
        for (Instant t = st.admit_time; t < st.discharge_time; t += step) {
            const AkiStage row = st.stage_at(t);
            const Instant end = std::min(t + horizon, st.discharge_time);
            AkiStage col = row;  // carried stage when no measurement lands in the horizon
            bool any = false;
            for (const auto& bp : st.breakpoints) {
                if (bp.time <= t) continue;
                if (bp.time > end) break;
                col = any ? max_stage(col, bp.stage) : bp.stage;
                any = true;
            }
            table.counts[static_cast<int>(row)][static_cast<int>(col)]++;
        }
    }
    return table;
}

void write_labels(const std::vector<WindowLabel>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& w : labels)
        out << w.encounter_id << '\t' << w.window_index << '\t' << int(w.label) << '\t'
            << int(w.already_severe) << '\t' << int(w.censored) << '\n';
}

void write_transition_table(const TransitionTable& table, std::ostream& out) {
    static const char* kNames[5] = {"No AKI", "Stage 1", "Stage 2", "Stage 3", "Stage 3 + RRT"};
    out << "AKI stage within next 48 hours\n";
    out << "Current AKI stage";
    for (const auto* n : kNames) out << '\t' << n;
    out << '\n';
    const auto probs = table.probabilities();
    for (int r = 0; r < 5; ++r) {
        out << kNames[r] << " (n=" << table.row_sum(r) << ")";
        for (int c = 0; c < 5; ++c) {
            out << '\t' << table.counts[r][c];
            if (table.row_sum(r) > 0) {
                char pct[32];
                std::snprintf(pct, sizeof(pct), " (%.1f%%)", 100.0 * probs[r][c]);
                out << pct;
            }
        }
        out << '\n';
    }
}

}  // namespace aki
