#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aki/events.hpp"
#include "aki/renal.hpp"

namespace aki {

enum class AkiStage : int { NONE = 0, STAGE1 = 1, STAGE2 = 2, STAGE3 = 3, STAGE3_RRT = 4 };

inline bool operator<(AkiStage a, AkiStage b) { return static_cast<int>(a) < static_cast<int>(b); }
inline AkiStage max_stage(AkiStage a, AkiStage b) { return a < b ? b : a; }
const char* to_string(AkiStage s);

enum class ReferenceSource { MEASURED_PREADMISSION, ESTIMATED_BACKCALC, ROLLING_UPDATE };

struct ReferenceCreatinine {
    double value = 0.0;  // mg/dL, > 0
    ReferenceSource source = ReferenceSource::ESTIMATED_BACKCALC;
    Instant as_of = 0;
};

struct PhenotypeConfig {
    std::string scr_code = "creatinine";
    RenalConstants renal;
    Instant day_boundary_offset = 0;
};

struct StageBreakpoint {
    Instant time = 0;
    AkiStage stage = AkiStage::NONE;
    double scr = 0.0;  // triggering SCr; 0 for pure RRT breakpoints
    bool rrt = false;
};

// Piecewise-constant stage over an encounter: the stage between consecutive
// breakpoints is the left breakpoint's stage, NONE before the first one.
struct StageTimeline {
    std::string encounter_id;
    Instant admit_time = 0;
    Instant discharge_time = 0;
    std::vector<StageBreakpoint> breakpoints;
    AkiStage worst_stage = AkiStage::NONE;

    AkiStage stage_at(Instant t) const;
    // Max stage over the half-open interval (t0, t1], carry-forward included.
    AkiStage max_stage_over(Instant t0, Instant t1) const;
};

struct WindowLabel {
    std::string encounter_id;
    int window_index = 0;  // window k covers hours [12k, 12k+12) from admission
    bool label = false;          // Stage >= 2 occurs within 48 h after window end
    bool already_severe = false; // stage at window end already >= STAGE2
    bool censored = false;       // < 48 h of observation left and no positive seen
};

struct TransitionTable {
    std::array<std::array<std::uint64_t, 5>, 5> counts{};

    std::uint64_t row_sum(int row) const;
    // Row-normalized probabilities; rows with zero count yield NaN entries.
    std::array<std::array<double, 5>, 5> probabilities() const;
    void merge(const TransitionTable& other);
};

constexpr Instant kWindowStep = 12 * kHour;
constexpr Instant kOutcomeHorizon = 48 * kHour;
constexpr Instant kReferenceLookback = 7 * kDay;
constexpr Instant kRiseLookback = 48 * kHour;

// Timestamped SCr observation used by the staging routines.
struct ScrPoint {
    Instant time = 0;
    double value = 0.0;
};

std::vector<ScrPoint> extract_scr(const std::vector<const ClinicalEvent*>& events,
                                  const std::string& scr_code);

// Minimum of SCr measured from 7 days before admission up to the first
// creatinine on the admission day; back-calculated from the assumed eGFR
// when no such measurement exists.
ReferenceCreatinine initial_reference_creatinine(const EncounterTimeline& tl,
                                                 const PhenotypeConfig& cfg);

// Reference as of t: min(initial value, in-admission SCr minimum over
// [t - 7 d, t]). Source flips to ROLLING_UPDATE when the rolling minimum wins.
ReferenceCreatinine rolling_reference(const ReferenceCreatinine& initial,
                                      const std::vector<ScrPoint>& scr_history, Instant t);

// KDIGO stage for one measurement. lookback_48h holds SCr strictly before t
// within 48 h; rrt_active forces STAGE3_RRT.
AkiStage stage_at_measurement(double scr, const ReferenceCreatinine& ref,
                              const std::vector<double>& lookback_48h, bool rrt_active);

StageTimeline build_stage_timeline(const EncounterTimeline& tl, const PhenotypeConfig& cfg);

std::vector<WindowLabel> label_windows(const StageTimeline& st);

// Row = stage at the window time, column = worst stage among breakpoints in
// the following horizon (clipped at discharge); the carried stage fills the
// diagonal when no new measurement lands in the horizon.
TransitionTable transition_table(const std::vector<StageTimeline>& timelines,
                                 Instant horizon = kOutcomeHorizon, Instant step = kWindowStep);

void write_labels(const std::vector<WindowLabel>& labels, const std::string& path);
void write_transition_table(const TransitionTable& table, std::ostream& out);

}  // namespace aki
