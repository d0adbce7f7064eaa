#pragma once

#include <map>
#include <string>
#include <vector>

#include "aki/events.hpp"
#include "aki/nephrotox.hpp"
#include "aki/rules.hpp"
#include "aki/staging.hpp"

namespace aki {

// Marginal targets and dynamics knobs for one synthetic site.
struct SiteProfile {
    std::string name = "site_a";
    int n_encounters = 5000;
    double age_mean = 55.0, age_sd = 19.0;
    double female_fraction = 0.55;
    double race_white = 0.72, race_african_american = 0.22, race_other = 0.06,
           race_missing = 0.01;
    double hispanic_fraction = 0.04;
    std::map<std::string, double> comorbidity_prevalence;
    double baseline_egfr_median = 97.15, baseline_egfr_q1 = 78.47, baseline_egfr_q3 = 111.81;
    double los_days_median = 5.0, los_days_q1 = 3.0, los_days_q3 = 7.0;
    // worst-stage marginal targets (NONE..STAGE3_RRT), used by validation
    std::array<double, 5> worst_stage_targets{0.86, 0.10, 0.02, 0.011, 0.001};
    double transition_scale = 1.0;        // multiplies all upward hazards
    double nephrotoxin_exposure_rate = 0.35;
    double nephrotoxin_daily_rate = 1.2;  // administrations per exposed day
    double beta_burden = 0.35;            // planted signal coefficients
    double beta_kegfr = 2.0;
    double noise_scale = 0.02;            // lognormal sigma on creatinine
    // planted exclusion-rule violations, as fractions of n_encounters
    double plant_eskd = 0.01, plant_no_early_scr = 0.01, plant_short_los = 0.01;

    void validate() const;
    static SiteProfile from_json_file(const std::string& path);
    std::string to_json() const;
};

struct GroundTruthRow {
    std::string encounter_id;
    double baseline_egfr = 0.0;
    double baseline_scr = 0.0;
    bool nephrotoxin_exposed = false;
    AkiStage latent_worst = AkiStage::NONE;
    std::string planted_exclusion;  // "-", "eskd", "no_early_scr", "short_los"
};

struct SynthOutput {
    std::vector<ClinicalEvent> events;
    std::vector<EncounterRecord> encounters;
    std::vector<GroundTruthRow> truth;
    double beta_burden = 0.0, beta_kegfr = 0.0;
};

// Deterministic for a fixed seed; encounters draw from per-index substreams
// so any subset regenerates identically.
SynthOutput generate_site(const SiteProfile& profile, std::uint64_t seed,
                          const NephrotoxinRegistry& registry, const ComorbidityRules& comorb,
                          const MedicationClassRules& medclass);

void write_ground_truth(const SynthOutput& output, const std::string& path);
std::vector<GroundTruthRow> read_ground_truth(const std::string& path);

enum class MarginalStatus { OK, FAIL, UNDERPOWERED };

struct MarginalCheck {
    std::string name;
    double target = 0.0;
    double observed = 0.0;
    double tolerance = 0.0;
    MarginalStatus status = MarginalStatus::OK;
};

struct MarginalReport {
    std::vector<MarginalCheck> checks;
    bool all_ok() const;
};

// Compares empirical demographics, the latent worst-stage histogram and the
// LOS median against the profile targets. Small samples are marked
// UNDERPOWERED instead of failing.
MarginalReport validate_marginals(const SynthOutput& output, const SiteProfile& profile);

void write_marginal_report(const MarginalReport& report, std::ostream& out);

}  // namespace aki
