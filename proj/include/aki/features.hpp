#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "aki/events.hpp"
#include "aki/nephrotox.hpp"
#include "aki/rules.hpp"
#include "aki/split.hpp"
#include "aki/staging.hpp"

namespace aki {

struct FeatureConfig {
    std::vector<std::string> vitals = {"map", "temperature", "respiratory_rate", "heart_rate"};
    // 12-hour mean labs: basic metabolic panel, complete blood count, albumin,
    // total bilirubin
    std::vector<std::string> dynamic_labs = {
        "sodium",     "potassium", "carbon_dioxide", "chloride",
        "glucose",    "calcium",   "urea_nitrogen",  "wbc",
        "hemoglobin", "hematocrit", "platelets",     "platelet_mean_volume",
        "mcv",        "rdw",       "albumin",        "bilirubin_total"};
    std::vector<std::string> panel_count_labs = {"glucose", "hemoglobin", "albumin"};
    // preadmission history aggregates (count/mean/variance/min/max per lab)
    std::vector<std::string> static_labs = {"creatinine", "urea_nitrogen", "hemoglobin",
                                            "sodium",     "potassium",     "albumin"};
    std::string scr_code = "creatinine";
};

enum class FeatureKind { NUMERIC, BINARY, ONE_HOT };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::NUMERIC;
};

struct LabAggregate {
    double count = 0.0;
    double mean = 0.0, variance = 0.0, min = 0.0, max = 0.0;  // NaN when count == 0
};

// Schema-independent extraction of one encounter. Categorical fields stay
// symbolic until the schema (which knows the discovered insurance levels)
// encodes them.
struct StaticRaw {
    double age = 0.0;
    Sex sex = Sex::FEMALE;
    Race race = Race::MISSING;
    Ethnicity ethnicity = Ethnicity::MISSING;
    int language = 0;
    std::string insurance;
    int admission_source = 0;
    std::map<std::string, bool> comorbidities;
    int charlson_index = 0;
    std::map<std::string, bool> medication_classes;
    bool nephrotoxic_history = false;
    int total_medication_types = 0;
    std::map<std::string, LabAggregate> lab_history;
    int admit_month = 1;    // 1..12
    int admit_weekday = 0;  // 0 = Monday
};

struct EncounterRaw {
    std::string encounter_id;
    std::string patient_id;
    std::string site;
    Partition partition = Partition::DEVELOPMENT;
    Sex sex = Sex::FEMALE;
    bool race_african_american = false;

    StaticRaw static_raw;
    // one row per 12-h window, full dynamic layout, NaN = missing after
    // carry-forward
    std::vector<std::vector<double>> dynamic_rows;
    std::vector<WindowLabel> window_labels;
};

struct FeatureStats {
    double cap_low = 0.0, cap_high = 0.0;  // 1st / 99th percentile
    double median = 0.0;
    double mean = 0.0, stddev = 1.0;
};

class FeatureSchema {
public:
    std::vector<FeatureSpec> static_features;   // kept features, fixed order
    std::vector<FeatureSpec> dynamic_features;
    std::vector<int> static_source_index;       // into the full static layout
    std::vector<int> dynamic_source_index;      // into the full dynamic layout
    std::map<std::string, FeatureStats> stats;  // numeric features only
    std::vector<std::string> insurance_levels;  // discovered on the development set
    std::vector<std::string> dropped_constant;  // names removed at fit time
    std::string version_hash;

    std::string compute_hash() const;
    std::string to_json() const;
    static FeatureSchema from_json(const std::string& text);
    void save(const std::string& path) const;
    static FeatureSchema load(const std::string& path);
};

struct EncounterTensor {
    std::string encounter_id;
    std::string patient_id;
    std::string site;
    Partition partition = Partition::DEVELOPMENT;
    Sex sex = Sex::FEMALE;
    bool race_african_american = false;

    Eigen::VectorXd static_vec;
    std::vector<Eigen::VectorXd> steps;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> already_severe;  // eval mask = !already_severe
    std::vector<std::uint8_t> censored;
};

// Full (pre-drop) feature layouts. Static layout depends on the discovered
// insurance levels; dynamic layout is fixed by the config.
std::vector<FeatureSpec> static_feature_layout(const FeatureConfig& cfg,
                                               const ComorbidityRules& comorb,
                                               const MedicationClassRules& medclass,
                                               const std::vector<std::string>& insurance_levels);
std::vector<FeatureSpec> dynamic_feature_layout(const FeatureConfig& cfg);

// Population variance; single observation yields 0, empty yields NaN.
LabAggregate aggregate_values(const std::vector<double>& values);

struct FeatureContext {
    FeatureConfig config;
    PhenotypeConfig pheno;
    ComorbidityRules comorbidity;
    CharlsonWeights charlson;
    MedicationClassRules medication_classes;
    const NephrotoxinRegistry* registry = nullptr;
};

EncounterRaw derive_encounter_raw(const EncounterTimeline& tl, const FeatureContext& ctx,
                                  const std::string& site, Partition partition);

// Fits caps, medians and scaling on development encounters only; any other
// partition tag is rejected. Constant numeric features are dropped.
FeatureSchema fit_schema(const std::vector<EncounterRaw>& development,
                         const FeatureContext& ctx);

EncounterTensor apply_schema(const EncounterRaw& raw, const FeatureSchema& schema,
                             const FeatureContext& ctx);

// Materialized full-layout vectors (pre cap/impute/scale); used by fit and
// by apply before column selection.
std::vector<double> materialize_static(const StaticRaw& raw, const FeatureConfig& cfg,
                                       const ComorbidityRules& comorb,
                                       const MedicationClassRules& medclass,
                                       const std::vector<std::string>& insurance_levels);

// Linear-interpolation percentile (index = q * (n - 1) on the sorted values).
double percentile(std::vector<double> values, double q);

void write_tensors(const std::vector<EncounterTensor>& tensors, const std::string& schema_hash,
                   const std::string& path);
std::vector<EncounterTensor> read_tensors(const std::string& path, std::string& schema_hash);
void export_tensors_tsv(const std::vector<EncounterTensor>& tensors, const FeatureSchema& schema,
                        const std::string& path);

}  // namespace aki
