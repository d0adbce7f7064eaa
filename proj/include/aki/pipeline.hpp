#pragma once

#include <array>
#include <string>
#include <vector>

#include "aki/attribution.hpp"
#include "aki/exclusions.hpp"
#include "aki/features.hpp"
#include "aki/metrics.hpp"
#include "aki/model.hpp"
#include "aki/split.hpp"
#include "aki/synth.hpp"

namespace aki {

struct SiteSpec {
    std::string name;
    std::string profile_path;   // generator profile
    std::string events_path;    // filled by `synth`, or pointed at external data
    std::string encounters_path;
};

struct AttributionOptions {
    int ig_steps = 50;
    int top_k = 20;
    int max_windows = 2000;  // 0 = attribute every eligible test window
    bool per_step_export = false;
};

struct PipelineConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int day_boundary_offset_hours = 0;
    std::array<double, 4> split_ratios = kDefaultSplitRatios;
    std::uint64_t split_seed = 7;

    std::string registry_path;
    std::string comorbidity_rules_path;
    std::string medication_classes_path;
    std::string charlson_weights_path;

    FeatureConfig features;
    RenalConstants renal;
    ExclusionRules exclusions;
    TrainConfig train;
    EvalOptions evaluate;
    AttributionOptions attribution;
    std::vector<SiteSpec> sites;
    int max_encounters = 0;  // per-site cap for fast runs; 0 = profile value

    static PipelineConfig load(const std::string& path);
    void validate() const;  // throws with the offending key named
    std::string config_hash() const;
    std::string canonical_json() const;

    std::string site_events(const std::string& site) const;
    std::string site_encounters(const std::string& site) const;
    std::string site_truth(const std::string& site) const;
    std::string schema_path(const std::string& scope) const;
    std::string tensors_path(const std::string& scope, const std::string& site) const;
    std::string checkpoint_path(const std::string& scope, bool baseline) const;
};

// A model scope is the set of sites whose development data trains it:
// one site name, or "pooled" for all sites together.
std::vector<std::string> scope_sites(const PipelineConfig& cfg, const std::string& scope);

struct PipelineContext {
    PipelineConfig cfg;
    NephrotoxinRegistry registry;
    FeatureContext features;  // carries rules + phenotype config

    static PipelineContext make(const PipelineConfig& cfg);
};

void run_synth(const PipelineContext& ctx);
void run_label(const PipelineContext& ctx);
void run_featurize(const PipelineContext& ctx, const std::string& scope);
void run_train(const PipelineContext& ctx, const std::string& scope, bool logistic_baseline);
void run_calibrate(const PipelineContext& ctx, const std::string& scope, bool logistic_baseline);
MetricReport run_evaluate(const PipelineContext& ctx, const std::string& scope,
                          const std::string& site, bool logistic_baseline);
void run_evaluate_cross_site(const PipelineContext& ctx);
FeatureRanking run_attribute(const PipelineContext& ctx, const std::string& scope,
                             const std::string& site);
void run_report(const PipelineContext& ctx);

// Scored windows for one site's partition under a scope's model.
std::vector<ScoredWindow> score_partition(const PipelineContext& ctx, const Checkpoint& ckpt,
                                          const std::string& scope, const std::string& site,
                                          Partition partition);

}  // namespace aki
