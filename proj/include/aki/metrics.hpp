#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aki/events.hpp"

namespace aki {

struct ScoredWindow {
    std::string encounter_id;
    int window_index = 0;
    double score = 0.0;
    int label = 0;
    bool eval_mask = true;  // false once Stage 2+ has already occurred
    Sex sex = Sex::FEMALE;
    bool race_african_american = false;
    std::string site;
};

// ---- low-level metrics over parallel score/label arrays ----

// Rank statistic with ties counted 1/2; absent on single-class input.
std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision (no interpolation), descending stable sort.
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels);

// Observed score maximizing sensitivity + specificity - 1; smallest wins ties.
std::optional<double> youden_threshold(const std::vector<double>& scores,
                                       const std::vector<int>& labels);

struct ConfusionMetrics {
    std::optional<double> sensitivity, specificity, ppv, npv, accuracy;
};

// Predicted positive iff score >= threshold; 0/0 ratios reported absent.
ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels, double threshold);

// ---- masked wrappers over scored windows ----

std::vector<const ScoredWindow*> eval_rows(const std::vector<ScoredWindow>& rows);
std::optional<double> auroc(const std::vector<ScoredWindow>& rows);
std::optional<double> auprc(const std::vector<ScoredWindow>& rows);
std::optional<double> youden_threshold(const std::vector<ScoredWindow>& rows);
ConfusionMetrics confusion_metrics(const std::vector<ScoredWindow>& rows, double threshold);

// ---- bootstrap ----

struct BootstrapInterval {
    std::optional<double> low, high;
    std::size_t undefined_replicates = 0;
};

using MetricFn = std::function<std::optional<double>(const std::vector<ScoredWindow>&)>;

// Cluster bootstrap: encounters resampled with replacement (windows within an
// encounter travel together), replicate r seeded from (seed, r). Replicates
// where the metric is undefined are dropped and counted; the interval is
// absent when more than half are undefined.
BootstrapInterval bootstrap_ci(const MetricFn& metric, const std::vector<ScoredWindow>& rows,
                               int n_replicates, std::uint64_t seed);

struct MetricEstimate {
    std::optional<double> point, ci_low, ci_high;
    bool ci_order_violated = false;  // small-sample bootstrap can cross the point
};

struct SubgroupReport {
    std::size_t n_windows = 0;
    MetricEstimate auroc, auprc;
};

struct MetricReport {
    std::string model_name;
    std::string cohort_name;
    std::size_t n_windows = 0;
    std::size_t n_positive = 0;
    MetricEstimate auroc, auprc, sensitivity, specificity, ppv, npv, accuracy;
    std::optional<double> threshold;
    std::map<std::string, SubgroupReport> subgroups;  // female/male/AA/non-AA
};

struct EvalOptions {
    int bootstrap_replicates = 500;
    std::uint64_t bootstrap_seed = 99;
    bool subgroups = true;
};

// Full Table 2 / Table 3 style evaluation of one scored cohort. The decision
// threshold is fitted elsewhere (validation partition) and passed in.
MetricReport evaluate_cohort(const std::vector<ScoredWindow>& rows,
                             std::optional<double> threshold, const EvalOptions& options);

void write_report_text(const MetricReport& report, std::ostream& out);
void write_report_kv(const MetricReport& report, std::ostream& out);

}  // namespace aki
