#include "aki/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "aki/rng.hpp"

namespace aki {

namespace {

std::pair<std::size_t, std::size_t> class_counts(const std::vector<int>& labels) {
    std::size_t pos = 0;
    for (int y : labels) pos += y != 0;
    return {pos, labels.size() - pos};
}

}  // namespace

std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) return std::nullopt;

    // average ranks with midrank tie handling
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j - 1) + 1.0;  // 1-based midrank
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
        i = j;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k]) rank_sum_pos += rank[k];
    const double n_pos = static_cast<double>(pos), n_neg = static_cast<double>(neg);
    const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    return u / (n_pos * n_neg);
}

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
    const auto [pos, neg] = class_counts(labels);
    (void)neg;
    if (pos == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    std::size_t true_pos = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (!labels[order[rank]]) continue;
        ++true_pos;
        ap += static_cast<double>(true_pos) / static_cast<double>(rank + 1);
    }
    return ap / static_cast<double>(pos);
}

std::optional<double> youden_threshold(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) return std::nullopt;

    std::set<double> candidates(scores.begin(), scores.end());
    double best_j = -2.0, best_threshold = 0.0;
    for (double t : candidates) {  // ascending, so the smallest wins ties
        std::size_t tp = 0, tn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] >= t;
            if (pred && labels[i]) ++tp;
            if (!pred && !labels[i]) ++tn;
        }
        const double j = static_cast<double>(tp) / static_cast<double>(pos) +
                         static_cast<double>(tn) / static_cast<double>(neg) - 1.0;
        if (j > best_j) {
            best_j = j;
            best_threshold = t;
        }
    }
    return best_threshold;
}

ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels, double threshold) {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++tp;
        else if (pred && !labels[i]) ++fp;
        else if (!pred && !labels[i]) ++tn;
        else ++fn;
    }
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    ConfusionMetrics m;
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.ppv = ratio(tp, tp + fp);
    m.npv = ratio(tn, tn + fn);
    m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
    return m;
}

std::vector<const ScoredWindow*> eval_rows(const std::vector<ScoredWindow>& rows) {
    std::vector<const ScoredWindow*> out;
    for (const auto& r : rows)
        if (r.eval_mask) out.push_back(&r);
    return out;
}

namespace {

void split_columns(const std::vector<ScoredWindow>& rows, std::vector<double>& scores,
                   std::vector<int>& labels) {
    for (const auto& r : rows)
        if (r.eval_mask) {
            scores.push_back(r.score);
            labels.push_back(r.label);
        }
}

}  // namespace

std::optional<double> auroc(const std::vector<ScoredWindow>& rows) {
    std::vector<double> s;
    std::vector<int> y;
    split_columns(rows, s, y);
    return auroc(s, y);
}

std::optional<double> auprc(const std::vector<ScoredWindow>& rows) {
    std::vector<double> s;
    std::vector<int> y;
    split_columns(rows, s, y);
    return average_precision(s, y);
}

std::optional<double> youden_threshold(const std::vector<ScoredWindow>& rows) {
    std::vector<double> s;
    std::vector<int> y;
    split_columns(rows, s, y);
    return youden_threshold(s, y);
}

ConfusionMetrics confusion_metrics(const std::vector<ScoredWindow>& rows, double threshold) {
    std::vector<double> s;
    std::vector<int> y;
    split_columns(rows, s, y);
    return confusion_metrics(s, y, threshold);
}

BootstrapInterval bootstrap_ci(const MetricFn& metric, const std::vector<ScoredWindow>& rows,
                               int n_replicates, std::uint64_t seed) {
    // deterministic independent of row order: cluster on sorted encounter ids
    std::map<std::string, std::vector<const ScoredWindow*>> clusters;
    for (const auto& r : rows) clusters[r.encounter_id].push_back(&r);
    std::vector<const std::vector<const ScoredWindow*>*> encounter_rows;
    encounter_rows.reserve(clusters.size());
    for (const auto& [id, group] : clusters) encounter_rows.push_back(&group);

    BootstrapInterval interval;
    if (encounter_rows.empty()) return interval;

    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(n_replicates));
    for (int rep = 0; rep < n_replicates; ++rep) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(rep)));
        std::vector<ScoredWindow> sample;
        for (std::size_t k = 0; k < encounter_rows.size(); ++k) {
            const auto& group = *encounter_rows[rng.uniform_index(encounter_rows.size())];
            for (const auto* r : group) sample.push_back(*r);
        }
        const auto value = metric(sample);
        if (value)
            estimates.push_back(*value);
        else
            interval.undefined_replicates++;
    }
    if (estimates.size() < static_cast<std::size_t>((n_replicates + 1) / 2)) return interval;

    std::sort(estimates.begin(), estimates.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(estimates.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= estimates.size()) return estimates.back();
        return estimates[lo] + (pos - static_cast<double>(lo)) * (estimates[lo + 1] - estimates[lo]);
    };
    interval.low = quantile(0.025);
    interval.high = quantile(0.975);
    return interval;
}

namespace {

MetricEstimate estimate_with_ci(const MetricFn& metric, const std::vector<ScoredWindow>& rows,
                                const EvalOptions& options) {
    MetricEstimate est;
    est.point = metric(rows);
    if (!est.point) return est;
    const auto interval = bootstrap_ci(metric, rows, options.bootstrap_replicates,
                                       options.bootstrap_seed);
    est.ci_low = interval.low;
    est.ci_high = interval.high;
    if (est.ci_low && est.ci_high &&
        (*est.point < *est.ci_low || *est.point > *est.ci_high))
        est.ci_order_violated = true;
    return est;
}

MetricFn auroc_fn() {
    return [](const std::vector<ScoredWindow>& rows) { return auroc(rows); };
}
MetricFn auprc_fn() {
    return [](const std::vector<ScoredWindow>& rows) { return auprc(rows); };
}

}  // namespace

MetricReport evaluate_cohort(const std::vector<ScoredWindow>& rows,
                             std::optional<double> threshold, const EvalOptions& options) {
    MetricReport report;
    const auto masked = eval_rows(rows);
    report.n_windows = masked.size();
    for (const auto* r : masked) report.n_positive += r->label != 0;

    report.auroc = estimate_with_ci(auroc_fn(), rows, options);
    report.auprc = estimate_with_ci(auprc_fn(), rows, options);
    report.threshold = threshold;
    if (threshold) {
        auto conf_metric = [threshold](auto selector) {
            return [threshold, selector](const std::vector<ScoredWindow>& rows_) {
                return selector(confusion_metrics(rows_, *threshold));
            };
        };
        report.sensitivity = estimate_with_ci(
            conf_metric([](const ConfusionMetrics& m) { return m.sensitivity; }), rows, options);
        report.specificity = estimate_with_ci(
            conf_metric([](const ConfusionMetrics& m) { return m.specificity; }), rows, options);
        report.ppv = estimate_with_ci(
            conf_metric([](const ConfusionMetrics& m) { return m.ppv; }), rows, options);
        report.npv = estimate_with_ci(
            conf_metric([](const ConfusionMetrics& m) { return m.npv; }), rows, options);
        report.accuracy = estimate_with_ci(
            conf_metric([](const ConfusionMetrics& m) { return m.accuracy; }), rows, options);
    }

    if (options.subgroups) {
        auto subgroup = [&](const std::string& name, auto predicate) {
            std::vector<ScoredWindow> sub;
            for (const auto& r : rows)
                if (predicate(r)) sub.push_back(r);
            SubgroupReport sr;
            sr.n_windows = eval_rows(sub).size();
            if (sr.n_windows > 0) {
                sr.auroc = estimate_with_ci(auroc_fn(), sub, options);
                sr.auprc = estimate_with_ci(auprc_fn(), sub, options);
            }
            report.subgroups[name] = sr;
        };
        subgroup("female", [](const ScoredWindow& r) { return r.sex == Sex::FEMALE; });
        subgroup("male", [](const ScoredWindow& r) { return r.sex == Sex::MALE; });
        subgroup("african_american",
                 [](const ScoredWindow& r) { return r.race_african_american; });
        subgroup("non_african_american",
                 [](const ScoredWindow& r) { return !r.race_african_american; });
    }
    return report;
}

namespace {

std::string fmt(const std::optional<double>& v) {
    if (!v) return "--";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}

std::string fmt_est(const MetricEstimate& est) {
    std::string out = fmt(est.point);
    if (est.ci_low && est.ci_high)
        out += " (" + fmt(est.ci_low) + ", " + fmt(est.ci_high) + ")";
    if (est.ci_order_violated) out += " [ci-violation]";
    return out;
}

void write_kv(std::ostream& out, const std::string& key, const MetricEstimate& est) {
    if (est.point) out << key << "=" << *est.point << '\n';
    if (est.ci_low) out << key << "_ci_low=" << *est.ci_low << '\n';
    if (est.ci_high) out << key << "_ci_high=" << *est.ci_high << '\n';
}

}  // namespace

void write_report_text(const MetricReport& report, std::ostream& out) {
    out << "model: " << report.model_name << "   test cohort: " << report.cohort_name << '\n';
    out << "eval windows: " << report.n_windows << "   positives: " << report.n_positive << '\n';
    if (report.threshold) out << "threshold (Youden, validation): " << *report.threshold << '\n';
    out << "  Sensitivity  " << fmt_est(report.sensitivity) << '\n';
    out << "  Specificity  " << fmt_est(report.specificity) << '\n';
    out << "  PPV          " << fmt_est(report.ppv) << '\n';
    out << "  NPV          " << fmt_est(report.npv) << '\n';
    out << "  Accuracy     " << fmt_est(report.accuracy) << '\n';
    out << "  AUROC        " << fmt_est(report.auroc) << '\n';
    out << "  AUPRC        " << fmt_est(report.auprc) << '\n';
    if (!report.subgroups.empty()) {
        out << "  subgroup            n        AUROC                    AUPRC\n";
        for (const auto& [name, sr] : report.subgroups) {
            char line[160];
            std::snprintf(line, sizeof(line), "  %-18s %8zu  %-24s %-24s\n", name.c_str(),
                          sr.n_windows, fmt_est(sr.auroc).c_str(), fmt_est(sr.auprc).c_str());
            out << line;
        }
    }
}

void write_report_kv(const MetricReport& report, std::ostream& out) {
    out << "model=" << report.model_name << '\n';
    out << "cohort=" << report.cohort_name << '\n';
    out << "n_windows=" << report.n_windows << '\n';
    out << "n_positive=" << report.n_positive << '\n';
    if (report.threshold) out << "threshold=" << *report.threshold << '\n';
    write_kv(out, "auroc", report.auroc);
    write_kv(out, "auprc", report.auprc);
    write_kv(out, "sensitivity", report.sensitivity);
    write_kv(out, "specificity", report.specificity);
    write_kv(out, "ppv", report.ppv);
    write_kv(out, "npv", report.npv);
    write_kv(out, "accuracy", report.accuracy);
    for (const auto& [name, sr] : report.subgroups) {
        out << "subgroup_" << name << "_n=" << sr.n_windows << '\n';
        write_kv(out, "subgroup_" + name + "_auroc", sr.auroc);
        write_kv(out, "subgroup_" + name + "_auprc", sr.auprc);
    }
}

}  // namespace aki
