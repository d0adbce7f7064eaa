// Pipeline driver: synthetic two-site cohorts in, risk reports out. Each
// subcommand reads and writes files only, so stages can be re-run in any
// order once their inputs exist.
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aki/pipeline.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    int max_encounters = -1;  // -1 = use config value
    aki::PipelineConfig load() const {
        auto cfg = aki::PipelineConfig::load(config_path);
        if (max_encounters >= 0) cfg.max_encounters = max_encounters;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous 48-hour kidney-injury risk pipeline"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("-c,--config", args.config_path, "pipeline config (JSON)")->required();
    app.add_option("--max-encounters", args.max_encounters,
                   "cap encounters per site for fast runs");

    std::string scope = "site_a";
    std::string site = "site_a";
    bool baseline = false;
    bool cross_site = false;
    bool per_step = false;
    std::string baseline_kind;

    auto* synth = app.add_subcommand("synth", "generate the two-site synthetic cohorts");
    auto* label = app.add_subcommand("label", "stage timelines, window labels, transition tables");
    auto* featurize = app.add_subcommand("featurize", "fit the feature schema and build tensors");
    featurize->add_option("--scope", scope, "model scope: a site name or 'pooled'");
    auto* train = app.add_subcommand("train", "train the risk model for one scope");
    train->add_option("--scope", scope, "model scope: a site name or 'pooled'");
    train->add_option("--baseline", baseline_kind, "train a baseline instead ('logistic')");
    auto* calibrate = app.add_subcommand("calibrate", "fit isotonic calibration on the hold-out set");
    calibrate->add_option("--scope", scope, "model scope");
    calibrate->add_flag("--logistic", baseline, "calibrate the logistic baseline checkpoint");
    auto* evaluate = app.add_subcommand("evaluate", "metric reports with bootstrap intervals");
    evaluate->add_option("--scope", scope, "model scope");
    evaluate->add_option("--site", site, "test site");
    evaluate->add_flag("--cross-site", cross_site, "run the full train-site x test-site matrix");
    evaluate->add_flag("--logistic", baseline, "evaluate the logistic baseline checkpoint");
    auto* attribute = app.add_subcommand("attribute", "integrated-gradients feature rankings");
    attribute->add_option("--scope", scope, "model scope");
    attribute->add_option("--site", site, "test site");
    attribute->add_flag("--per-step", per_step, "also export unaggregated per-step attributions");
    auto* report = app.add_subcommand("report", "run every stage into one report directory");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = args.load();
        if (!baseline_kind.empty()) {
            if (baseline_kind != "logistic") {
                std::cerr << "error: unknown baseline '" << baseline_kind << "'\n";
                return 1;
            }
            baseline = true;
        }
        if (per_step) cfg.attribution.per_step_export = true;
        auto ctx = aki::PipelineContext::make(cfg);

        if (synth->parsed()) run_synth(ctx);
        if (label->parsed()) run_label(ctx);
        if (featurize->parsed()) run_featurize(ctx, scope);
        if (train->parsed()) run_train(ctx, scope, baseline);
        if (calibrate->parsed()) run_calibrate(ctx, scope, baseline);
        if (evaluate->parsed()) {
            if (cross_site)
                run_evaluate_cross_site(ctx);
            else
                run_evaluate(ctx, scope, site, baseline);
        }
        if (attribute->parsed()) run_attribute(ctx, scope, site);
        if (report->parsed()) run_report(ctx);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;  // config/validation problems
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
