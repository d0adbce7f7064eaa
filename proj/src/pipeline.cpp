#include "aki/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aki/ingest.hpp"
#include "aki/isotonic.hpp"
#include "aki/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace aki {

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_absolute()) return p;
    return (base / path).string();
}

void log_kv(const std::string& stage, const std::string& key, const std::string& value) {
    std::cerr << "stage=" << stage << " " << key << "=" << value << "\n";
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    const fs::path base = fs::path(path).parent_path();

    PipelineConfig cfg;
    cfg.out_dir = resolve(base, j.value("out_dir", cfg.out_dir));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.day_boundary_offset_hours = j.value("day_boundary_offset_hours", 0);
    if (j.contains("split")) {
        const auto& s = j.at("split");
        if (s.contains("ratios")) {
            const auto r = s.at("ratios").get<std::vector<double>>();
            if (r.size() != 4) throw std::runtime_error("config: split.ratios needs 4 entries");
            std::copy(r.begin(), r.end(), cfg.split_ratios.begin());
        }
        cfg.split_seed = s.value("seed", cfg.split_seed);
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        cfg.registry_path = resolve(base, p.value("nephrotoxin_registry", ""));
        cfg.comorbidity_rules_path = resolve(base, p.value("comorbidity_rules", ""));
        cfg.medication_classes_path = resolve(base, p.value("medication_classes", ""));
        cfg.charlson_weights_path = resolve(base, p.value("charlson_weights", ""));
    }
    if (j.contains("features")) {
        const auto& f = j.at("features");
        if (f.contains("vitals")) cfg.features.vitals = f.at("vitals").get<std::vector<std::string>>();
        if (f.contains("dynamic_labs"))
            cfg.features.dynamic_labs = f.at("dynamic_labs").get<std::vector<std::string>>();
        if (f.contains("panel_count_labs"))
            cfg.features.panel_count_labs = f.at("panel_count_labs").get<std::vector<std::string>>();
        if (f.contains("static_labs"))
            cfg.features.static_labs = f.at("static_labs").get<std::vector<std::string>>();
        cfg.features.scr_code = f.value("scr_code", cfg.features.scr_code);
    }
    if (j.contains("renal")) {
        const auto& r = j.at("renal");
        cfg.renal.max_daily_delta_scr = r.value("max_daily_delta_scr", cfg.renal.max_daily_delta_scr);
        cfg.renal.assumed_egfr_for_backcalc =
            r.value("assumed_egfr_for_backcalc", cfg.renal.assumed_egfr_for_backcalc);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.dropout = t.value("dropout", cfg.train.dropout);
        cfg.train.patience = t.value("patience", cfg.train.patience);
        cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
        cfg.train.hidden = t.value("hidden", cfg.train.hidden);
        cfg.train.seed = t.value("seed", cfg.train.seed);
        cfg.train.class_weighting = t.value("class_weighting", cfg.train.class_weighting);
    }
    if (j.contains("evaluate")) {
        const auto& e = j.at("evaluate");
        cfg.evaluate.bootstrap_replicates =
            e.value("bootstrap_replicates", cfg.evaluate.bootstrap_replicates);
        cfg.evaluate.bootstrap_seed = e.value("bootstrap_seed", cfg.evaluate.bootstrap_seed);
        cfg.evaluate.subgroups = e.value("subgroups", cfg.evaluate.subgroups);
    }
    if (j.contains("attribution")) {
        const auto& a = j.at("attribution");
        cfg.attribution.ig_steps = a.value("ig_steps", cfg.attribution.ig_steps);
        cfg.attribution.top_k = a.value("top_k", cfg.attribution.top_k);
        cfg.attribution.max_windows = a.value("max_windows", cfg.attribution.max_windows);
        cfg.attribution.per_step_export = a.value("per_step_export", cfg.attribution.per_step_export);
    }
    if (j.contains("sites"))
        for (const auto& s : j.at("sites")) {
            SiteSpec spec;
            spec.name = s.at("name").get<std::string>();
            spec.profile_path = resolve(base, s.value("profile", ""));
            spec.events_path = resolve(base, s.value("events", ""));
            spec.encounters_path = resolve(base, s.value("encounters", ""));
            cfg.sites.push_back(spec);
        }
    cfg.max_encounters = j.value("max_encounters", 0);
    return cfg;
}

void PipelineConfig::validate() const {
    auto require_file = [](const std::string& key, const std::string& path) {
        if (path.empty()) throw std::runtime_error("config: missing required path " + key);
        if (!fs::exists(path))
            throw std::runtime_error("config: " + key + " does not exist: " + path);
    };
    require_file("paths.nephrotoxin_registry", registry_path);
    require_file("paths.comorbidity_rules", comorbidity_rules_path);
    require_file("paths.medication_classes", medication_classes_path);
    require_file("paths.charlson_weights", charlson_weights_path);
    if (sites.empty()) throw std::runtime_error("config: sites must not be empty");
    for (const auto& s : sites)
        if (s.name.empty()) throw std::runtime_error("config: sites[].name must not be empty");
    double sum = 0.0;
    for (double r : split_ratios) sum += r;
    if (std::abs(sum - 1.0) > 1e-9) throw std::runtime_error("config: split.ratios must sum to 1");
}

std::string PipelineConfig::canonical_json() const {
    nlohmann::json j;
    j["out_dir"] = out_dir;
    j["seed"] = seed;
    j["day_boundary_offset_hours"] = day_boundary_offset_hours;
    j["split_ratios"] = split_ratios;
    j["split_seed"] = split_seed;
    j["features"] = {{"vitals", features.vitals},
                     {"dynamic_labs", features.dynamic_labs},
                     {"panel_count_labs", features.panel_count_labs},
                     {"static_labs", features.static_labs},
                     {"scr_code", features.scr_code}};
    j["train"] = {{"batch_size", train.batch_size}, {"learning_rate", train.learning_rate},
                  {"dropout", train.dropout},       {"patience", train.patience},
                  {"max_epochs", train.max_epochs}, {"hidden", train.hidden},
                  {"seed", train.seed},             {"class_weighting", train.class_weighting}};
    j["evaluate"] = {{"bootstrap_replicates", evaluate.bootstrap_replicates},
                     {"bootstrap_seed", evaluate.bootstrap_seed},
                     {"subgroups", evaluate.subgroups}};
    j["attribution"] = {{"ig_steps", attribution.ig_steps},
                        {"top_k", attribution.top_k},
                        {"max_windows", attribution.max_windows}};
    nlohmann::json sites_json = nlohmann::json::array();
    for (const auto& s : sites) sites_json.push_back({{"name", s.name}});
    j["sites"] = sites_json;
    j["max_encounters"] = max_encounters;
    return j.dump();
}

std::string PipelineConfig::config_hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_json())));
    return buf;
}

std::string PipelineConfig::site_events(const std::string& site) const {
    for (const auto& s : sites)
        if (s.name == site && !s.events_path.empty()) return s.events_path;
    return out_dir + "/" + site + "_events.tsv";
}

std::string PipelineConfig::site_encounters(const std::string& site) const {
    for (const auto& s : sites)
        if (s.name == site && !s.encounters_path.empty()) return s.encounters_path;
    return out_dir + "/" + site + "_encounters.tsv";
}

std::string PipelineConfig::site_truth(const std::string& site) const {
    return out_dir + "/" + site + "_truth.tsv";
}

std::string PipelineConfig::schema_path(const std::string& scope) const {
    return out_dir + "/schema_" + scope + ".json";
}

std::string PipelineConfig::tensors_path(const std::string& scope, const std::string& site) const {
    return out_dir + "/tensors_" + scope + "_" + site + ".bin";
}

std::string PipelineConfig::checkpoint_path(const std::string& scope, bool baseline) const {
    return out_dir + "/model_" + scope + (baseline ? "_logistic" : "") + ".ckpt";
}

std::vector<std::string> scope_sites(const PipelineConfig& cfg, const std::string& scope) {
    if (scope == "pooled") {
        std::vector<std::string> all;
        for (const auto& s : cfg.sites) all.push_back(s.name);
        return all;
    }
    for (const auto& s : cfg.sites)
        if (s.name == scope) return {scope};
    throw std::runtime_error("unknown scope: " + scope + " (use a site name or 'pooled')");
}

PipelineContext PipelineContext::make(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineContext ctx;
    ctx.cfg = cfg;
    RegistryLoadReport registry_report;
    ctx.registry = load_registry(cfg.registry_path, registry_report);
    for (const auto& w : registry_report.warnings) log_kv("setup", "registry_warning", w);

    ctx.features.config = cfg.features;
    ctx.features.pheno.scr_code = cfg.features.scr_code;
    ctx.features.pheno.renal = cfg.renal;
    ctx.features.pheno.day_boundary_offset =
        static_cast<Instant>(cfg.day_boundary_offset_hours) * kHour;
    ctx.features.comorbidity = load_comorbidity_rules(cfg.comorbidity_rules_path);
    ctx.features.charlson = load_charlson_weights(cfg.charlson_weights_path);
    ctx.features.medication_classes = load_medication_classes(cfg.medication_classes_path);
    ctx.features.registry = &ctx.registry;
    fs::create_directories(cfg.out_dir);
    return ctx;
}

namespace {

struct SiteData {
    EventStore included;
    ExclusionReport exclusions;
    CohortSplit split;
};

SiteData load_site(const PipelineContext& ctx, const std::string& site) {
    const auto& cfg = ctx.cfg;
    ParseReport parse;
    auto store = ingest(cfg.site_events(site), cfg.site_encounters(site), parse);
    log_kv("ingest", site + "_accepted", std::to_string(parse.accepted));
    log_kv("ingest", site + "_rejected", std::to_string(parse.rejected));

    SiteData data;
    data.included = apply_exclusions(store, cfg.exclusions, ctx.features.pheno, data.exclusions);
    data.split = split_cohort(data.included, cfg.split_ratios,
                              substream_seed(cfg.split_seed, fnv1a(site)));
    return data;
}

void write_artifact_header(std::ofstream& out, const PipelineContext& ctx) {
    out << "# config_hash=" << ctx.cfg.config_hash() << " seed=" << ctx.cfg.seed << "\n";
}

std::vector<EncounterTensor> load_scope_partition(const PipelineContext& ctx,
                                                  const std::string& scope, Partition part,
                                                  std::string& schema_hash) {
    std::vector<EncounterTensor> out;
    for (const auto& site : scope_sites(ctx.cfg, scope)) {
        std::string hash;
        auto tensors = read_tensors(ctx.cfg.tensors_path(scope, site), hash);
        if (schema_hash.empty()) schema_hash = hash;
        if (hash != schema_hash)
            throw std::runtime_error("tensor files disagree on schema hash for scope " + scope);
        for (auto& t : tensors)
            if (t.partition == part) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

void run_synth(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    for (const auto& site : cfg.sites) {
        if (site.profile_path.empty())
            throw std::runtime_error("synth: site " + site.name + " has no profile path");
        auto profile = SiteProfile::from_json_file(site.profile_path);
        profile.name = site.name;
        if (cfg.max_encounters > 0)
            profile.n_encounters = std::min(profile.n_encounters, cfg.max_encounters);
        const auto output =
            generate_site(profile, cfg.seed, ctx.registry, ctx.features.comorbidity,
                          ctx.features.medication_classes);

        ParseReport report;
        auto store = assemble_store(output.events, output.encounters, report);
        write_store(store, cfg.site_events(site.name), cfg.site_encounters(site.name));
        write_ground_truth(output, cfg.site_truth(site.name));

        const auto marginals = validate_marginals(output, profile);
        std::ofstream mout(cfg.out_dir + "/" + site.name + "_marginals.tsv");
        write_artifact_header(mout, ctx);
        write_marginal_report(marginals, mout);
        log_kv("synth", site.name + "_encounters", std::to_string(output.encounters.size()));
        log_kv("synth", site.name + "_events", std::to_string(output.events.size()));
    }
}

void run_label(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    for (const auto& site : cfg.sites) {
        auto data = load_site(ctx, site.name);

        std::ofstream excl(cfg.out_dir + "/" + site.name + "_exclusions.tsv");
        write_artifact_header(excl, ctx);
        write_exclusion_report(data.exclusions, excl);

        std::vector<StageTimeline> timelines;
        std::vector<WindowLabel> labels;
        for (const auto& tl : data.included.timelines()) {
            auto st = build_stage_timeline(tl, ctx.features.pheno);
            auto wl = label_windows(st);
            labels.insert(labels.end(), wl.begin(), wl.end());
            timelines.push_back(std::move(st));
        }
        write_labels(labels, cfg.out_dir + "/" + site.name + "_labels.tsv");

        const auto table = transition_table(timelines);
        std::ofstream tout(cfg.out_dir + "/" + site.name + "_transition.tsv");
        write_artifact_header(tout, ctx);
        write_transition_table(table, tout);
        log_kv("label", site.name + "_windows", std::to_string(labels.size()));
    }
}

void run_featurize(const PipelineContext& ctx, const std::string& scope) {
    const auto& cfg = ctx.cfg;
    const auto dev_sites = scope_sites(cfg, scope);

    // raws for every site; the schema is fitted on the scope's development rows
    std::map<std::string, std::vector<EncounterRaw>> raws_by_site;
    for (const auto& site : cfg.sites) {
        auto data = load_site(ctx, site.name);
        std::vector<EncounterRaw> raws;
        for (const auto& tl : data.included.timelines()) {
            const auto part = data.split.partition_of(tl.encounter->patient_id);
            raws.push_back(derive_encounter_raw(tl, ctx.features, site.name, part));
        }
        raws_by_site[site.name] = std::move(raws);
    }

    std::vector<EncounterRaw> development;
    for (const auto& site : dev_sites)
        for (const auto& raw : raws_by_site.at(site))
            if (raw.partition == Partition::DEVELOPMENT) development.push_back(raw);
    const auto schema = fit_schema(development, ctx.features);
    schema.save(cfg.schema_path(scope));
    log_kv("featurize", "schema_hash", schema.version_hash);
    for (const auto& dropped : schema.dropped_constant)
        log_kv("featurize", "dropped_constant", dropped);

    for (const auto& [site, raws] : raws_by_site) {
        std::vector<EncounterTensor> tensors;
        tensors.reserve(raws.size());
        for (const auto& raw : raws) tensors.push_back(apply_schema(raw, schema, ctx.features));
        write_tensors(tensors, schema.version_hash, cfg.tensors_path(scope, site));
        log_kv("featurize", scope + "_" + site + "_tensors", std::to_string(tensors.size()));
    }
}

void run_train(const PipelineContext& ctx, const std::string& scope, bool logistic_baseline) {
    const auto& cfg = ctx.cfg;
    std::string schema_hash;
    auto dev = load_scope_partition(ctx, scope, Partition::DEVELOPMENT, schema_hash);
    auto val = load_scope_partition(ctx, scope, Partition::VALIDATION, schema_hash);

    TrainDiagnostics diag;
    Checkpoint ckpt = logistic_baseline
                          ? train_logistic_baseline(dev, val, cfg.train, schema_hash, &diag)
                          : train(dev, val, cfg.train, schema_hash, &diag);
    ckpt.save(cfg.checkpoint_path(scope, logistic_baseline));
    log_kv("train", "scope", scope);
    log_kv("train", "epochs_run", std::to_string(ckpt.epochs_run));
    log_kv("train", "best_epoch", std::to_string(ckpt.best_epoch));
    log_kv("train", "best_validation_auprc", std::to_string(ckpt.best_validation_auprc));
}

std::vector<ScoredWindow> score_partition(const PipelineContext& ctx, const Checkpoint& ckpt,
                                          const std::string& scope, const std::string& site,
                                          Partition partition) {
    std::string schema_hash;
    std::vector<EncounterTensor> tensors;
    {
        std::string hash;
        auto all = read_tensors(ctx.cfg.tensors_path(scope, site), hash);
        schema_hash = hash;
        for (auto& t : all)
            if (t.partition == partition) tensors.push_back(std::move(t));
    }
    const auto probs = predict(ckpt, tensors, schema_hash);

    std::vector<ScoredWindow> rows;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        for (std::size_t k = 0; k < probs[i].size(); ++k) {
            if (std::isnan(probs[i][k])) continue;  // baseline-ineligible windows
            ScoredWindow row;
            row.encounter_id = t.encounter_id;
            row.window_index = static_cast<int>(k);
            row.score = probs[i][k];
            row.label = t.labels[k];
            row.eval_mask = t.already_severe[k] == 0;
            row.sex = t.sex;
            row.race_african_american = t.race_african_american;
            row.site = t.site;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void run_calibrate(const PipelineContext& ctx, const std::string& scope, bool logistic_baseline) {
    const auto& cfg = ctx.cfg;
    auto ckpt = Checkpoint::load(cfg.checkpoint_path(scope, logistic_baseline));
    ckpt.calibrator.reset();  // fit on raw scores

    std::vector<std::pair<double, double>> rows;
    for (const auto& site : scope_sites(cfg, scope))
        for (const auto& r : score_partition(ctx, ckpt, scope, site, Partition::CALIBRATION))
            if (r.eval_mask) rows.emplace_back(r.score, static_cast<double>(r.label));
    if (rows.size() < 2) throw std::runtime_error("calibrate: not enough calibration rows");

    const auto before = reliability_bins(rows);
    ckpt.calibrator = fit_isotonic(rows);
    std::vector<std::pair<double, double>> after_rows;
    for (const auto& [score, label] : rows)
        after_rows.emplace_back(ckpt.calibrator->apply(score), label);
    const auto after = reliability_bins(after_rows);

    ckpt.save(cfg.checkpoint_path(scope, logistic_baseline));
    std::ofstream out(cfg.out_dir + "/reliability_" + scope +
                      (logistic_baseline ? "_logistic" : "") + ".tsv");
    write_artifact_header(out, ctx);
    out << "# ece_before=" << before.expected_calibration_error
        << " ece_after=" << after.expected_calibration_error << "\n";
    out << "bin_low\tbin_high\tcount\tmean_score\tevent_rate\n";
    for (const auto& b : after.bins)
        out << b.bin_low << '\t' << b.bin_high << '\t' << b.count << '\t' << b.mean_score << '\t'
            << b.event_rate << '\n';
    log_kv("calibrate", "ece_before", std::to_string(before.expected_calibration_error));
    log_kv("calibrate", "ece_after", std::to_string(after.expected_calibration_error));
}

MetricReport run_evaluate(const PipelineContext& ctx, const std::string& scope,
                          const std::string& site, bool logistic_baseline) {
    const auto& cfg = ctx.cfg;
    const auto ckpt = Checkpoint::load(cfg.checkpoint_path(scope, logistic_baseline));

    // Youden threshold on the scope's validation partition, applied to test
    std::vector<ScoredWindow> validation;
    for (const auto& s : scope_sites(cfg, scope)) {
        auto rows = score_partition(ctx, ckpt, scope, s, Partition::VALIDATION);
        validation.insert(validation.end(), rows.begin(), rows.end());
    }
    const auto threshold = youden_threshold(validation);

    const auto test_rows = score_partition(ctx, ckpt, scope, site, Partition::TEST);
    auto report = evaluate_cohort(test_rows, threshold, cfg.evaluate);
    report.model_name = scope + (logistic_baseline ? " (logistic baseline)" : "");
    report.cohort_name = site + " test";

    const std::string stem = cfg.out_dir + "/report_" + scope +
                             (logistic_baseline ? "_logistic" : "") + "_" + site;
    std::ofstream text(stem + ".txt");
    write_artifact_header(text, ctx);
    write_report_text(report, text);
    std::ofstream kv(stem + ".kv");
    kv << "config_hash=" << cfg.config_hash() << "\nseed=" << cfg.seed << "\n";
    write_report_kv(report, kv);
    return report;
}

void run_evaluate_cross_site(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<std::string> scopes;
    for (const auto& s : cfg.sites) scopes.push_back(s.name);
    scopes.push_back("pooled");

    std::ofstream summary(cfg.out_dir + "/cross_site_summary.tsv");
    write_artifact_header(summary, ctx);
    summary << "model_scope\ttest_site\tauroc\tauprc\n";
    for (const auto& scope : scopes)
        for (const auto& site : cfg.sites) {
            const auto report = run_evaluate(ctx, scope, site.name, false);
            summary << scope << '\t' << site.name << '\t'
                    << (report.auroc.point ? std::to_string(*report.auroc.point) : "--") << '\t'
                    << (report.auprc.point ? std::to_string(*report.auprc.point) : "--") << '\n';
        }
}

FeatureRanking run_attribute(const PipelineContext& ctx, const std::string& scope,
                             const std::string& site) {
    const auto& cfg = ctx.cfg;
    const auto ckpt = Checkpoint::load(cfg.checkpoint_path(scope, false));
    const auto schema = FeatureSchema::load(cfg.schema_path(scope));

    std::string hash;
    auto all = read_tensors(cfg.tensors_path(scope, site), hash);
    if (!hash.empty() && hash != ckpt.schema_hash)
        throw std::runtime_error("attribute: schema hash mismatch");

    std::vector<EncounterTensor> test;
    for (auto& t : all)
        if (t.partition == Partition::TEST) test.push_back(std::move(t));

    std::vector<std::pair<std::size_t, int>> windows;  // (tensor index, window)
    for (std::size_t i = 0; i < test.size(); ++i)
        for (std::size_t k = 0; k < test[i].steps.size(); ++k)
            if (test[i].already_severe[k] == 0) windows.emplace_back(i, static_cast<int>(k));
    if (cfg.attribution.max_windows > 0 &&
        windows.size() > static_cast<std::size_t>(cfg.attribution.max_windows)) {
        Rng rng(substream_seed(cfg.seed, 0xA77BULL));
        rng.shuffle(windows);
        windows.resize(static_cast<std::size_t>(cfg.attribution.max_windows));
    }

    std::vector<AttributionVector> attributions;
    attributions.reserve(windows.size());
    for (const auto& [i, k] : windows)
        attributions.push_back(integrated_gradients(ckpt, test[i], k, cfg.attribution.ig_steps));

    const auto ranking = aggregate_attributions(attributions, schema);
    write_ranking(top_k(ranking, cfg.attribution.top_k),
                  cfg.out_dir + "/ranking_" + scope + "_" + site + ".tsv");
    write_ranking(ranking, cfg.out_dir + "/ranking_" + scope + "_" + site + "_full.tsv");

    if (cfg.attribution.per_step_export && !attributions.empty()) {
        std::ofstream out(cfg.out_dir + "/attribution_steps_" + scope + "_" + site + ".tsv");
        out << "window\tstep\tfeature\tattribution\n";
        for (std::size_t w = 0; w < attributions.size(); ++w)
            for (std::size_t t = 0; t < attributions[w].dynamic_attr.size(); ++t)
                for (std::size_t f = 0; f < schema.dynamic_features.size(); ++f)
                    out << w << '\t' << t << '\t' << schema.dynamic_features[f].name << '\t'
                        << attributions[w].dynamic_attr[t][f] << '\n';
    }
    log_kv("attribute", "windows", std::to_string(windows.size()));
    return ranking;
}

void run_report(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    run_synth(ctx);
    run_label(ctx);
    std::vector<std::string> scopes;
    for (const auto& s : cfg.sites) scopes.push_back(s.name);
    scopes.push_back("pooled");
    for (const auto& scope : scopes) {
        run_featurize(ctx, scope);
        run_train(ctx, scope, false);
        run_calibrate(ctx, scope, false);
    }
    run_evaluate_cross_site(ctx);
    for (const auto& site : cfg.sites) run_attribute(ctx, site.name, site.name);
    if (!cfg.sites.empty()) run_attribute(ctx, "pooled", cfg.sites.front().name);

    std::ofstream manifest(cfg.out_dir + "/manifest.txt");
    manifest << "config_hash=" << cfg.config_hash() << "\n";
    manifest << "seed=" << cfg.seed << "\n";
    manifest << "split_seed=" << cfg.split_seed << "\n";
    manifest << "train_seed=" << cfg.train.seed << "\n";
    manifest << "bootstrap_seed=" << cfg.evaluate.bootstrap_seed << "\n";
}

}  // namespace aki
