#include "aki/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace aki {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586477;

struct KegfrPoint {
    Instant time;
    double value;
};

// KeGFR is computed whenever a creatinine lands at least 12 hours after the
// previous calculation point; the rolling reference supplies the baseline.
std::vector<KegfrPoint> compute_kegfr_points(const EncounterTimeline& tl,
                                             const PhenotypeConfig& pheno) {
    std::vector<KegfrPoint> out;
    const auto scr = extract_scr(tl.admission_events, pheno.scr_code);
    if (scr.size() < 2) return out;
    const auto initial = initial_reference_creatinine(tl, pheno);

    ScrPoint last_calc = scr.front();
    for (std::size_t i = 1; i < scr.size(); ++i) {
        const double dt_hours = to_hours(scr[i].time - last_calc.time);
        if (dt_hours < 12.0) continue;
        std::vector<ScrPoint> history(scr.begin(), scr.begin() + static_cast<long>(i) + 1);
        const auto ref = rolling_reference(initial, history, scr[i].time);
        const double ref_egfr =
            egfr_ckdepi_2021(ref.value, tl.encounter->age_years, tl.encounter->sex, pheno.renal);
        out.push_back({scr[i].time, kegfr(last_calc.value, scr[i].value, dt_hours, ref.value,
                                          ref_egfr, pheno.renal)});
        last_calc = scr[i];
    }
    return out;
}

std::vector<double> values_in(const std::vector<const ClinicalEvent*>& events, EventKind kind,
                              const std::string& code, Instant lo, Instant hi) {
    std::vector<double> out;
    for (const auto* e : events)
        if (e->kind == kind && e->code == code && e->timestamp >= lo && e->timestamp < hi && e->value)
            out.push_back(*e->value);
    return out;
}

// accumulated 7-day burden as of instant `end`: six full prior days plus the
// current day truncated at `end` so window features never look ahead
double accumulated_burden_asof(const EncounterTimeline& tl, const NephrotoxinRegistry& registry,
                               Instant end, Instant day_boundary_offset) {
    const std::int64_t day = day_index(end, day_boundary_offset);
    std::map<std::int64_t, std::vector<const ClinicalEvent*>> by_day;
    auto collect = [&](const std::vector<const ClinicalEvent*>& events) {
        for (const auto* e : events) {
            if (e->kind != EventKind::MEDICATION || e->timestamp > end) continue;
            const std::int64_t d = day_index(e->timestamp, day_boundary_offset);
            if (d >= day - 6 && d <= day) by_day[d].push_back(e);
        }
    };
    collect(tl.preadmission_events);
    collect(tl.admission_events);
    double sum = 0.0;
    for (const auto& [d, events] : by_day) sum += daily_burden(events, registry);
    return sum;
}

void append_onehot(std::vector<FeatureSpec>& specs, const std::string& group,
                   const std::vector<std::string>& levels) {
    for (const auto& level : levels) specs.push_back({group + "=" + level, FeatureKind::ONE_HOT});
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

LabAggregate aggregate_values(const std::vector<double>& values) {
    LabAggregate agg;
    agg.count = static_cast<double>(values.size());
    if (values.empty()) {
        agg.mean = agg.variance = agg.min = agg.max = kNaN;
        return agg;
    }
    double sum = 0.0;
    agg.min = agg.max = values.front();
    for (double v : values) {
        sum += v;
        agg.min = std::min(agg.min, v);
        agg.max = std::max(agg.max, v);
    }
    agg.mean = sum / agg.count;
    double ss = 0.0;
    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
    agg.variance = ss / agg.count;
    return agg;
}

std::vector<FeatureSpec> static_feature_layout(const FeatureConfig& cfg,
                                               const ComorbidityRules& comorb,
                                               const MedicationClassRules& medclass,
                                               const std::vector<std::string>& insurance_levels) {
    std::vector<FeatureSpec> specs;
    specs.push_back({"age", FeatureKind::NUMERIC});
    specs.push_back({"sex_female", FeatureKind::BINARY});
    append_onehot(specs, "race", {"WHITE", "AFRICAN_AMERICAN", "OTHER", "MISSING"});
    append_onehot(specs, "ethnicity", {"HISPANIC", "NON_HISPANIC", "MISSING"});
    specs.push_back({"language", FeatureKind::BINARY});
    auto levels = insurance_levels;
    levels.push_back("MISSING");
    append_onehot(specs, "insurance", levels);
    specs.push_back({"admission_source", FeatureKind::BINARY});
    for (const auto& flag : comorb.flag_names) specs.push_back({"dx_" + flag, FeatureKind::BINARY});
    specs.push_back({"charlson_index", FeatureKind::NUMERIC});
    for (const auto& cls : medclass.class_names) specs.push_back({"rx_" + cls, FeatureKind::BINARY});
    specs.push_back({"rx_nephrotoxic_history", FeatureKind::BINARY});
    specs.push_back({"total_medication_types", FeatureKind::NUMERIC});
    for (const auto& lab : cfg.static_labs)
        for (const char* stat : {"count", "mean", "variance", "min", "max"})
            specs.push_back({lab + "_hist_" + stat, FeatureKind::NUMERIC});
    specs.push_back({"admit_month_sin", FeatureKind::NUMERIC});
    specs.push_back({"admit_month_cos", FeatureKind::NUMERIC});
    specs.push_back({"admit_weekday_sin", FeatureKind::NUMERIC});
    specs.push_back({"admit_weekday_cos", FeatureKind::NUMERIC});
    return specs;
}

std::vector<FeatureSpec> dynamic_feature_layout(const FeatureConfig& cfg) {
    std::vector<FeatureSpec> specs;
    specs.push_back({"kegfr_mean_12h", FeatureKind::NUMERIC});
    for (const auto& vital : cfg.vitals)
        for (const char* sub : {"prior6h", "last6h"})
            for (const char* stat : {"count", "mean", "variance", "min", "max"})
                specs.push_back({vital + "_" + stat + "_" + sub, FeatureKind::NUMERIC});
    for (const auto& lab : cfg.dynamic_labs)
        specs.push_back({lab + "_mean_12h", FeatureKind::NUMERIC});
    for (const auto& lab : cfg.panel_count_labs)
        specs.push_back({lab + "_count_12h", FeatureKind::NUMERIC});
    specs.push_back({"nephrotoxic_burden_7d", FeatureKind::NUMERIC});
    specs.push_back({"los_hours", FeatureKind::NUMERIC});
    return specs;
}

std::vector<double> materialize_static(const StaticRaw& raw, const FeatureConfig& cfg,
                                       const ComorbidityRules& comorb,
                                       const MedicationClassRules& medclass,
                                       const std::vector<std::string>& insurance_levels) {
    std::vector<double> v;
    v.push_back(raw.age);
    v.push_back(raw.sex == Sex::FEMALE ? 1.0 : 0.0);
    for (Race r : {Race::WHITE, Race::AFRICAN_AMERICAN, Race::OTHER, Race::MISSING})
        v.push_back(raw.race == r ? 1.0 : 0.0);
    for (Ethnicity e : {Ethnicity::HISPANIC, Ethnicity::NON_HISPANIC, Ethnicity::MISSING})
        v.push_back(raw.ethnicity == e ? 1.0 : 0.0);
    v.push_back(raw.language ? 1.0 : 0.0);
    {
        // unseen levels fall into the MISSING slot
        bool matched = false;
        for (const auto& level : insurance_levels) {
            const bool hit = raw.insurance == level;
            v.push_back(hit ? 1.0 : 0.0);
            matched = matched || hit;
        }
        v.push_back(matched ? 0.0 : 1.0);
    }
    v.push_back(raw.admission_source ? 1.0 : 0.0);
    for (const auto& flag : comorb.flag_names) {
        auto it = raw.comorbidities.find(flag);
        v.push_back(it != raw.comorbidities.end() && it->second ? 1.0 : 0.0);
    }
    v.push_back(static_cast<double>(raw.charlson_index));
    for (const auto& cls : medclass.class_names) {
        auto it = raw.medication_classes.find(cls);
        v.push_back(it != raw.medication_classes.end() && it->second ? 1.0 : 0.0);
    }
    v.push_back(raw.nephrotoxic_history ? 1.0 : 0.0);
    v.push_back(static_cast<double>(raw.total_medication_types));
    for (const auto& lab : cfg.static_labs) {
        auto it = raw.lab_history.find(lab);
        const LabAggregate agg = it != raw.lab_history.end() ? it->second : aggregate_values({});
        v.push_back(agg.count);
        v.push_back(agg.mean);
        v.push_back(agg.variance);
        v.push_back(agg.min);
        v.push_back(agg.max);
    }
    v.push_back(std::sin(kTwoPi * (raw.admit_month - 1) / 12.0));
    v.push_back(std::cos(kTwoPi * (raw.admit_month - 1) / 12.0));
    v.push_back(std::sin(kTwoPi * raw.admit_weekday / 7.0));
    v.push_back(std::cos(kTwoPi * raw.admit_weekday / 7.0));
    return v;
}

EncounterRaw derive_encounter_raw(const EncounterTimeline& tl, const FeatureContext& ctx,
                                  const std::string& site, Partition partition) {
    if (!ctx.registry) throw std::invalid_argument("derive_encounter_raw: registry not set");
    const auto& rec = *tl.encounter;

    EncounterRaw raw;
    raw.encounter_id = rec.encounter_id;
    raw.patient_id = rec.patient_id;
    raw.site = site;
    raw.partition = partition;
    raw.sex = rec.sex;
    raw.race_african_american = rec.race == Race::AFRICAN_AMERICAN;

    // ---- static predictors (admission-time snapshot) ----
    StaticRaw& s = raw.static_raw;
    s.age = rec.age_years;
    s.sex = rec.sex;
    s.race = rec.race;
    s.ethnicity = rec.ethnicity;
    s.language = rec.language;
    s.insurance = rec.insurance;
    s.admission_source = rec.admission_source;
    s.comorbidities = ctx.comorbidity.evaluate(tl.preadmission_events);
    s.charlson_index = ctx.charlson.index(s.comorbidities);
    s.medication_classes = ctx.medication_classes.evaluate(tl.preadmission_events);

    std::set<std::string> med_types;
    for (const auto* e : tl.preadmission_events)
        if (e->kind == EventKind::MEDICATION) {
            med_types.insert(e->code);
            const auto* entry = ctx.registry->find(e->code);
            if (entry && (e->unit.empty() || !entry->excluded_routes.count(e->unit)))
                s.nephrotoxic_history = true;
        }
    s.total_medication_types = static_cast<int>(med_types.size());

    for (const auto& lab : ctx.config.static_labs) {
        auto values = values_in(tl.preadmission_events, EventKind::LAB, lab,
                                rec.admit_time - kPreadmissionLookback, rec.admit_time);
        s.lab_history[lab] = aggregate_values(values);
    }
    s.admit_month = month_of(rec.admit_time);
    s.admit_weekday = weekday_of(rec.admit_time);

    // ---- window labels ----
    const auto stage_timeline = build_stage_timeline(tl, ctx.pheno);
    raw.window_labels = label_windows(stage_timeline);

    // ---- dynamic predictors, one row per window, carry-forward in order ----
    const auto layout = dynamic_feature_layout(ctx.config);
    const auto kegfr_points = compute_kegfr_points(tl, ctx.pheno);
    std::vector<double> carry(layout.size(), kNaN);

    for (std::size_t k = 0; k < raw.window_labels.size(); ++k) {
        const Instant start = rec.admit_time + static_cast<Instant>(k) * kWindowStep;
        const Instant end = start + kWindowStep;
        std::vector<double> row;
        row.reserve(layout.size());

        {
            std::vector<double> kg;
            for (const auto& p : kegfr_points)
                if (p.time >= start && p.time < end) kg.push_back(p.value);
            row.push_back(kg.empty() ? kNaN : aggregate_values(kg).mean);
        }
        for (const auto& vital : ctx.config.vitals) {
            for (int sub = 0; sub < 2; ++sub) {
                const Instant lo = start + sub * 6 * kHour;
                const Instant hi = lo + 6 * kHour;
                const auto agg =
                    aggregate_values(values_in(tl.admission_events, EventKind::VITAL, vital, lo, hi));
                row.push_back(agg.count);
                row.push_back(agg.mean);
                row.push_back(agg.variance);
                row.push_back(agg.min);
                row.push_back(agg.max);
            }
        }
        for (const auto& lab : ctx.config.dynamic_labs)
            row.push_back(
                aggregate_values(values_in(tl.admission_events, EventKind::LAB, lab, start, end)).mean);
        for (const auto& lab : ctx.config.panel_count_labs)
            row.push_back(static_cast<double>(
                values_in(tl.admission_events, EventKind::LAB, lab, start, end).size()));
        row.push_back(accumulated_burden_asof(tl, *ctx.registry, end, ctx.pheno.day_boundary_offset));
        row.push_back(to_hours(end - rec.admit_time));

        for (std::size_t i = 0; i < row.size(); ++i) {
            if (std::isnan(row[i]))
                row[i] = carry[i];  // may stay NaN; the schema median fills it later
            else
                carry[i] = row[i];
        }
        raw.dynamic_rows.push_back(std::move(row));
    }
    return raw;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

FeatureSchema fit_schema(const std::vector<EncounterRaw>& development, const FeatureContext& ctx) {
    if (development.empty()) throw std::invalid_argument("fit_schema: empty development set");
    for (const auto& raw : development)
        if (raw.partition != Partition::DEVELOPMENT)
            throw std::invalid_argument("fit_schema: encounter " + raw.encounter_id +
                                        " is not in the development partition");

    std::set<std::string> level_set;
    for (const auto& raw : development)
        if (!raw.static_raw.insurance.empty()) level_set.insert(raw.static_raw.insurance);
    std::vector<std::string> insurance_levels(level_set.begin(), level_set.end());

    const auto static_layout = static_feature_layout(ctx.config, ctx.comorbidity,
                                                     ctx.medication_classes, insurance_levels);
    const auto dynamic_layout = dynamic_feature_layout(ctx.config);

    std::vector<std::vector<double>> static_cols(static_layout.size());
    std::vector<std::vector<double>> dynamic_cols(dynamic_layout.size());
    for (const auto& raw : development) {
        const auto row = materialize_static(raw.static_raw, ctx.config, ctx.comorbidity,
                                            ctx.medication_classes, insurance_levels);
        for (std::size_t i = 0; i < row.size(); ++i) static_cols[i].push_back(row[i]);
        for (const auto& dyn : raw.dynamic_rows)
            for (std::size_t i = 0; i < dyn.size(); ++i) dynamic_cols[i].push_back(dyn[i]);
    }

    FeatureSchema schema;
    schema.insurance_levels = insurance_levels;

    auto fit_columns = [&](const std::vector<FeatureSpec>& layout,
                           std::vector<std::vector<double>>& cols,
                           std::vector<FeatureSpec>& kept, std::vector<int>& source_index) {
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& spec = layout[i];
            auto& all = cols[i];
            if (spec.kind != FeatureKind::NUMERIC) {
                bool constant = true;
                for (double v : all)
                    if (v != all.front()) {
                        constant = false;
                        break;
                    }
                if (constant) {
                    schema.dropped_constant.push_back(spec.name);
                    continue;
                }
                kept.push_back(spec);
                source_index.push_back(static_cast<int>(i));
                continue;
            }
            std::vector<double> observed;
            for (double v : all)
                if (!std::isnan(v)) observed.push_back(v);
            if (observed.empty()) {
                schema.dropped_constant.push_back(spec.name);
                continue;
            }
            FeatureStats st;
            st.cap_low = percentile(observed, 0.01);
            st.cap_high = percentile(observed, 0.99);
            std::vector<double> capped;
            capped.reserve(observed.size());
            for (double v : observed) capped.push_back(std::clamp(v, st.cap_low, st.cap_high));
            st.median = percentile(capped, 0.5);
            // moments over the capped+imputed development column so the
            // post-scaling development mean is exactly zero
            double sum = 0.0;
            for (double v : all)
                sum += std::isnan(v) ? st.median : std::clamp(v, st.cap_low, st.cap_high);
            st.mean = sum / static_cast<double>(all.size());
            double ss = 0.0;
            for (double v : all) {
                const double x = std::isnan(v) ? st.median : std::clamp(v, st.cap_low, st.cap_high);
                ss += (x - st.mean) * (x - st.mean);
            }
            st.stddev = std::sqrt(ss / static_cast<double>(all.size()));
            if (st.stddev <= 0.0) {
                schema.dropped_constant.push_back(spec.name);
                continue;
            }
            schema.stats[spec.name] = st;
            kept.push_back(spec);
            source_index.push_back(static_cast<int>(i));
        }
    };

    fit_columns(static_layout, static_cols, schema.static_features, schema.static_source_index);
    fit_columns(dynamic_layout, dynamic_cols, schema.dynamic_features, schema.dynamic_source_index);
    schema.version_hash = schema.compute_hash();
    return schema;
}

EncounterTensor apply_schema(const EncounterRaw& raw, const FeatureSchema& schema,
                             const FeatureContext& ctx) {
    EncounterTensor tensor;
    tensor.encounter_id = raw.encounter_id;
    tensor.patient_id = raw.patient_id;
    tensor.site = raw.site;
    tensor.partition = raw.partition;
    tensor.sex = raw.sex;
    tensor.race_african_american = raw.race_african_american;

    auto finalize = [&](const FeatureSpec& spec, double v) {
        if (spec.kind != FeatureKind::NUMERIC) return v;
        auto it = schema.stats.find(spec.name);
        if (it == schema.stats.end())
            throw std::logic_error("apply_schema: missing stats for " + spec.name);
        const auto& st = it->second;
        const double capped = std::isnan(v) ? st.median : std::clamp(v, st.cap_low, st.cap_high);
        return (capped - st.mean) / st.stddev;
    };

    const auto full_static = materialize_static(raw.static_raw, ctx.config, ctx.comorbidity,
                                                ctx.medication_classes, schema.insurance_levels);
    tensor.static_vec.resize(static_cast<long>(schema.static_features.size()));
    for (std::size_t i = 0; i < schema.static_features.size(); ++i)
        tensor.static_vec[static_cast<long>(i)] =
            finalize(schema.static_features[i],
                     full_static[static_cast<std::size_t>(schema.static_source_index[i])]);

    for (const auto& row : raw.dynamic_rows) {
        Eigen::VectorXd step(static_cast<long>(schema.dynamic_features.size()));
        for (std::size_t i = 0; i < schema.dynamic_features.size(); ++i)
            step[static_cast<long>(i)] =
                finalize(schema.dynamic_features[i],
                         row[static_cast<std::size_t>(schema.dynamic_source_index[i])]);
        tensor.steps.push_back(std::move(step));
    }
    for (const auto& w : raw.window_labels) {
        tensor.labels.push_back(w.label ? 1 : 0);
        tensor.already_severe.push_back(w.already_severe ? 1 : 0);
        tensor.censored.push_back(w.censored ? 1 : 0);
    }
    return tensor;
}

// ---- schema serialization ----

namespace {

nlohmann::json specs_to_json(const std::vector<FeatureSpec>& specs, const std::vector<int>& idx) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        arr.push_back({{"name", specs[i].name},
                       {"kind", specs[i].kind == FeatureKind::NUMERIC  ? "numeric"
                                : specs[i].kind == FeatureKind::BINARY ? "binary"
                                                                       : "one_hot"},
                       {"source_index", idx[i]}});
    }
    return arr;
}

void specs_from_json(const nlohmann::json& arr, std::vector<FeatureSpec>& specs,
                     std::vector<int>& idx) {
    for (const auto& item : arr) {
        FeatureSpec spec;
        spec.name = item.at("name").get<std::string>();
        const auto kind = item.at("kind").get<std::string>();
        spec.kind = kind == "numeric"  ? FeatureKind::NUMERIC
                    : kind == "binary" ? FeatureKind::BINARY
                                       : FeatureKind::ONE_HOT;
        specs.push_back(spec);
        idx.push_back(item.at("source_index").get<int>());
    }
}

}  // namespace

std::string FeatureSchema::to_json() const {
    nlohmann::json j;
    j["static_features"] = specs_to_json(static_features, static_source_index);
    j["dynamic_features"] = specs_to_json(dynamic_features, dynamic_source_index);
    nlohmann::json stats_json = nlohmann::json::object();
    for (const auto& [name, st] : stats)
        stats_json[name] = {{"cap_low", st.cap_low},
                            {"cap_high", st.cap_high},
                            {"median", st.median},
                            {"mean", st.mean},
                            {"stddev", st.stddev}};
    j["stats"] = stats_json;
    j["insurance_levels"] = insurance_levels;
    j["dropped_constant"] = dropped_constant;
    j["version_hash"] = version_hash;
    return j.dump(2);
}

std::string FeatureSchema::compute_hash() const {
    nlohmann::json j = nlohmann::json::parse(to_json());
    j.erase("version_hash");
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    FeatureSchema schema;
    specs_from_json(j.at("static_features"), schema.static_features, schema.static_source_index);
    specs_from_json(j.at("dynamic_features"), schema.dynamic_features, schema.dynamic_source_index);
    for (const auto& [name, st] : j.at("stats").items()) {
        FeatureStats fs;
        fs.cap_low = st.at("cap_low").get<double>();
        fs.cap_high = st.at("cap_high").get<double>();
        fs.median = st.at("median").get<double>();
        fs.mean = st.at("mean").get<double>();
        fs.stddev = st.at("stddev").get<double>();
        schema.stats[name] = fs;
    }
    schema.insurance_levels = j.at("insurance_levels").get<std::vector<std::string>>();
    schema.dropped_constant = j.at("dropped_constant").get<std::vector<std::string>>();
    schema.version_hash = j.at("version_hash").get<std::string>();
    return schema;
}

void FeatureSchema::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write schema: " + path);
    out << to_json() << '\n';
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

// ---- tensor container ----

namespace {

constexpr char kTensorMagic[8] = {'A', 'K', 'I', 'T', 'E', 'N', 'S', '1'};

void write_string(std::ofstream& out, const std::string& s) {
    const auto len = static_cast<std::uint32_t>(s.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

void write_bytes(std::ofstream& out, const std::vector<std::uint8_t>& v) {
    const auto len = static_cast<std::uint32_t>(v.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
}

std::vector<std::uint8_t> read_bytes(std::ifstream& in) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::vector<std::uint8_t> v(len);
    in.read(reinterpret_cast<char*>(v.data()), len);
    return v;
}

}  // namespace

void write_tensors(const std::vector<EncounterTensor>& tensors, const std::string& schema_hash,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write tensors: " + path);
    out.write(kTensorMagic, sizeof(kTensorMagic));
    write_string(out, schema_hash);
    const auto n = static_cast<std::uint64_t>(tensors.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (const auto& t : tensors) {
        write_string(out, t.encounter_id);
        write_string(out, t.patient_id);
        write_string(out, t.site);
        const std::uint8_t part = static_cast<std::uint8_t>(t.partition);
        const std::uint8_t sex = t.sex == Sex::FEMALE ? 1 : 0;
        const std::uint8_t aa = t.race_african_american ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&part), 1);
        out.write(reinterpret_cast<const char*>(&sex), 1);
        out.write(reinterpret_cast<const char*>(&aa), 1);
        const auto d_static = static_cast<std::uint32_t>(t.static_vec.size());
        out.write(reinterpret_cast<const char*>(&d_static), sizeof(d_static));
        out.write(reinterpret_cast<const char*>(t.static_vec.data()),
                  static_cast<std::streamsize>(d_static * sizeof(double)));
        const auto n_steps = static_cast<std::uint32_t>(t.steps.size());
        const auto d_dyn = static_cast<std::uint32_t>(t.steps.empty() ? 0 : t.steps[0].size());
        out.write(reinterpret_cast<const char*>(&n_steps), sizeof(n_steps));
        out.write(reinterpret_cast<const char*>(&d_dyn), sizeof(d_dyn));
        for (const auto& step : t.steps)
            out.write(reinterpret_cast<const char*>(step.data()),
                      static_cast<std::streamsize>(d_dyn * sizeof(double)));
        write_bytes(out, t.labels);
        write_bytes(out, t.already_severe);
        write_bytes(out, t.censored);
    }
}

std::vector<EncounterTensor> read_tensors(const std::string& path, std::string& schema_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tensors: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a tensor file: " + path);
    schema_hash = read_string(in);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<EncounterTensor> tensors;
    tensors.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        EncounterTensor t;
        t.encounter_id = read_string(in);
        t.patient_id = read_string(in);
        t.site = read_string(in);
        std::uint8_t part = 0, sex = 0, aa = 0;
        in.read(reinterpret_cast<char*>(&part), 1);
        in.read(reinterpret_cast<char*>(&sex), 1);
        in.read(reinterpret_cast<char*>(&aa), 1);
        t.partition = static_cast<Partition>(part);
        t.sex = sex ? Sex::FEMALE : Sex::MALE;
        t.race_african_american = aa != 0;
        std::uint32_t d_static = 0;
        in.read(reinterpret_cast<char*>(&d_static), sizeof(d_static));
        t.static_vec.resize(d_static);
        in.read(reinterpret_cast<char*>(t.static_vec.data()),
                static_cast<std::streamsize>(d_static * sizeof(double)));
        std::uint32_t n_steps = 0, d_dyn = 0;
        in.read(reinterpret_cast<char*>(&n_steps), sizeof(n_steps));
        in.read(reinterpret_cast<char*>(&d_dyn), sizeof(d_dyn));
        for (std::uint32_t k = 0; k < n_steps; ++k) {
            Eigen::VectorXd step(d_dyn);
            in.read(reinterpret_cast<char*>(step.data()),
                    static_cast<std::streamsize>(d_dyn * sizeof(double)));
            t.steps.push_back(std::move(step));
        }
        t.labels = read_bytes(in);
        t.already_severe = read_bytes(in);
        t.censored = read_bytes(in);
        if (!in) throw std::runtime_error("truncated tensor file: " + path);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

void export_tensors_tsv(const std::vector<EncounterTensor>& tensors, const FeatureSchema& schema,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "encounter_id\twindow_index\tlabel\talready_severe\tcensored";
    for (const auto& spec : schema.dynamic_features) out << '\t' << spec.name;
    for (const auto& spec : schema.static_features) out << '\t' << spec.name;
    out << '\n';
    out.precision(10);
    for (const auto& t : tensors)
        for (std::size_t k = 0; k < t.steps.size(); ++k) {
            out << t.encounter_id << '\t' << k << '\t' << int(t.labels[k]) << '\t'
                << int(t.already_severe[k]) << '\t' << int(t.censored[k]);
            for (long i = 0; i < t.steps[k].size(); ++i) out << '\t' << t.steps[k][i];
            for (long i = 0; i < t.static_vec.size(); ++i) out << '\t' << t.static_vec[i];
            out << '\n';
        }
}

}  // namespace aki
