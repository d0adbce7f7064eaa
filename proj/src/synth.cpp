#include "aki/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aki/renal.hpp"
#include "aki/rng.hpp"
#include "json.hpp"

namespace aki {

namespace {

// per-12h upward transition rates before scaling and hazard multipliers
struct BaseRates {
    double none_to_s1 = 0.012, none_to_s2 = 0.0012, none_to_s3 = 0.0002;
    double s1_to_s2 = 0.055, s1_to_s3 = 0.004;
    double s2_to_s3 = 0.045;
    double s3_to_rrt = 0.02;
    double s1_recover = 0.30, s2_recover = 0.22, s3_recover = 0.15;
};

// creatinine ratio bands consistent with the KDIGO thresholds used downstream
double stage_scr_ratio(int stage) {
    static const double kRatio[5] = {1.0, 1.7, 2.4, 3.3, 3.3};
    return kRatio[stage];
}

struct SignalModel {
    const char* code;
    double mean;
    double sd;
    double stage_shift;  // added per latent stage index
};

constexpr SignalModel kLabs[] = {
    {"sodium", 139.0, 3.0, -1.0},   {"potassium", 4.1, 0.4, 0.15},
    {"carbon_dioxide", 25.0, 3.0, -0.8}, {"chloride", 103.0, 3.0, 0.5},
    {"glucose", 115.0, 30.0, 5.0},  {"calcium", 9.3, 0.5, -0.1},
    {"wbc", 8.0, 3.0, 0.8},         {"hemoglobin", 12.5, 1.8, -0.3},
    {"hematocrit", 38.0, 5.0, -0.8}, {"platelets", 240.0, 60.0, -10.0},
    {"platelet_mean_volume", 10.0, 1.0, 0.0}, {"mcv", 90.0, 6.0, 0.0},
    {"rdw", 14.0, 2.0, 0.3},        {"albumin", 3.8, 0.5, -0.15},
    {"bilirubin_total", 0.8, 0.4, 0.05},
};

constexpr SignalModel kVitals[] = {
    {"heart_rate", 80.0, 12.0, 6.0},
    {"map", 85.0, 12.0, -4.0},
    {"respiratory_rate", 17.0, 3.0, 1.0},
    {"temperature", 36.9, 0.4, 0.1},
};

const char* kInsuranceLevels[] = {"medicare", "medicaid", "private", "other"};

double lognormal_sigma_from_iqr(double q1, double q3) {
    return std::log(q3 / q1) / (2.0 * 0.6744897501960817);
}

std::uint64_t fnv_name(const std::string& name) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ClinicalEvent make_event(const std::string& pid, const std::string& eid, Instant t,
                         EventKind kind, const std::string& code, std::optional<double> value,
                         const std::string& unit) {
    ClinicalEvent e;
    e.patient_id = pid;
    e.encounter_id = eid;
    e.timestamp = t;
    e.kind = kind;
    e.code = code;
    e.value = value;
    e.unit = unit;
    return e;
}

struct EncounterGen {
    const SiteProfile& profile;
    const NephrotoxinRegistry& registry;
    const ComorbidityRules& comorb;
    std::vector<std::string> ntx_codes;
    std::vector<std::string> class_codes;
    Instant epoch = 0;

    void generate(int index, Rng& rng, SynthOutput& out) const {
        const auto& p = profile;
        char idbuf[48];
        std::snprintf(idbuf, sizeof(idbuf), "%s_p%06d", p.name.c_str(), index);
        const std::string pid = idbuf;
        const std::string eid = pid + "_e0";
        std::vector<ClinicalEvent> events;  // this encounter only

        std::string planted = "-";
        {
            const double u = rng.uniform();
            if (u < p.plant_eskd)
                planted = "eskd";
            else if (u < p.plant_eskd + p.plant_no_early_scr)
                planted = "no_early_scr";
            else if (u < p.plant_eskd + p.plant_no_early_scr + p.plant_short_los)
                planted = "short_los";
        }

        EncounterRecord rec;
        rec.encounter_id = eid;
        rec.patient_id = pid;
        rec.age_years = std::clamp(rng.normal(p.age_mean, p.age_sd), 18.0, 100.0);
        rec.sex = rng.bernoulli(p.female_fraction) ? Sex::FEMALE : Sex::MALE;
        {
            const double u = rng.uniform();
            if (u < p.race_white)
                rec.race = Race::WHITE;
            else if (u < p.race_white + p.race_african_american)
                rec.race = Race::AFRICAN_AMERICAN;
            else if (u < p.race_white + p.race_african_american + p.race_other)
                rec.race = Race::OTHER;
            else
                rec.race = Race::MISSING;
        }
        rec.ethnicity =
            rng.bernoulli(p.hispanic_fraction) ? Ethnicity::HISPANIC : Ethnicity::NON_HISPANIC;
        rec.admission_source = rng.bernoulli(0.4) ? 1 : 0;
        rec.insurance = kInsuranceLevels[rng.uniform_index(4)];
        rec.language = rng.bernoulli(0.9) ? 1 : 0;
        rec.admit_time = epoch + static_cast<Instant>(rng.uniform_index(365)) * kDay +
                         static_cast<Instant>(rng.uniform_index(24)) * kHour;

        const double egfr_sigma = lognormal_sigma_from_iqr(p.baseline_egfr_q1, p.baseline_egfr_q3);
        const double baseline_egfr =
            std::clamp(std::exp(rng.normal(std::log(p.baseline_egfr_median), egfr_sigma)), 8.0, 150.0);
        const double baseline_scr = backcalc_scr(baseline_egfr, rec.age_years, rec.sex);

        double los_days;
        if (planted == "short_los") {
            los_days = rng.uniform(1.3, 1.9);
        } else {
            const double los_sigma = lognormal_sigma_from_iqr(p.los_days_q1, p.los_days_q3);
            los_days =
                std::clamp(std::exp(rng.normal(std::log(p.los_days_median), los_sigma)), 2.2, 40.0);
        }
        rec.discharge_time = rec.admit_time + static_cast<Instant>(los_days * kDay);
        const int n_steps = static_cast<int>((rec.discharge_time - rec.admit_time) / kWindowStep);

        // ---- preadmission history ----
        if (planted == "eskd")
            events.push_back(make_event(pid, "", rec.admit_time - 30 * kDay, EventKind::DIAGNOSIS,
                                        "N18.6", std::nullopt, ""));
        for (const auto& [flag, prev] : p.comorbidity_prevalence) {
            if (!rng.bernoulli(prev)) continue;
            for (const auto& [prefix, name] : comorb.prefix_to_flag)
                if (name == flag) {
                    events.push_back(make_event(
                        pid, "",
                        rec.admit_time - static_cast<Instant>(30 + rng.uniform_index(300)) * kDay,
                        EventKind::DIAGNOSIS, prefix, std::nullopt, ""));
                    break;
                }
        }
        const int n_pre_scr = 1 + static_cast<int>(rng.uniform_index(3));
        for (int i = 0; i < n_pre_scr; ++i) {
            const Instant t =
                rec.admit_time - static_cast<Instant>(1 + rng.uniform_index(6 * 24)) * kHour;
            events.push_back(make_event(pid, "", t, EventKind::LAB, "creatinine",
                                        baseline_scr * rng.lognormal(0.0, p.noise_scale), "mg/dL"));
        }
        const double bun_base = 12.0 + 700.0 / baseline_egfr;
        events.push_back(make_event(pid, "", rec.admit_time - 2 * kDay, EventKind::LAB,
                                    "urea_nitrogen", bun_base * rng.lognormal(0.0, 0.1), "mg/dL"));
        events.push_back(make_event(pid, "", rec.admit_time - 3 * kDay, EventKind::LAB, "hemoglobin",
                                    rng.normal(12.5, 1.8), "g/dL"));
        const int n_pre_meds = static_cast<int>(rng.uniform_index(5));
        for (int i = 0; i < n_pre_meds && !class_codes.empty(); ++i)
            events.push_back(make_event(
                pid, "", rec.admit_time - static_cast<Instant>(5 + rng.uniform_index(300)) * kDay,
                EventKind::MEDICATION, class_codes[rng.uniform_index(class_codes.size())],
                std::nullopt, "oral"));

        // ---- nephrotoxin exposure: marked Poisson over a preadmission tail
        // and the whole stay; the same administrations drive both the planted
        // hazard and the downstream burden features ----
        const bool exposed = rng.bernoulli(p.nephrotoxin_exposure_rate);
        std::map<std::int64_t, double> truth_daily_burden;
        if (exposed && !ntx_codes.empty()) {
            double t_days = -3.0;
            for (;;) {
                t_days += rng.exponential(p.nephrotoxin_daily_rate);
                if (t_days >= los_days) break;
                const Instant ts =
                    std::max(rec.admit_time + static_cast<Instant>(t_days * kDay),
                             rec.admit_time - 3 * kDay);
                const auto& code = ntx_codes[rng.uniform_index(ntx_codes.size())];
                events.push_back(
                    make_event(pid, t_days < 0.0 ? "" : eid, ts, EventKind::MEDICATION, code,
                               std::nullopt, "iv"));
                const auto* entry = registry.find(code);
                if (entry) truth_daily_burden[day_index(ts)] += entry->weight;
            }
        }

        // ---- latent stage walk with per-window measurements ----
        const BaseRates rates;
        int stage = 0;  // 0..4, 4 = RRT (absorbing)
        AkiStage worst = AkiStage::NONE;
        bool rrt_emitted = false;
        const bool skip_early_scr = planted == "no_early_scr";

        for (int k = 0; k < n_steps; ++k) {
            const Instant start = rec.admit_time + static_cast<Instant>(k) * kWindowStep;

            double burden = 0.0;
            const std::int64_t today = day_index(start);
            for (std::int64_t d = today - 6; d <= today; ++d) {
                auto it = truth_daily_burden.find(d);
                if (it != truth_daily_burden.end()) burden += it->second;
            }
            // kinetic deficit proxy: how far the current creatinine plateau
            // pulls the kinetic estimate below baseline
            const double deficit = std::max(0.0, 1.0 - 1.0 / stage_scr_ratio(stage));
            const double multiplier = std::exp(p.beta_burden * burden + p.beta_kegfr * deficit);

            if (stage < 4) {
                double up1 = 0.0, up2 = 0.0, up3 = 0.0, down = 0.0;
                if (stage == 0) {
                    up1 = rates.none_to_s1 * p.transition_scale * multiplier;
                    up2 = rates.none_to_s2 * p.transition_scale * multiplier;
                    up3 = rates.none_to_s3 * p.transition_scale * multiplier;
                } else if (stage == 1) {
                    up1 = rates.s1_to_s2 * p.transition_scale * multiplier;
                    up2 = rates.s1_to_s3 * p.transition_scale * multiplier;
                    down = rates.s1_recover;
                } else if (stage == 2) {
                    up1 = rates.s2_to_s3 * p.transition_scale * multiplier;
                    down = rates.s2_recover;
                } else {
                    up1 = rates.s3_to_rrt * p.transition_scale * multiplier;
                    down = rates.s3_recover;
                }
                const double raw_up = up1 + up2 + up3;
                const double total_up = std::min(raw_up, 0.90);
                const double shrink = raw_up > 0.0 ? total_up / raw_up : 0.0;
                const double u = rng.uniform();
                if (u < up1 * shrink)
                    stage += 1;
                else if (u < (up1 + up2) * shrink)
                    stage += 2;
                else if (u < (up1 + up2 + up3) * shrink)
                    stage += 3;
                else if (u < total_up + down)
                    stage -= 1;
                stage = std::clamp(stage, 0, 4);
            }
            worst = max_stage(worst, static_cast<AkiStage>(stage));

            if (stage == 4 && !rrt_emitted) {
                events.push_back(
                    make_event(pid, eid, start + kHour, EventKind::DIALYSIS, "rrt", std::nullopt, ""));
                rrt_emitted = true;
            }

            // creatinine for this window (suppressed for the planted exclusion)
            const double offset_h = rng.uniform(3.0, 11.0);
            const Instant scr_time = start + static_cast<Instant>(offset_h * kHour);
            const bool in_early_skip = skip_early_scr && scr_time < rec.admit_time + 2 * kDay;
            if (!in_early_skip && scr_time < rec.discharge_time) {
                const double scr = baseline_scr * stage_scr_ratio(std::min(stage, 3)) *
                                   rng.lognormal(0.0, p.noise_scale);
                events.push_back(
                    make_event(pid, eid, scr_time, EventKind::LAB, "creatinine", scr, "mg/dL"));
            }

            for (const auto& vital : kVitals)
                for (int half = 0; half < 2; ++half) {
                    const int n_obs = 1 + (rng.bernoulli(0.35) ? 1 : 0);
                    for (int i = 0; i < n_obs; ++i) {
                        const Instant t = start + half * 6 * kHour +
                                          static_cast<Instant>(rng.uniform(0.1, 5.9) * kHour);
                        if (t >= rec.discharge_time) continue;
                        events.push_back(make_event(
                            pid, eid, t, EventKind::VITAL, vital.code,
                            rng.normal(vital.mean + vital.stage_shift * stage, vital.sd), ""));
                    }
                }

            for (const auto& lab : kLabs) {
                if (!rng.bernoulli(0.7)) continue;
                const Instant t = start + static_cast<Instant>(rng.uniform(0.5, 11.5) * kHour);
                if (t >= rec.discharge_time) continue;
                events.push_back(make_event(pid, eid, t, EventKind::LAB, lab.code,
                                            rng.normal(lab.mean + lab.stage_shift * stage, lab.sd),
                                            ""));
            }
            // blood urea nitrogen tracks the latent stage; it carries real signal
            if (rng.bernoulli(0.9)) {
                static const double kBunMult[5] = {1.0, 1.35, 1.8, 2.3, 2.6};
                const Instant t = start + static_cast<Instant>(rng.uniform(0.5, 11.5) * kHour);
                if (t < rec.discharge_time)
                    events.push_back(make_event(pid, eid, t, EventKind::LAB, "urea_nitrogen",
                                                bun_base * kBunMult[stage] * rng.lognormal(0.0, 0.08),
                                                "mg/dL"));
            }
        }

        out.events.insert(out.events.end(), events.begin(), events.end());
        out.encounters.push_back(rec);
        GroundTruthRow row;
        row.encounter_id = eid;
        row.baseline_egfr = baseline_egfr;
        row.baseline_scr = baseline_scr;
        row.nephrotoxin_exposed = exposed;
        row.latent_worst = worst;
        row.planted_exclusion = planted;
        out.truth.push_back(row);
    }
};

}  // namespace

void SiteProfile::validate() const {
    if (n_encounters < 1) throw std::invalid_argument("profile: n_encounters must be >= 1");
    const double race_sum = race_white + race_african_american + race_other + race_missing;
    if (std::abs(race_sum - 1.0) > 1e-6)
        throw std::invalid_argument("profile: race proportions must sum to 1");
    for (double p : {female_fraction, hispanic_fraction, nephrotoxin_exposure_rate})
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("profile: proportion outside [0,1]");
    if (baseline_egfr_median <= 0 || los_days_median <= 0 || noise_scale < 0)
        throw std::invalid_argument("profile: scale parameters must be positive");
}

SiteProfile SiteProfile::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open site profile: " + path);
    nlohmann::json j;
    in >> j;
    SiteProfile p;
    p.name = j.value("name", p.name);
    p.n_encounters = j.value("n_encounters", p.n_encounters);
    p.age_mean = j.value("age_mean", p.age_mean);
    p.age_sd = j.value("age_sd", p.age_sd);
    p.female_fraction = j.value("female_fraction", p.female_fraction);
    p.race_white = j.value("race_white", p.race_white);
    p.race_african_american = j.value("race_african_american", p.race_african_american);
    p.race_other = j.value("race_other", p.race_other);
    p.race_missing = j.value("race_missing", p.race_missing);
    p.hispanic_fraction = j.value("hispanic_fraction", p.hispanic_fraction);
    if (j.contains("comorbidity_prevalence"))
        for (const auto& [k, v] : j.at("comorbidity_prevalence").items())
            p.comorbidity_prevalence[k] = v.get<double>();
    p.baseline_egfr_median = j.value("baseline_egfr_median", p.baseline_egfr_median);
    p.baseline_egfr_q1 = j.value("baseline_egfr_q1", p.baseline_egfr_q1);
    p.baseline_egfr_q3 = j.value("baseline_egfr_q3", p.baseline_egfr_q3);
    p.los_days_median = j.value("los_days_median", p.los_days_median);
    p.los_days_q1 = j.value("los_days_q1", p.los_days_q1);
    p.los_days_q3 = j.value("los_days_q3", p.los_days_q3);
    if (j.contains("worst_stage_targets")) {
        const auto t = j.at("worst_stage_targets").get<std::vector<double>>();
        if (t.size() != 5) throw std::runtime_error("profile: worst_stage_targets needs 5 entries");
        std::copy(t.begin(), t.end(), p.worst_stage_targets.begin());
    }
    p.transition_scale = j.value("transition_scale", p.transition_scale);
    p.nephrotoxin_exposure_rate = j.value("nephrotoxin_exposure_rate", p.nephrotoxin_exposure_rate);
    p.nephrotoxin_daily_rate = j.value("nephrotoxin_daily_rate", p.nephrotoxin_daily_rate);
    p.beta_burden = j.value("beta_burden", p.beta_burden);
    p.beta_kegfr = j.value("beta_kegfr", p.beta_kegfr);
    p.noise_scale = j.value("noise_scale", p.noise_scale);
    p.plant_eskd = j.value("plant_eskd", p.plant_eskd);
    p.plant_no_early_scr = j.value("plant_no_early_scr", p.plant_no_early_scr);
    p.plant_short_los = j.value("plant_short_los", p.plant_short_los);
    p.validate();
    return p;
}

std::string SiteProfile::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["n_encounters"] = n_encounters;
    j["age_mean"] = age_mean;
    j["age_sd"] = age_sd;
    j["female_fraction"] = female_fraction;
    j["race_white"] = race_white;
    j["race_african_american"] = race_african_american;
    j["race_other"] = race_other;
    j["race_missing"] = race_missing;
    j["hispanic_fraction"] = hispanic_fraction;
    j["comorbidity_prevalence"] = comorbidity_prevalence;
    j["baseline_egfr_median"] = baseline_egfr_median;
    j["baseline_egfr_q1"] = baseline_egfr_q1;
    j["baseline_egfr_q3"] = baseline_egfr_q3;
    j["los_days_median"] = los_days_median;
    j["los_days_q1"] = los_days_q1;
    j["los_days_q3"] = los_days_q3;
    j["worst_stage_targets"] = worst_stage_targets;
    j["transition_scale"] = transition_scale;
    j["nephrotoxin_exposure_rate"] = nephrotoxin_exposure_rate;
    j["nephrotoxin_daily_rate"] = nephrotoxin_daily_rate;
    j["beta_burden"] = beta_burden;
    j["beta_kegfr"] = beta_kegfr;
    j["noise_scale"] = noise_scale;
    j["plant_eskd"] = plant_eskd;
    j["plant_no_early_scr"] = plant_no_early_scr;
    j["plant_short_los"] = plant_short_los;
    return j.dump(2);
}

SynthOutput generate_site(const SiteProfile& profile, std::uint64_t seed,
                          const NephrotoxinRegistry& registry, const ComorbidityRules& comorb,
                          const MedicationClassRules& medclass) {
    profile.validate();
    SynthOutput out;
    out.beta_burden = profile.beta_burden;
    out.beta_kegfr = profile.beta_kegfr;

    EncounterGen gen{profile, registry, comorb, registry.codes(), {}, 0};
    for (const auto& [code, cls] : medclass.code_to_class) gen.class_codes.push_back(code);
    gen.epoch = *parse_instant("2019-01-01T00:00:00Z");

    for (int i = 0; i < profile.n_encounters; ++i) {
        Rng rng(substream_seed(seed ^ fnv_name(profile.name), static_cast<std::uint64_t>(i)));
        gen.generate(i, rng, out);
    }
    return out;
}

void write_ground_truth(const SynthOutput& output, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ground truth: " + path);
    out << "# beta_burden=" << output.beta_burden << " beta_kegfr=" << output.beta_kegfr << '\n';
    out.precision(12);
    for (const auto& row : output.truth)
        out << row.encounter_id << '\t' << row.baseline_egfr << '\t' << row.baseline_scr << '\t'
            << int(row.nephrotoxin_exposed) << '\t' << to_string(row.latent_worst) << '\t'
            << row.planted_exclusion << '\n';
}

std::vector<GroundTruthRow> read_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground truth: " + path);
    std::vector<GroundTruthRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        GroundTruthRow row;
        std::string worst;
        int exposed = 0;
        ss >> row.encounter_id >> row.baseline_egfr >> row.baseline_scr >> exposed >> worst >>
            row.planted_exclusion;
        row.nephrotoxin_exposed = exposed != 0;
        for (int s = 0; s < 5; ++s)
            if (worst == to_string(static_cast<AkiStage>(s)))
                row.latent_worst = static_cast<AkiStage>(s);
        rows.push_back(row);
    }
    return rows;
}

bool MarginalReport::all_ok() const {
    for (const auto& c : checks)
        if (c.status == MarginalStatus::FAIL) return false;
    return true;
}

MarginalReport validate_marginals(const SynthOutput& output, const SiteProfile& profile) {
    MarginalReport report;
    const auto n = output.encounters.size();
    if (n == 0) return report;
    const double dn = static_cast<double>(n);
    const bool underpowered = n < 30;

    auto add = [&](const std::string& name, double target, double observed, double tolerance) {
        MarginalCheck c;
        c.name = name;
        c.target = target;
        c.observed = observed;
        c.tolerance = tolerance;
        c.status = underpowered                           ? MarginalStatus::UNDERPOWERED
                   : std::abs(observed - target) <= tolerance ? MarginalStatus::OK
                                                              : MarginalStatus::FAIL;
        report.checks.push_back(c);
    };

    double age_sum = 0.0, female = 0.0, aa = 0.0;
    std::vector<double> los_days;
    for (const auto& rec : output.encounters) {
        age_sum += rec.age_years;
        female += rec.sex == Sex::FEMALE;
        aa += rec.race == Race::AFRICAN_AMERICAN;
        los_days.push_back(to_hours(rec.los()) / 24.0);
    }
    add("age_mean", profile.age_mean, age_sum / dn, 3.0 * profile.age_sd / std::sqrt(dn) + 0.5);
    auto prop_tol = [&](double p) {
        return 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-6) / dn) + 0.005;
    };
    add("female_fraction", profile.female_fraction, female / dn, prop_tol(profile.female_fraction));
    add("african_american_fraction", profile.race_african_american, aa / dn,
        prop_tol(profile.race_african_american));

    std::array<double, 5> stage_counts{};
    for (const auto& row : output.truth) stage_counts[static_cast<int>(row.latent_worst)] += 1.0;
    // +-4 point acceptance band on the no-AKI fraction, sampling bands elsewhere
    add("worst_stage_none", profile.worst_stage_targets[0], stage_counts[0] / dn, 0.04);
    for (int s = 1; s < 5; ++s)
        add("worst_stage_" + std::to_string(s), profile.worst_stage_targets[s],
            stage_counts[s] / dn, prop_tol(profile.worst_stage_targets[s]) + 0.01);

    std::sort(los_days.begin(), los_days.end());
    add("los_days_median", profile.los_days_median, los_days[los_days.size() / 2], 1.0);
    return report;
}

void write_marginal_report(const MarginalReport& report, std::ostream& out) {
    out << "check\ttarget\tobserved\ttolerance\tstatus\n";
    out.precision(5);
    for (const auto& c : report.checks) {
        const char* status = c.status == MarginalStatus::OK             ? "OK"
                             : c.status == MarginalStatus::UNDERPOWERED ? "UNDERPOWERED"
                                                                        : "FAIL";
        out << c.name << '\t' << c.target << '\t' << c.observed << '\t' << c.tolerance << '\t'
            << status << '\n';
    }
}

}  // namespace aki
