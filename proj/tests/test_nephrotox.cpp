#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "aki/nephrotox.hpp"
#include "aki/rng.hpp"

using namespace aki;

namespace {

struct TempFile {
    std::string path;
    TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

ClinicalEvent med(Instant t, const std::string& code, const std::string& route = "") {
    ClinicalEvent e;
    e.patient_id = "p";
    e.timestamp = t;
    e.kind = EventKind::MEDICATION;
    e.code = code;
    e.unit = route;
    return e;
}

NephrotoxinRegistry toy_registry() {
    NephrotoxinRegistry r;
    r.add({"A", "drug a", NxpScore::score(1.0), 0.2, {}});
    r.add({"B", "drug b", NxpScore::score(3.0), 1.0, {}});
    r.add({"C", "drug c", NxpScore::score(2.0), 0.6, {}});
    return r;
}

}  // namespace

TEST_CASE("nxp score to weight mapping") {
    CHECK(weight_from_nxp(NxpScore::score(1.0)) == doctest::Approx(0.2));
    CHECK(weight_from_nxp(NxpScore::score(1.5)) == doctest::Approx(0.4));
    CHECK(weight_from_nxp(NxpScore::score(2.0)) == doctest::Approx(0.6));
    CHECK(weight_from_nxp(NxpScore::score(2.5)) == doctest::Approx(0.8));
    CHECK(weight_from_nxp(NxpScore::score(3.0)) == doctest::Approx(1.0));
    CHECK(weight_from_nxp(NxpScore::added()) == doctest::Approx(0.2));
    CHECK_THROWS_AS(weight_from_nxp(NxpScore::score(0.5)), std::domain_error);
    CHECK_THROWS_AS(weight_from_nxp(NxpScore::score(2.2)), std::domain_error);
}

TEST_CASE("registry load: combinations, routes, duplicates") {
    TempFile file("t_registry.tsv",
                  "COMBO\tcombo product\t1.0+2.5\t\t\n"
                  "OPH\teye drops\t2.0\t\tophthalmic\n"
                  "DUP\tfirst\t1.0\t\t\n"
                  "DUP\tsecond\t1.5\t\t\n"
                  "LOW\tsub-threshold\t0.5\t\t\n"
                  "BADW\tbad weight\t2.0\t1.7\t\n");
    RegistryLoadReport report;
    auto registry = load_registry(file.path, report);

    const auto* combo = registry.find("COMBO");
    REQUIRE(combo);
    CHECK(combo->weight == doctest::Approx(0.8));  // max component 2.5 -> 0.8

    const auto* dup = registry.find("DUP");
    REQUIRE(dup);
    CHECK(dup->weight == doctest::Approx(0.4));  // last wins

    CHECK(registry.find("LOW") == nullptr);
    CHECK(registry.find("BADW") == nullptr);
    CHECK(report.rejected == 2);
    CHECK(!report.warnings.empty());

    // route-excluded administration contributes nothing
    auto e = med(0, "OPH", "ophthalmic");
    CHECK(daily_burden({&e}, registry) == 0.0);
    auto e2 = med(0, "OPH", "iv");
    CHECK(daily_burden({&e2}, registry) == doctest::Approx(0.6));
}

TEST_CASE("empty registry file warns") {
    TempFile file("t_empty_registry.tsv", "");
    RegistryLoadReport report;
    auto registry = load_registry(file.path, report);
    CHECK(registry.empty());
    CHECK(!report.warnings.empty());
}

TEST_CASE("daily burden counts each drug once") {
    auto registry = toy_registry();
    auto a = med(0, "A");
    auto b1 = med(10, "B");
    auto b2 = med(20, "B");
    CHECK(daily_burden({&a, &b1, &b2}, registry) == doctest::Approx(1.2));
    CHECK(daily_burden({}, registry) == 0.0);
    auto x = med(0, "UNKNOWN");
    CHECK(daily_burden({&x}, registry) == 0.0);
}

TEST_CASE("five distinct low-certainty drugs sum to one") {
    NephrotoxinRegistry r;
    std::vector<ClinicalEvent> events;
    for (int i = 0; i < 5; ++i) {
        std::string code = "D" + std::to_string(i);
        r.add({code, code, NxpScore::score(1.0), 0.2, {}});
        events.push_back(med(i, code));
    }
    std::vector<const ClinicalEvent*> ptrs;
    for (const auto& e : events) ptrs.push_back(&e);
    CHECK(daily_burden(ptrs, r) == doctest::Approx(1.0));
}

TEST_CASE("daily burden is permutation invariant") {
    auto registry = toy_registry();
    std::vector<ClinicalEvent> events{med(0, "A"), med(1, "B"), med(2, "C"), med(3, "B")};
    std::vector<const ClinicalEvent*> ptrs;
    for (const auto& e : events) ptrs.push_back(&e);
    const double base = daily_burden(ptrs, registry);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        rng.shuffle(ptrs);
        CHECK(daily_burden(ptrs, registry) == doctest::Approx(base));
    }
}

TEST_CASE("accumulated burden: constant dosing and drop-off") {
    BurdenSeries s;
    s.encounter_id = "e";
    for (int d = 0; d < 10; ++d) s.daily[d] = 0.2;
    CHECK(s.accumulated(8) == doctest::Approx(1.4));  // 7 x 0.2

    BurdenSeries single;
    single.daily[0] = 1.0;
    for (int d = 0; d <= 6; ++d) CHECK(single.accumulated(d) == doctest::Approx(1.0));
    CHECK(single.accumulated(7) == 0.0);
}

TEST_CASE("accumulated burden matches the sliding-window brute force") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        BurdenSeries s;
        for (int d = 0; d < 30; ++d)
            if (rng.bernoulli(0.6)) s.daily[d] = 0.2 * static_cast<double>(1 + rng.uniform_index(5));
        for (int d = 0; d < 30; ++d) {
            double brute = 0.0;
            for (int j = d - 6; j <= d; ++j) {
                auto it = s.daily.find(j);
                if (it != s.daily.end()) brute += it->second;
            }
            CHECK(s.accumulated(d) == brute);
        }
    }
}

TEST_CASE("bounded increments identity") {
    Rng rng(23);
    BurdenSeries s;
    for (int d = 0; d < 40; ++d)
        if (rng.bernoulli(0.5)) s.daily[d] = rng.uniform(0.2, 1.0);
    auto daily_of = [&](int d) {
        auto it = s.daily.find(d);
        return it == s.daily.end() ? 0.0 : it->second;
    };
    for (int d = 0; d < 39; ++d)
        CHECK(s.accumulated(d + 1) - s.accumulated(d) ==
              doctest::Approx(daily_of(d + 1) - daily_of(d - 6)).epsilon(1e-12));
}

TEST_CASE("burden series from an encounter timeline respects day boundaries") {
    EncounterRecord rec;
    rec.patient_id = "p";
    rec.encounter_id = "e";
    rec.admit_time = *parse_instant("2020-01-10T00:00:00Z");
    rec.discharge_time = rec.admit_time + 4 * kDay;
    rec.age_years = 60;

    std::vector<ClinicalEvent> pre{med(rec.admit_time - 2 * kDay, "B")};
    std::vector<ClinicalEvent> adm{med(rec.admit_time + 2 * kHour, "A"),
                                   med(rec.admit_time + 3 * kHour, "A"),
                                   med(rec.admit_time + kDay, "C")};
    for (auto& e : pre) e.patient_id = "p";
    for (auto& e : adm) e.encounter_id = "e";

    EncounterTimeline tl;
    tl.encounter = &rec;
    for (const auto& e : pre) tl.preadmission_events.push_back(&e);
    for (const auto& e : adm) tl.admission_events.push_back(&e);

    auto series = burden_series(tl, toy_registry());
    const auto d0 = day_index(rec.admit_time);
    CHECK(series.daily.at(d0 - 2) == doctest::Approx(1.0));  // preadmission B
    CHECK(series.daily.at(d0) == doctest::Approx(0.2));      // A once
    CHECK(series.daily.at(d0 + 1) == doctest::Approx(0.6));  // C
    // preadmission exposure still inside the 7-day lookback on admission day
    CHECK(series.accumulated(d0) == doctest::Approx(1.2));
}
