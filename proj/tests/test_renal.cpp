#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "aki/renal.hpp"
#include "aki/rng.hpp"

using namespace aki;

TEST_CASE("egfr reference value: female 50y scr 0.7") {
    // independent evaluation of the published refit coefficients:
    // 142 * (0.7/0.7)^-0.241 * 1^-1.2 * 0.9938^50 * 1.012 = 105.26
    CHECK(egfr_ckdepi_2021(0.7, 50, Sex::FEMALE) == doctest::Approx(105.2).epsilon(0.005));
}

TEST_CASE("egfr is strictly decreasing in scr and age") {
    CHECK(egfr_ckdepi_2021(2.0, 60, Sex::MALE) < egfr_ckdepi_2021(1.0, 60, Sex::MALE));
    CHECK(egfr_ckdepi_2021(1.0, 80, Sex::FEMALE) < egfr_ckdepi_2021(1.0, 40, Sex::FEMALE));
}

TEST_CASE("egfr continuous at the kappa knee") {
    for (Sex sex : {Sex::FEMALE, Sex::MALE}) {
        const double kappa = sex == Sex::FEMALE ? 0.7 : 0.9;
        const double below = egfr_ckdepi_2021(kappa - 1e-9, 40, sex);
        const double above = egfr_ckdepi_2021(kappa + 1e-9, 40, sex);
        CHECK(std::abs(below - above) < 1e-5);
    }
}

TEST_CASE("egfr domain errors") {
    CHECK_THROWS_AS(egfr_ckdepi_2021(0.0, 50, Sex::MALE), std::domain_error);
    CHECK_THROWS_AS(egfr_ckdepi_2021(-1.0, 50, Sex::MALE), std::domain_error);
    CHECK_THROWS_AS(egfr_ckdepi_2021(1.0, 0.0, Sex::MALE), std::domain_error);
}

TEST_CASE("backcalc round trip across a grid of ages and sexes") {
    for (Sex sex : {Sex::FEMALE, Sex::MALE})
        for (double age = 18; age <= 95; age += 7)
            for (double scr = 0.3; scr <= 10.0; scr += 0.487) {
                const double target = egfr_ckdepi_2021(scr, age, sex);
                const double back = backcalc_scr(target, age, sex);
                CHECK(std::abs(back - scr) / scr < 1e-6);
            }
}

TEST_CASE("backcalc inverse of the reference example") {
    CHECK(backcalc_scr(105.2, 50, Sex::FEMALE) == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("backcalc rejects unachievable targets") {
    CHECK_THROWS_AS(backcalc_scr(1e6, 50, Sex::FEMALE), std::domain_error);
    CHECK_THROWS_AS(backcalc_scr(0.0, 50, Sex::FEMALE), std::domain_error);
}

TEST_CASE("kegfr steady state returns the reference egfr exactly") {
    for (double dt : {12.0, 24.0, 96.0})
        for (double scr : {0.6, 1.0, 2.5}) CHECK(kegfr(scr, scr, dt, scr, 88.0) == 88.0);
}

TEST_CASE("kegfr hand-computed rising creatinine") {
    // 100 * (1/1.5) * (1 - 24*1/(24*1.5)) = 22.22
    CHECK(kegfr(1.0, 2.0, 24.0, 1.0, 100.0) == doctest::Approx(22.22).epsilon(0.001));
}

TEST_CASE("kegfr clamps to zero when creatinine rises fast") {
    CHECK(kegfr(1.0, 4.0, 12.0, 1.0, 100.0) == 0.0);
}

TEST_CASE("kegfr strictly decreasing in current creatinine") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const double prev = rng.uniform(0.4, 3.0);
        const double curr = rng.uniform(0.4, 3.0);
        const double dt = rng.uniform(12.0, 72.0);
        const double lo = kegfr(prev, curr, dt, 1.0, 90.0);
        const double hi = kegfr(prev, curr + 0.1, dt, 1.0, 90.0);
        if (lo > 0.0) CHECK(hi < lo);
    }
}

TEST_CASE("constants validate") {
    RenalConstants c;
    CHECK_NOTHROW(c.validate());
    c.alpha_female = 0.2;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
