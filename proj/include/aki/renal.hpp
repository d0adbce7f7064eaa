#pragma once

#include "aki/events.hpp"

namespace aki {

// Coefficients of the 2021 CKD-EPI creatinine equation (race-free refit)
// plus the kinetic-eGFR parameters. Defaults follow the published refit;
// kept in one struct so tests can pin them and configs can override.
struct RenalConstants {
    double kappa_female = 0.7;   // mg/dL
    double kappa_male = 0.9;     // mg/dL
    double alpha_female = -0.241;
    double alpha_male = -0.302;
    double high_scr_exponent = -1.200;
    double age_base = 0.9938;
    double sex_multiplier_female = 1.012;
    double scale = 142.0;  // mL/min/1.73m^2

    double max_daily_delta_scr = 1.5;        // mg/dL per day
    double assumed_egfr_for_backcalc = 75.0; // mL/min/1.73m^2

    void validate() const;  // throws std::invalid_argument on a bad set
};

// 2021 CKD-EPI refit without race. scr in mg/dL, age in years.
double egfr_ckdepi_2021(double scr, double age, Sex sex,
                        const RenalConstants& c = RenalConstants{});

// Inverts egfr_ckdepi_2021 by monotone bisection on scr in [0.1, 20] mg/dL.
// Throws std::domain_error when the target is unachievable on the bracket.
double backcalc_scr(double target_egfr, double age, Sex sex,
                    const RenalConstants& c = RenalConstants{});

// Kinetic eGFR between two creatinine measurements dt hours apart (dt >= 12
// by the caller's scheduling contract). Clamped below at zero.
double kegfr(double scr_prev, double scr_curr, double dt_hours, double ref_scr,
             double ref_egfr, const RenalConstants& c = RenalConstants{});

}  // namespace aki
