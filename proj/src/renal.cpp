#include "aki/renal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aki {

void RenalConstants::validate() const {
    bool ok = kappa_female > 0 && kappa_male > 0 && age_base > 0 && sex_multiplier_female > 0 &&
              scale > 0 && max_daily_delta_scr > 0 && assumed_egfr_for_backcalc > 0 &&
              alpha_female < 0 && alpha_male < 0 && high_scr_exponent < 0;
    if (!ok) throw std::invalid_argument("RenalConstants: invalid constant set");
}

double egfr_ckdepi_2021(double scr, double age, Sex sex, const RenalConstants& c) {
    if (!(scr > 0.0)) throw std::domain_error("egfr_ckdepi_2021: scr must be positive");
    if (!(age > 0.0)) throw std::domain_error("egfr_ckdepi_2021: age must be positive");
    const double kappa = sex == Sex::FEMALE ? c.kappa_female : c.kappa_male;
    const double alpha = sex == Sex::FEMALE ? c.alpha_female : c.alpha_male;
    const double ratio = scr / kappa;
    double egfr = c.scale * std::pow(std::min(ratio, 1.0), alpha) *
                  std::pow(std::max(ratio, 1.0), c.high_scr_exponent) * std::pow(c.age_base, age);
    if (sex == Sex::FEMALE) egfr *= c.sex_multiplier_female;
    return egfr;
}

double backcalc_scr(double target_egfr, double age, Sex sex, const RenalConstants& c) {
    if (!(target_egfr > 0.0)) throw std::domain_error("backcalc_scr: target must be positive");
    double lo = 0.1, hi = 20.0;
    // egfr is strictly decreasing in scr, so the bracket must straddle target
    double f_lo = egfr_ckdepi_2021(lo, age, sex, c);
    double f_hi = egfr_ckdepi_2021(hi, age, sex, c);
    if (target_egfr > f_lo || target_egfr < f_hi)
        throw std::domain_error("backcalc_scr: target eGFR outside achievable range");
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        if (egfr_ckdepi_2021(mid, age, sex, c) > target_egfr)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double kegfr(double scr_prev, double scr_curr, double dt_hours, double ref_scr, double ref_egfr,
             const RenalConstants& c) {
    if (!(scr_prev > 0.0) || !(scr_curr > 0.0) || !(ref_scr > 0.0) || !(ref_egfr > 0.0))
        throw std::domain_error("kegfr: inputs must be positive");
    const double mean_scr = 0.5 * (scr_prev + scr_curr);
    const double bracket =
        1.0 - 24.0 * (scr_curr - scr_prev) / (dt_hours * c.max_daily_delta_scr);
    return std::max(0.0, ref_egfr * ref_scr / mean_scr * bracket);
}

}  // namespace aki
