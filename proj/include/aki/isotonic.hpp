#pragma once

#include <cstdint>
#include <vector>

namespace aki {

// Nondecreasing step calibrator fitted by pool-adjacent-violators.
// Application is right continuous; queries outside the knot range clamp to
// the first/last value.
struct IsotonicCalibrator {
    std::vector<double> breakpoints;  // increasing score knots
    std::vector<double> values;       // nondecreasing calibrated probabilities

    double apply(double score) const;
};

// Least-squares monotone fit over (score, target) pairs; equal-score rows
// are pooled before PAVA runs.
IsotonicCalibrator fit_isotonic(std::vector<std::pair<double, double>> rows);

struct ReliabilityBin {
    double bin_low = 0.0;
    double bin_high = 0.0;
    std::size_t count = 0;
    double mean_score = 0.0;   // NaN when empty
    double event_rate = 0.0;   // NaN when empty
};

struct ReliabilityDiagram {
    std::vector<ReliabilityBin> bins;
    double expected_calibration_error = 0.0;  // count-weighted mean |gap|
};

ReliabilityDiagram reliability_bins(const std::vector<std::pair<double, double>>& rows,
                                    int bins = 20);

}  // namespace aki
