#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aki/features.hpp"
#include "aki/model.hpp"

namespace aki {

struct AttributionVector {
    std::vector<double> static_attr;               // per static feature
    std::vector<std::vector<double>> dynamic_attr; // per step, per dynamic feature
    double completeness_residual = 0.0;            // sum(attr) - (F(x) - F(0))
    double output_at_input = 0.0;
    double output_at_baseline = 0.0;
};

// Generic midpoint-Riemann integrated gradients against the zero baseline.
// `grad_at` maps a scale alpha in (0,1) to the gradient of F w.r.t. every
// input coordinate evaluated at alpha * x; `flat_input` is x itself.
std::vector<double> integrated_gradients_path(
    const std::function<std::vector<double>(double)>& grad_at,
    const std::vector<double>& flat_input, int steps);

// IG for the recurrent model's pre-calibration risk at one window. The
// baseline is the all-zero tensor (the training mean after scaling).
AttributionVector integrated_gradients(const Checkpoint& ckpt, const EncounterTensor& tensor,
                                       int window, int steps = 50);

struct FeatureRanking {
    std::vector<std::pair<std::string, double>> entries;  // nonincreasing by value
};

// Mean |attribution| per feature over a population of window attributions;
// dynamic features aggregate across time steps by mean |attribution|.
FeatureRanking aggregate_attributions(const std::vector<AttributionVector>& attributions,
                                      const FeatureSchema& schema);

// First k entries, name-ordered on ties.
FeatureRanking top_k(const FeatureRanking& ranking, int k = 20);

void write_ranking(const FeatureRanking& ranking, const std::string& path);

}  // namespace aki
