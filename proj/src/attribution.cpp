#include "aki/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace aki {

std::vector<double> integrated_gradients_path(
    const std::function<std::vector<double>(double)>& grad_at,
    const std::vector<double>& flat_input, int steps) {
    if (steps < 1) throw std::domain_error("integrated_gradients: steps must be >= 1");
    std::vector<double> mean_grad(flat_input.size(), 0.0);
    for (int j = 1; j <= steps; ++j) {
        const double alpha = (static_cast<double>(j) - 0.5) / static_cast<double>(steps);
        const auto g = grad_at(alpha);
        if (g.size() != flat_input.size())
            throw std::logic_error("integrated_gradients: gradient size mismatch");
        for (std::size_t i = 0; i < g.size(); ++i) mean_grad[i] += g[i];
    }
    std::vector<double> attr(flat_input.size());
    for (std::size_t i = 0; i < attr.size(); ++i)
        attr[i] = flat_input[i] * mean_grad[i] / static_cast<double>(steps);
    return attr;
}

AttributionVector integrated_gradients(const Checkpoint& ckpt, const EncounterTensor& tensor,
                                       int window, int steps) {
    if (ckpt.kind != ModelKind::RECURRENT)
        throw std::invalid_argument("integrated_gradients: recurrent checkpoint required");
    if (window < 0 || window >= static_cast<int>(tensor.steps.size()))
        throw std::invalid_argument("integrated_gradients: window out of range");

    const auto& p = ckpt.params;
    const long d_static = tensor.static_vec.size();
    const long d_dyn = tensor.steps[0].size();
    const int n_steps = window + 1;

    // flatten [static, step0, step1, ..., step_window]
    std::vector<double> flat(static_cast<std::size_t>(d_static + n_steps * d_dyn));
    for (long i = 0; i < d_static; ++i) flat[static_cast<std::size_t>(i)] = tensor.static_vec[i];
    for (int t = 0; t < n_steps; ++t)
        for (long i = 0; i < d_dyn; ++i)
            flat[static_cast<std::size_t>(d_static + t * d_dyn + i)] = tensor.steps[static_cast<std::size_t>(t)][i];

    auto grad_at = [&](double alpha) {
        const Vec scaled_static = alpha * tensor.static_vec;
        std::vector<Vec> scaled_steps;
        scaled_steps.reserve(static_cast<std::size_t>(n_steps));
        for (int t = 0; t < n_steps; ++t)
            scaled_steps.push_back(alpha * tensor.steps[static_cast<std::size_t>(t)]);
        const auto grads = input_gradients(p, scaled_static, scaled_steps, window);
        std::vector<double> flat_grad(flat.size());
        for (long i = 0; i < d_static; ++i)
            flat_grad[static_cast<std::size_t>(i)] = grads.d_static_input[i];
        for (int t = 0; t < n_steps; ++t)
            for (long i = 0; i < d_dyn; ++i)
                flat_grad[static_cast<std::size_t>(d_static + t * d_dyn + i)] =
                    grads.d_dyn_input[static_cast<std::size_t>(t)][i];
        return flat_grad;
    };

    const auto attr = integrated_gradients_path(grad_at, flat, steps);

    AttributionVector out;
    out.static_attr.assign(attr.begin(), attr.begin() + d_static);
    for (int t = 0; t < n_steps; ++t)
        out.dynamic_attr.emplace_back(attr.begin() + d_static + t * d_dyn,
                                      attr.begin() + d_static + (t + 1) * d_dyn);

    // completeness bookkeeping against the zero baseline
    const auto plan = DropoutPlan::none(p.hidden(), n_steps);
    std::vector<Vec> prefix(tensor.steps.begin(), tensor.steps.begin() + n_steps);
    out.output_at_input = forward(p, tensor.static_vec, prefix, plan).back();
    const Vec zero_static = Vec::Zero(d_static);
    std::vector<Vec> zero_steps(static_cast<std::size_t>(n_steps), Vec::Zero(d_dyn));
    out.output_at_baseline = forward(p, zero_static, zero_steps, plan).back();
    double total = 0.0;
    for (double a : attr) total += a;
    out.completeness_residual = total - (out.output_at_input - out.output_at_baseline);
    return out;
}

FeatureRanking aggregate_attributions(const std::vector<AttributionVector>& attributions,
                                      const FeatureSchema& schema) {
    FeatureRanking ranking;
    if (attributions.empty()) return ranking;

    const std::size_t n_static = schema.static_features.size();
    const std::size_t n_dyn = schema.dynamic_features.size();
    std::vector<double> sums(n_static + n_dyn, 0.0);
    for (const auto& av : attributions) {
        if (av.static_attr.size() != n_static || av.dynamic_attr.empty() ||
            av.dynamic_attr[0].size() != n_dyn)
            throw std::invalid_argument("aggregate_attributions: schema mismatch");
        for (std::size_t i = 0; i < n_static; ++i) sums[i] += std::abs(av.static_attr[i]);
        for (std::size_t i = 0; i < n_dyn; ++i) {
            double per_window = 0.0;
            for (const auto& step : av.dynamic_attr) per_window += std::abs(step[i]);
            sums[n_static + i] += per_window / static_cast<double>(av.dynamic_attr.size());
        }
    }
    const double n = static_cast<double>(attributions.size());
    for (std::size_t i = 0; i < n_static; ++i)
        ranking.entries.emplace_back(schema.static_features[i].name, sums[i] / n);
    for (std::size_t i = 0; i < n_dyn; ++i)
        ranking.entries.emplace_back(schema.dynamic_features[i].name, sums[n_static + i] / n);

    std::sort(ranking.entries.begin(), ranking.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranking;
}

FeatureRanking top_k(const FeatureRanking& ranking, int k) {
    if (k <= 0) throw std::domain_error("top_k: k must be positive");
    FeatureRanking out;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.entries.size());
    out.entries.assign(ranking.entries.begin(), ranking.entries.begin() + static_cast<long>(n));
    return out;
}

void write_ranking(const FeatureRanking& ranking, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ranking: " + path);
    out << "rank\tfeature\tmean_abs_attribution\n";
    out.precision(10);
    for (std::size_t i = 0; i < ranking.entries.size(); ++i)
        out << (i + 1) << '\t' << ranking.entries[i].first << '\t' << ranking.entries[i].second
            << '\n';
}

}  // namespace aki
