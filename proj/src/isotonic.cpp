#include "aki/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aki {

double IsotonicCalibrator::apply(double score) const {
    if (breakpoints.empty()) return score;
    if (score < breakpoints.front()) return values.front();
    // last knot with breakpoint <= score
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
    const auto idx = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    return values[idx];
}

IsotonicCalibrator fit_isotonic(std::vector<std::pair<double, double>> rows) {
    if (rows.size() < 2) throw std::invalid_argument("fit_isotonic: need at least two rows");
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    struct Block {
        double score;   // knot (first score of the block)
        double sum;
        double weight;
        double mean() const { return sum / weight; }
    };
    std::vector<Block> blocks;
    // pre-pool ties on score
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < rows.size() && rows[j].first == rows[i].first) {
            sum += rows[j].second;
            ++j;
        }
        blocks.push_back({rows[i].first, sum, static_cast<double>(j - i)});
        i = j;
    }
    // pool adjacent violators
    std::vector<Block> stack;
    for (const auto& b : blocks) {
        stack.push_back(b);
        while (stack.size() > 1 && stack[stack.size() - 2].mean() >= stack.back().mean()) {
            Block top = stack.back();
            stack.pop_back();
            stack.back().sum += top.sum;
            stack.back().weight += top.weight;
        }
    }

    IsotonicCalibrator cal;
    for (const auto& b : stack) {
        cal.breakpoints.push_back(b.score);
        cal.values.push_back(b.mean());
    }
    return cal;
}

ReliabilityDiagram reliability_bins(const std::vector<std::pair<double, double>>& rows, int bins) {
    if (rows.empty()) throw std::invalid_argument("reliability_bins: empty input");
    if (bins < 1) throw std::invalid_argument("reliability_bins: bins must be positive");

    ReliabilityDiagram diagram;
    std::vector<double> score_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> label_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (const auto& [score, label] : rows) {
        int b = static_cast<int>(score * bins);
        b = std::clamp(b, 0, bins - 1);  // score == 1.0 joins the top bin
        score_sum[static_cast<std::size_t>(b)] += score;
        label_sum[static_cast<std::size_t>(b)] += label;
        counts[static_cast<std::size_t>(b)]++;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double weighted_gap = 0.0;
    for (int b = 0; b < bins; ++b) {
        ReliabilityBin bin;
        bin.bin_low = static_cast<double>(b) / bins;
        bin.bin_high = static_cast<double>(b + 1) / bins;
        bin.count = counts[static_cast<std::size_t>(b)];
        if (bin.count == 0) {
            bin.mean_score = nan;
            bin.event_rate = nan;
        } else {
            bin.mean_score = score_sum[static_cast<std::size_t>(b)] / static_cast<double>(bin.count);
            bin.event_rate = label_sum[static_cast<std::size_t>(b)] / static_cast<double>(bin.count);
            weighted_gap +=
                static_cast<double>(bin.count) * std::abs(bin.mean_score - bin.event_rate);
        }
        diagram.bins.push_back(bin);
    }
    diagram.expected_calibration_error = weighted_gap / static_cast<double>(rows.size());
    return diagram;
}

}  // namespace aki
