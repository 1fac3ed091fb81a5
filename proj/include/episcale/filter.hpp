// Outlier removal ahead of estimation: an IQR fence on reach, then a cap on
// the symptomatic ratio. Both rules operate on one estimation batch at a time.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "episcale/model.hpp"

namespace episcale {

/// Partition of a batch into survivors and the two removal buckets.
/// kept + removed_reach + removed_ratio is the input, as multisets.
struct FilterReport {
    std::vector<SurveyResponse> kept;
    std::vector<SurveyResponse> removed_reach;
    std::vector<SurveyResponse> removed_ratio;
    double reach_fence = 0;
};

namespace detail {
// Type-7 quantile: linear interpolation between order statistics.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    const double h = double(sorted.size() - 1) * q;
    const std::size_t lo = std::size_t(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - double(lo)) * (sorted[lo + 1] - sorted[lo]);
}
}  // namespace detail

/// Q3 + 1.5*(Q3 - Q1) over the batch's reach values.
inline double reach_fence(std::span<const std::int64_t> reaches) {
    if (reaches.empty()) throw std::invalid_argument("reach_fence: empty list");
    std::vector<double> sorted(reaches.begin(), reaches.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = detail::quantile_sorted(sorted, 0.25);
    const double q3 = detail::quantile_sorted(sorted, 0.75);
    return q3 + 1.5 * (q3 - q1);
}

/// Reach fence first (computed once over the full batch), then the ratio cap
/// on the survivors.
inline FilterReport apply_filters(std::span<const SurveyResponse> responses,
                                  double ratio_cap = 0.3) {
    if (responses.empty()) throw std::invalid_argument("apply_filters: empty input");
    if (!(ratio_cap > 0.0 && ratio_cap <= 1.0))
        throw std::invalid_argument("apply_filters: ratio_cap must be in (0,1]");

    std::vector<std::int64_t> reaches;
    reaches.reserve(responses.size());
    for (const auto& r : responses) reaches.push_back(r.reach);

    FilterReport report;
    report.reach_fence = reach_fence(reaches);
    for (const auto& r : responses) {
        if (double(r.reach) > report.reach_fence)
            report.removed_reach.push_back(r);
        else if (double(r.count) / double(r.reach) > ratio_cap)
            report.removed_ratio.push_back(r);
        else
            report.kept.push_back(r);
    }
    return report;
}

}  // namespace episcale
