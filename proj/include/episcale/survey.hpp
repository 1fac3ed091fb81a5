// Incidence estimators for indirect survey responses.
//
// Region-stratified: per-region ratio-of-sums p_i = sum(c)/sum(r), combined
// as p = sum(w_i * p_i) with population weights, and a post-stratified
// variance
//   V(p) = (1-f)/n * sum(w_i * S_i^2) + (1-f)/n^2 * sum((1-w_i) * S_i^2)
// where n = sum(n_i), f = n/N and S_i^2 is the sample variance of the
// individual ratios c/r within region i.
//
// Country-pooled: p = sum(c)/sum(r) over all responses with a binomial CI
// p +/- z*sqrt(p(1-p)/r), r = total reach.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "episcale/model.hpp"

namespace episcale {

/// Per-region sums and the statistics derived from them.
struct RegionAggregate {
    std::string region;
    std::int64_t n = 0;          // responses in the region
    std::int64_t reach_sum = 0;
    std::int64_t count_sum = 0;
    double p_hat = 0;            // count_sum / reach_sum
    double s_sq = 0;             // sample variance of c/r ratios (0 when n < 2)
    double omega = 0;            // stratum weight, filled by stratified_estimate
};

/// Ratio of sums for one region, not the mean of per-response ratios: large
/// reaches carry proportionally more weight.
inline RegionAggregate region_ratio(std::span<const SurveyResponse> responses) {
    if (responses.empty()) throw std::invalid_argument("region_ratio: empty input");
    RegionAggregate agg;
    agg.region = responses.front().region.value_or("");
    for (const auto& r : responses) {
        if (r.region.value_or("") != agg.region)
            throw std::invalid_argument("region_ratio: mixed regions");
        agg.n += 1;
        agg.reach_sum += r.reach;
        agg.count_sum += r.count;
    }
    if (agg.reach_sum <= 0) throw std::invalid_argument("region_ratio: zero total reach");
    agg.p_hat = double(agg.count_sum) / double(agg.reach_sum);
    if (agg.n >= 2) {
        double sq = 0;
        for (const auto& r : responses) {
            const double p_ij = double(r.count) / double(r.reach);
            sq += (p_ij - agg.p_hat) * (p_ij - agg.p_hat);
        }
        agg.s_sq = sq / double(agg.n - 1);
    }
    return agg;
}

namespace detail {

inline EstimateResult clamp_ci(Date date, double point, double half, std::int64_t n_responses,
                               std::int64_t total_reach, Method method) {
    EstimateResult est;
    est.date = date;
    est.point = point;
    est.ci_low = std::max(0.0, point - half);
    est.ci_high = std::min(1.0, point + half);
    est.n_responses = n_responses;
    est.total_reach = total_reach;
    est.method = method;
    return est;
}

// Core of the stratified estimator; nullopt when the window does not qualify
// (no region with >= 2 responses, or zero total reach).
inline std::optional<EstimateResult> stratified_core(
    const std::map<std::string, std::vector<SurveyResponse>>& by_region, const CountryInfo& country,
    Date date, std::int64_t total_n, double z) {
    if (by_region.empty()) return std::nullopt;

    std::vector<RegionAggregate> aggs;
    aggs.reserve(by_region.size());
    double pop_sum = 0;
    bool any_pair = false;
    for (const auto& [code, responses] : by_region) {
        const RegionInfo* info = country.find_region(code);
        if (!info)
            throw std::invalid_argument("stratified_estimate: region '" + code +
                                        "' not in the region table for " + country.country);
        auto agg = region_ratio(responses);
        any_pair = any_pair || agg.n >= 2;
        pop_sum += double(info->population);
        aggs.push_back(std::move(agg));
    }
    if (!any_pair || pop_sum <= 0) return std::nullopt;

    // weights renormalized over the represented regions so they stay convex
    double point = 0;
    std::int64_t n = 0, total_reach = 0;
    for (auto& agg : aggs) {
        agg.omega = double(country.find_region(agg.region)->population) / pop_sum;
        point += agg.omega * agg.p_hat;
        n += agg.n;
        total_reach += agg.reach_sum;
    }

    const double f = double(n) / double(country.population);
    double within = 0, between = 0;
    for (const auto& agg : aggs) {
        within += agg.omega * agg.s_sq;
        between += (1.0 - agg.omega) * agg.s_sq;
    }
    const double variance =
        (1.0 - f) / double(n) * within + (1.0 - f) / (double(n) * double(n)) * between;

    return clamp_ci(date, point, z * std::sqrt(std::max(0.0, variance)), total_n, total_reach,
                    Method::RegionStratified);
}

}  // namespace detail

/// Post-stratified country estimate from responses grouped by region.
/// Country-wide responses must already be excluded. total_n is recorded as
/// the result's n_responses. Regions with a single response contribute their
/// ratio to the point estimate but zero to the variance (S_i^2 is undefined
/// at n_i = 1), so windows dominated by singleton regions understate V and
/// report CIs slightly too narrow.
inline EstimateResult stratified_estimate(
    const std::map<std::string, std::vector<SurveyResponse>>& by_region, const CountryInfo& country,
    Date date, std::int64_t total_n, double z = 1.96) {
    auto est = detail::stratified_core(by_region, country, date, total_n, z);
    if (!est)
        throw std::invalid_argument(
            "stratified_estimate: no region with >= 2 responses (variance undefined)");
    return *est;
}

/// Pooled ratio-of-sums with a binomial-proportion CI.
inline EstimateResult pooled_estimate(std::span<const SurveyResponse> responses, Date date,
                                      double z = 1.96) {
    if (responses.empty()) throw std::invalid_argument("pooled_estimate: empty input");
    std::int64_t reach_sum = 0, count_sum = 0;
    for (const auto& r : responses) {
        reach_sum += r.reach;
        count_sum += r.count;
    }
    if (reach_sum <= 0) throw std::invalid_argument("pooled_estimate: zero total reach");
    const double p = double(count_sum) / double(reach_sum);
    const double half = z * std::sqrt(p * (1.0 - p) / double(reach_sum));
    return detail::clamp_ci(date, p, half, std::int64_t(responses.size()), reach_sum,
                            Method::CountryPooled);
}

namespace detail {

// responses grouped by day, ascending; input order preserved within a day
inline std::vector<std::pair<Date, std::vector<SurveyResponse>>> group_by_day(
    std::span<const SurveyResponse> responses) {
    std::map<Date, std::vector<SurveyResponse>> grouped;
    for (const auto& r : responses) grouped[r.date].push_back(r);
    return {grouped.begin(), grouped.end()};
}

}  // namespace detail

/// One stratified estimate per day with data: responses are accumulated
/// backwards (whole days) until at least a_min are in the window, then
/// country-wide responses are dropped and the remainder stratified. Days
/// whose full history holds fewer than a_min responses emit nothing, as do
/// windows where no region reaches two responses.
inline std::vector<EstimateResult> rolling_region_series(std::span<const SurveyResponse> responses,
                                                         const CountryInfo& country,
                                                         std::int64_t a_min = 300,
                                                         double z = 1.96) {
    auto days = detail::group_by_day(responses);
    std::vector<EstimateResult> out;
    for (std::size_t k = 0; k < days.size(); ++k) {
        std::int64_t accumulated = 0;
        std::size_t j = k + 1;
        while (j > 0 && accumulated < a_min) accumulated += std::int64_t(days[--j].second.size());
        if (accumulated < a_min) continue;

        std::map<std::string, std::vector<SurveyResponse>> by_region;
        std::int64_t used = 0;
        for (std::size_t i = j; i <= k; ++i)
            for (const auto& r : days[i].second)
                if (!r.country_wide()) {
                    by_region[*r.region].push_back(r);
                    ++used;
                }
        auto est = detail::stratified_core(by_region, country, days[k].first, used, z);
        if (est) out.push_back(*est);
    }
    return out;
}

/// Disjoint forward blocks: days accumulate until a block holds at least
/// a_min responses, then one pooled estimate is emitted dated at the block's
/// last day. A trailing partial block emits nothing. Regional and
/// country-wide responses both count.
inline std::vector<EstimateResult> rolling_country_series(std::span<const SurveyResponse> responses,
                                                          std::int64_t a_min = 30,
                                                          double z = 1.96) {
    auto days = detail::group_by_day(responses);
    std::vector<EstimateResult> out;
    std::vector<SurveyResponse> block;
    for (const auto& [date, day_responses] : days) {
        block.insert(block.end(), day_responses.begin(), day_responses.end());
        if (std::int64_t(block.size()) >= a_min) {
            out.push_back(pooled_estimate(block, date, z));
            block.clear();
        }
    }
    return out;
}

}  // namespace episcale
