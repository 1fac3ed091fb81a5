// Serology-study arithmetic: sensitivity correction, prevalence-to-case
// conversion, IFR and symptomatic-CFR inference, and the symptomatic-to-total
// scaling that makes survey and cCFR estimates comparable to seroprevalence.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "episcale/ingest.hpp"
#include "episcale/model.hpp"

namespace episcale {

/// raw / sensitivity. With specificity at 100% there are no false positives
/// to subtract, so sensitivity is the whole correction.
inline double correct_prevalence(double raw, double sensitivity) {
    if (!(sensitivity > 0.0 && sensitivity <= 1.0))
        throw std::invalid_argument("correct_prevalence: sensitivity must be in (0,1]");
    if (raw < 0.0 || raw > 1.0)
        throw std::invalid_argument("correct_prevalence: raw prevalence must be in [0,1]");
    const double corrected = raw / sensitivity;
    if (corrected > 1.0)
        throw std::invalid_argument("correct_prevalence: corrected prevalence exceeds 1");
    return corrected;
}

inline double prevalence_to_cases(double prevalence, std::int64_t population) {
    if (prevalence < 0.0 || prevalence > 1.0)
        throw std::invalid_argument("prevalence_to_cases: prevalence must be in [0,1]");
    return prevalence * double(population);
}

/// Deaths over all infections, asymptomatic included.
inline double infer_ifr(std::int64_t cum_deaths, double total_infections) {
    if (!(total_infections > 0.0))
        throw std::invalid_argument("infer_ifr: total infections must be positive");
    return double(cum_deaths) / total_infections;
}

struct SymptomaticCfr {
    double symptomatic_cases = 0;
    double cfr = 0;
};

/// Symptomatic cases = infections * fraction; CFR = deaths / symptomatic.
inline SymptomaticCfr infer_symptomatic_cfr(double total_infections, double symptomatic_fraction,
                                            std::int64_t cum_deaths) {
    if (!(symptomatic_fraction > 0.0 && symptomatic_fraction <= 1.0))
        throw std::invalid_argument("infer_symptomatic_cfr: fraction must be in (0,1]");
    const double symptomatic = total_infections * symptomatic_fraction;
    if (!(symptomatic > 0.0))
        throw std::invalid_argument("infer_symptomatic_cfr: zero symptomatic cases");
    return {symptomatic, double(cum_deaths) / symptomatic};
}

/// Divides an estimate of the symptomatic fraction of the population by the
/// symptomatic share to get total infections. Upper CI bound is clamped at 1.
inline EstimateResult scale_symptomatic_to_total(EstimateResult estimate,
                                                 double symptomatic_fraction = 0.66) {
    if (!(symptomatic_fraction > 0.0 && symptomatic_fraction <= 1.0))
        throw std::invalid_argument("scale_symptomatic_to_total: fraction must be in (0,1]");
    estimate.point /= symptomatic_fraction;
    estimate.ci_low /= symptomatic_fraction;
    estimate.ci_high = std::min(1.0, estimate.ci_high / symptomatic_fraction);
    return estimate;
}

struct RegionEstimate {
    std::string region;
    double estimate = 0;
    std::int64_t reach_sum = 0;
};

struct ReachErrorRow {
    std::string region;
    double relative_reach = 0;  // reach_sum / region population
    double relative_error = 0;  // |estimate - truth| / truth
};

struct ReachErrorTable {
    std::vector<ReachErrorRow> rows;
    std::vector<std::string> skipped;  // regions with no usable truth value
};

/// Plot-ready accuracy-vs-coverage rows: for each estimated region, the
/// relative survey reach and the relative error against serology truth.
/// Regions missing from the truth table (or with zero truth) are reported
/// in `skipped` rather than silently dropped.
inline ReachErrorTable reach_error_table(std::span<const RegionEstimate> estimates,
                                         std::span<const RegionPrevalence> truth,
                                         const CountryInfo& country) {
    ReachErrorTable out;
    for (const auto& est : estimates) {
        const RegionInfo* info = country.find_region(est.region);
        if (!info)
            throw std::invalid_argument("reach_error_table: region '" + est.region +
                                        "' not in the region table");
        const RegionPrevalence* match = nullptr;
        for (const auto& t : truth)
            if (t.region == est.region) {
                match = &t;
                break;
            }
        if (!match || !(match->prevalence > 0.0)) {
            out.skipped.push_back(est.region);
            continue;
        }
        ReachErrorRow row;
        row.region = est.region;
        row.relative_reach = double(est.reach_sum) / double(info->population);
        row.relative_error = std::fabs(est.estimate - match->prevalence) / match->prevalence;
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace episcale
