// Delay-corrected case fatality ratio and the under-reporting correction
// derived from it.
//
// Deaths lag confirmations, so dividing cumulative deaths by cumulative cases
// understates lethality mid-epidemic. Weighting past incidence by how much of
// the confirmation-to-death delay distribution has elapsed gives the cases
// with known outcomes c(t); cCFR(t) = d(t)/c(t). Comparing against a fixed
// baseline cCFR_b yields the under-reporting ratio, and reported * ratio
// estimates the true case count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "episcale/model.hpp"

namespace episcale {

namespace detail {
inline double lognormal_cdf(double x, double mu, double sigma) {
    if (x <= 0.0) return 0.0;
    return 0.5 * std::erfc(-(std::log(x) - mu) / (sigma * std::sqrt(2.0)));
}
}  // namespace detail

/// Interval-mass discretization of the lognormal delay whose own mean and sd
/// are the given values: pmf[j] = F(j+1) - F(j), renormalized over the
/// truncation horizon.
inline DelayModel discretize_delay(double mean = 13.0, double sd = 12.7, int horizon = 120) {
    if (!(mean > 0.0) || !(sd > 0.0)) throw std::invalid_argument("discretize_delay: mean and sd must be positive");
    if (horizon < 1) throw std::invalid_argument("discretize_delay: horizon must be >= 1");

    const double sigma_sq = std::log(1.0 + (sd * sd) / (mean * mean));
    const double mu = std::log(mean) - sigma_sq / 2.0;
    const double sigma = std::sqrt(sigma_sq);

    DelayModel model;
    model.mean_days = mean;
    model.sd_days = sd;
    model.max_horizon = horizon;
    model.pmf.resize(std::size_t(horizon));
    double sum = 0;
    for (int j = 0; j < horizon; ++j) {
        const double mass = detail::lognormal_cdf(j + 1.0, mu, sigma) -
                            detail::lognormal_cdf(double(j), mu, sigma);
        model.pmf[std::size_t(j)] = std::max(0.0, mass);
        sum += model.pmf[std::size_t(j)];
    }
    if (sum > 0.0) {
        for (double& p : model.pmf) p /= sum;
    } else {
        // the whole distribution lies beyond the horizon and the masses
        // underflow; the truncated distribution degenerates to the last bin
        model.pmf.back() = 1.0;
    }
    return model;
}

/// known(t) = sum over case days tau <= t of new_cases(tau) * P(delay <= t - tau),
/// i.e. the delay-weighted count of cases whose outcome has had time to occur.
/// Non-decreasing in t and never above the cumulative case count.
inline std::vector<double> known_outcome_cases(std::span<const OfficialSeriesPoint> series,
                                               const DelayModel& delay) {
    if (series.empty()) throw std::invalid_argument("known_outcome_cases: empty series");
    for (std::size_t t = 1; t < series.size(); ++t)
        if (day_diff(series[t].date, series[t - 1].date) != 1)
            throw std::invalid_argument("known_outcome_cases: series is not a dense daily grid");

    const std::size_t n = series.size();
    const std::size_t h = delay.pmf.size();
    std::vector<double> known(n, 0.0);
    double running = 0;
    for (std::size_t t = 0; t < n; ++t) {
        double increment = 0;  // outcomes becoming known on day t
        for (std::size_t j = 0; j < h && j <= t; ++j)
            increment += delay.pmf[j] * double(series[t - j].new_cases);
        running += increment;
        known[t] = running;
    }
    return known;
}

/// Per-day corrected CFR state: cumulative deaths over delay-weighted cases
/// with known outcomes, plus the under-reporting ratio against the baseline.
struct CcfrState {
    Date date{};
    std::int64_t cum_deaths = 0;
    double known_outcome = 0;            // fractional: delay weights are
                                         // probabilities, and 1/c in the
                                         // variance accepts a real c
    double ccfr = 0;
    double ratio = 0;                    // ccfr / baseline cfr
    std::optional<double> sigma_hat;     // set when the Ln-method CI is defined
};

/// One state per day with known(t) > 0; earlier days are skipped.
inline std::vector<CcfrState> ccfr_series(std::span<const OfficialSeriesPoint> series,
                                          const DelayModel& delay, const Baseline& baseline = {}) {
    auto known = known_outcome_cases(series, delay);
    const double cfr_b = baseline.cfr();
    if (!(cfr_b > 0.0)) throw std::invalid_argument("ccfr_series: baseline cfr must be positive");

    std::vector<CcfrState> out;
    std::int64_t cum_deaths = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        cum_deaths += series[t].new_deaths;
        if (!(known[t] > 0.0)) continue;
        CcfrState s;
        s.date = series[t].date;
        s.cum_deaths = cum_deaths;
        s.known_outcome = known[t];
        s.ccfr = double(cum_deaths) / known[t];
        s.ratio = s.ccfr / cfr_b;
        if (cum_deaths >= 1 && known[t] > double(cum_deaths)) {
            const double var = 1.0 / double(cum_deaths) - 1.0 / known[t] +
                               1.0 / double(baseline.deaths) - 1.0 / double(baseline.cases);
            if (var >= 0.0) s.sigma_hat = std::sqrt(var);
        }
        out.push_back(s);
    }
    return out;
}

/// cCFR / cCFR_b: how many times more cases there likely are than reported.
inline double underreporting_ratio(const CcfrState& state, const Baseline& baseline) {
    const double cfr_b = baseline.cfr();
    if (!(cfr_b > 0.0)) throw std::invalid_argument("underreporting_ratio: baseline cfr must be positive");
    if (!std::isfinite(state.ccfr)) throw std::invalid_argument("underreporting_ratio: undefined cCFR");
    return state.ccfr / cfr_b;
}

inline double true_cases_estimate(double reported_cum_cases, double ratio) {
    if (!(ratio > 0.0)) throw std::invalid_argument("true_cases_estimate: ratio must be positive");
    return reported_cum_cases * ratio;
}

struct Interval {
    double low = 0;
    double high = 0;
};

/// Ln-method CI for the ratio r = (d/c)/(d_b/c_b): ln r is approximately
/// normal with variance 1/d - 1/c + 1/d_b - 1/c_b, so the interval is
/// (r*exp(-z*sigma), r*exp(+z*sigma)).
inline Interval ln_method_ci(std::int64_t d, double c, const Baseline& baseline, double z = 1.96) {
    if (d < 1) throw std::invalid_argument("ln_method_ci: needs at least one death");
    if (!(c > double(d))) throw std::invalid_argument("ln_method_ci: needs c > d");
    const double r = (double(d) / c) / baseline.cfr();
    const double var = 1.0 / double(d) - 1.0 / c + 1.0 / double(baseline.deaths) -
                       1.0 / double(baseline.cases);
    if (var < 0.0) throw std::domain_error("ln_method_ci: negative variance estimate");
    const double sigma = std::sqrt(var);
    return {r * std::exp(-z * sigma), r * std::exp(z * sigma)};
}

}  // namespace episcale
