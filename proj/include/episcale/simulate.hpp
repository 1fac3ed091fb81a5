// Synthetic worlds with known prevalence, and the survey responses biased
// respondents would file about them. Serves as the brute-force oracle for the
// estimators: CI coverage and geographic-bias experiments run on top of it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "episcale/csv.hpp"
#include "episcale/filter.hpp"
#include "episcale/model.hpp"
#include "episcale/rng.hpp"
#include "episcale/survey.hpp"

namespace episcale {

/// Ground truth: regional prevalences over a region table. The seed fully
/// determines every downstream sample.
struct SyntheticWorld {
    CountryInfo country;
    std::map<std::string, double> true_prevalence;  // region -> fraction in [0,1]
    std::uint64_t rng_seed = 42;
};

/// How respondents answer: where they are (region_bias), how many contacts
/// they report (lognormal reach, median reach_median, truncated at 1), and
/// how much their contact sets overlap.
///
/// overlap_factor f in [0,1): f = 0 samples contacts independently; f > 0
/// draws them without replacement from a per-region pool of about
/// reach_median/f people shared by all respondents, so neighbouring
/// responses become correlated.
struct RespondentModel {
    double reach_median = 100.0;
    double reach_sigma = 0.25;
    std::map<std::string, double> region_bias;  // sampling weight per region
    double overlap_factor = 0.0;
};

namespace detail {

inline void check_world(const SyntheticWorld& world) {
    if (world.true_prevalence.empty())
        throw std::invalid_argument("simulator: world has no regions");
    for (const auto& [code, p] : world.true_prevalence) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("simulator: prevalence outside [0,1] for region " + code);
        if (!world.country.find_region(code))
            throw std::invalid_argument("simulator: region '" + code + "' not in the region table");
    }
}

inline void check_model(const RespondentModel& model, const SyntheticWorld& world) {
    if (!(model.reach_median > 0.0) || !(model.reach_sigma > 0.0))
        throw std::invalid_argument("simulator: reach parameters must be positive");
    if (!(model.overlap_factor >= 0.0 && model.overlap_factor < 1.0))
        throw std::invalid_argument("simulator: overlap factor must be in [0,1)");
    if (model.region_bias.empty())
        throw std::invalid_argument("simulator: model has no region weights");
    double total = 0;
    for (const auto& [code, w] : model.region_bias) {
        if (w < 0.0) throw std::invalid_argument("simulator: negative region weight");
        if (!world.true_prevalence.count(code))
            throw std::invalid_argument("simulator: weighted region '" + code +
                                        "' has no true prevalence");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("simulator: all region weights are zero");
}

// r distinct indices below pool_size; Floyd's sampling, order irrelevant
inline std::int64_t count_infected_draw(Rng& rng, const std::vector<char>& pool, std::int64_t r) {
    const std::int64_t pool_size = std::int64_t(pool.size());
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(std::size_t(r) * 2);
    std::int64_t infected = 0;
    for (std::int64_t j = pool_size - r; j < pool_size; ++j) {
        std::uint64_t t = rng.below(std::uint64_t(j) + 1);
        if (!chosen.insert(t).second) {
            t = std::uint64_t(j);
            chosen.insert(t);
        }
        infected += pool[std::size_t(t)] ? 1 : 0;
    }
    return infected;
}

inline std::vector<SurveyResponse> simulate_batch(const SyntheticWorld& world,
                                                  const RespondentModel& model, int n, Date date,
                                                  Rng& rng) {
    check_world(world);
    check_model(model, world);
    if (n < 1) throw std::invalid_argument("simulator: n must be >= 1");

    std::vector<std::string> regions;
    std::vector<double> cumulative;
    double total = 0;
    for (const auto& [code, w] : model.region_bias) {
        total += w;
        regions.push_back(code);
        cumulative.push_back(total);
    }

    // shared contact pools, built up-front in region order so the draw
    // sequence is independent of respondent order
    std::map<std::string, std::vector<char>> pools;
    if (model.overlap_factor > 0.0) {
        const auto pool_size =
            std::int64_t(std::ceil(model.reach_median / model.overlap_factor));
        for (const auto& code : regions) {
            const double p = world.true_prevalence.at(code);
            std::vector<char> pool(std::size_t(std::max<std::int64_t>(1, pool_size)));
            for (auto& member : pool) member = rng.bernoulli(p) ? 1 : 0;
            pools.emplace(code, std::move(pool));
        }
    }

    const double mu = std::log(model.reach_median);
    std::vector<SurveyResponse> out;
    out.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        std::size_t idx = std::size_t(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (idx >= regions.size()) idx = regions.size() - 1;
        const std::string& code = regions[idx];

        auto reach = std::int64_t(std::llround(rng.lognormal(mu, model.reach_sigma)));
        reach = std::max<std::int64_t>(1, reach);

        std::int64_t count = 0;
        if (model.overlap_factor > 0.0) {
            const auto& pool = pools.at(code);
            reach = std::min(reach, std::int64_t(pool.size()));
            count = count_infected_draw(rng, pool, reach);
        } else {
            count = rng.binomial(reach, world.true_prevalence.at(code));
        }

        SurveyResponse r;
        r.date = date;
        r.country = world.country.country;
        r.region = code;
        r.reach = reach;
        r.count = count;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

/// n responses for one day, deterministic in world.rng_seed.
inline std::vector<SurveyResponse> simulate_responses(const SyntheticWorld& world,
                                                      const RespondentModel& model, int n,
                                                      Date date) {
    Rng rng(world.rng_seed);
    return detail::simulate_batch(world, model, n, date, rng);
}

/// Population-weighted true prevalence over the world's regions.
inline double weighted_truth(const SyntheticWorld& world) {
    detail::check_world(world);
    double weighted = 0, pop = 0;
    for (const auto& [code, p] : world.true_prevalence) {
        const double n_i = double(world.country.find_region(code)->population);
        weighted += p * n_i;
        pop += n_i;
    }
    return weighted / pop;
}

namespace detail {

// estimate on an already-filtered batch; nullopt when the estimator's
// preconditions fail (possible at tiny n)
inline std::optional<EstimateResult> estimate_kept(const std::vector<SurveyResponse>& kept,
                                                   const CountryInfo& country, Date date,
                                                   Method method) {
    if (kept.empty()) return std::nullopt;
    if (method == Method::CountryPooled) return pooled_estimate(kept, date);
    std::map<std::string, std::vector<SurveyResponse>> by_region;
    for (const auto& r : kept) by_region[*r.region].push_back(r);
    return stratified_core(by_region, country, date, std::int64_t(kept.size()), 1.96);
}

// one trial's filtered batch, mirroring the production filter step
inline std::vector<SurveyResponse> trial_batch(const SyntheticWorld& world,
                                               const RespondentModel& model, int n, Date date,
                                               std::uint64_t trial_seed) {
    Rng rng(trial_seed);
    auto responses = simulate_batch(world, model, n, date, rng);
    return apply_filters(responses).kept;
}

}  // namespace detail

struct CoverageResult {
    int trials = 0;
    int covered = 0;
    int failed = 0;  // trials where the estimator's preconditions failed
    double truth = 0;
    double coverage = 0;
};

/// Fraction of trials whose 95% CI contains the population-weighted truth.
/// Failed trials count against coverage: a window that cannot produce an
/// interval certainly does not cover.
inline CoverageResult coverage_experiment(const SyntheticWorld& world,
                                          const RespondentModel& model, int n_per_trial, int trials,
                                          Method method = Method::RegionStratified) {
    if (trials < 100) throw std::invalid_argument("coverage_experiment: needs >= 100 trials");
    CoverageResult result;
    result.trials = trials;
    result.truth = weighted_truth(world);
    static const Date kDay = *parse_date("2020-04-15");
    for (int t = 0; t < trials; ++t) {
        auto kept = detail::trial_batch(world, model, n_per_trial, kDay,
                                        Rng::mix(world.rng_seed, std::uint64_t(t)));
        auto est = detail::estimate_kept(kept, world.country, kDay, method);
        if (!est) {
            ++result.failed;
            continue;
        }
        if (est->ci_low <= result.truth && result.truth <= est->ci_high) ++result.covered;
    }
    result.coverage = double(result.covered) / double(trials);
    return result;
}

struct BiasResult {
    double truth = 0;
    double pooled_mae_biased = 0;
    double pooled_mae_unbiased = 0;
    double stratified_mae_biased = 0;
    double stratified_mae_unbiased = 0;
};

/// Mean absolute error of the pooled and stratified estimators under a
/// biased and an unbiased respondent model. Stratification should absorb
/// sampling bias that naive pooling cannot.
inline BiasResult bias_experiment(const SyntheticWorld& world, const RespondentModel& biased,
                                  const RespondentModel& unbiased, int n, int trials) {
    if (trials < 1) throw std::invalid_argument("bias_experiment: needs >= 1 trial");
    BiasResult result;
    result.truth = weighted_truth(world);
    static const Date kDay = *parse_date("2020-04-15");

    double err[2][2] = {{0, 0}, {0, 0}};  // [model][method]
    long counted[2][2] = {{0, 0}, {0, 0}};
    const RespondentModel* models[2] = {&biased, &unbiased};
    const Method methods[2] = {Method::CountryPooled, Method::RegionStratified};
    for (int t = 0; t < trials; ++t) {
        for (int m = 0; m < 2; ++m) {
            // both estimators see the same batch: the comparison is paired
            auto kept = detail::trial_batch(world, *models[m], n, kDay,
                                            Rng::mix(world.rng_seed, std::uint64_t(t) * 2 + unsigned(m)));
            for (int k = 0; k < 2; ++k) {
                auto est = detail::estimate_kept(kept, world.country, kDay, methods[k]);
                if (!est) continue;
                err[m][k] += std::fabs(est->point - result.truth);
                ++counted[m][k];
            }
        }
    }
    auto mae = [&](int m, int k) { return counted[m][k] ? err[m][k] / double(counted[m][k]) : 0.0; };
    result.pooled_mae_biased = mae(0, 0);
    result.stratified_mae_biased = mae(0, 1);
    result.pooled_mae_unbiased = mae(1, 0);
    result.stratified_mae_unbiased = mae(1, 1);
    return result;
}

// --- scenario files ----------------------------------------------------------

/// A parsed scenario: the world, the respondent model, and batch defaults.
struct Scenario {
    SyntheticWorld world;
    RespondentModel model;
    Date date = *parse_date("2020-04-15");
    int n = 300;
};

/// Key-value scenario format, one directive per line ('#' comments):
///   country <code> <population>
///   region <code> <population> <prevalence> <bias-weight>
///   seed <integer> | date <YYYY-MM-DD> | n <integer>
///   reach-median <real> | reach-sigma <real> | overlap <real>
inline Scenario parse_scenario(std::istream& in) {
    Scenario sc;
    bool have_country = false;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string key;
        if (!(tokens >> key)) continue;

        auto want = [&](auto& value, const char* what) {
            if (!(tokens >> value))
                throw ParseError(lineno, std::string("scenario: expected ") + what + " after '" +
                                             key + "'");
        };
        if (key == "country") {
            want(sc.world.country.country, "country code");
            want(sc.world.country.population, "population");
            if (!is_country_code(sc.world.country.country))
                throw ParseError(lineno, "scenario: unknown country code");
            if (sc.world.country.population < 1)
                throw ParseError(lineno, "scenario: population must be positive");
            have_country = true;
        } else if (key == "region") {
            RegionInfo info;
            double prevalence = 0, weight = 0;
            want(info.region, "region code");
            want(info.population, "population");
            want(prevalence, "prevalence");
            want(weight, "bias weight");
            if (info.population < 1) throw ParseError(lineno, "scenario: population must be positive");
            if (sc.world.true_prevalence.count(info.region))
                throw ParseError(lineno, "scenario: duplicate region '" + info.region + "'");
            sc.world.country.regions.push_back(info);
            sc.world.true_prevalence[info.region] = prevalence;
            sc.model.region_bias[info.region] = weight;
        } else if (key == "seed") {
            want(sc.world.rng_seed, "seed");
        } else if (key == "date") {
            std::string text;
            want(text, "date");
            auto date = parse_date(text);
            if (!date) throw ParseError(lineno, "scenario: unparseable date '" + text + "'");
            sc.date = *date;
        } else if (key == "n") {
            want(sc.n, "count");
            if (sc.n < 1) throw ParseError(lineno, "scenario: n must be >= 1");
        } else if (key == "reach-median") {
            want(sc.model.reach_median, "value");
        } else if (key == "reach-sigma") {
            want(sc.model.reach_sigma, "value");
        } else if (key == "overlap") {
            want(sc.model.overlap_factor, "value");
        } else {
            throw ParseError(lineno, "scenario: unknown directive '" + key + "'");
        }
        std::string extra;
        if (tokens >> extra)
            throw ParseError(lineno, "scenario: trailing content '" + extra + "'");
    }
    if (!have_country) throw ParseError(lineno, "scenario: missing 'country' directive");
    for (auto& r : sc.world.country.regions) r.country = sc.world.country.country;
    detail::check_world(sc.world);
    detail::check_model(sc.model, sc.world);
    std::int64_t region_sum = 0;
    for (const auto& r : sc.world.country.regions) region_sum += r.population;
    if (region_sum > sc.world.country.population)
        throw ParseError(lineno, "scenario: region populations exceed the national total");
    return sc;
}

}  // namespace episcale
