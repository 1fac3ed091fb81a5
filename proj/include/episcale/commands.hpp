// Command implementations behind the episcale CLI. Every command buffers its
// output and writes it only on success, so a failing run never leaves a
// partial file. When writing to a file, a run manifest (inputs with content
// digests, effective parameters, tool version) is emitted alongside it.

#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "episcale/ccfr.hpp"
#include "episcale/filter.hpp"
#include "episcale/format.hpp"
#include "episcale/ingest.hpp"
#include "episcale/serology.hpp"
#include "episcale/simulate.hpp"
#include "episcale/survey.hpp"
#include "episcale/version.hpp"

namespace episcale::cli {

struct CommandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputFile {
    std::string path;
    std::string content;
    std::string digest;
};

inline InputFile slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CommandError("cannot open input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    InputFile f;
    f.path = path;
    f.content = buf.str();
    f.digest = "fnv1a:" + fnv1a_hex(f.content);
    return f;
}

/// Everything the manifest records about a run. No timestamps: reruns with
/// identical inputs must produce byte-identical files.
struct RunManifest {
    std::string command;
    std::vector<InputFile> inputs;
    std::map<std::string, std::string> parameters;
};

inline std::string manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& f : m.inputs) inputs.push_back({{"path", f.path}, {"digest", f.digest}});
    j["parameters"] = m.parameters;  // std::map: keys already sorted
    j["tool_version"] = std::string(kToolName) + " " + kToolVersion;
    return j.dump(2) + "\n";
}

/// Payload to the --out file (manifest beside it) or to stdout.
inline void deliver(const std::string& payload, const std::string& out_path,
                    const RunManifest& manifest) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw CommandError("cannot write output file: " + out_path);
        out << payload;
    }
    std::ofstream mf(out_path + ".manifest.json", std::ios::binary);
    if (!mf) throw CommandError("cannot write manifest for: " + out_path);
    mf << manifest_json(manifest);
}

// --- estimate ----------------------------------------------------------------

struct EstimateOpts {
    std::string responses_path;
    std::string regions_path;
    std::string method;           // "region" | "country"
    std::string country;          // optional filter when the file mixes countries
    std::int64_t a_min = 300;
    std::int64_t amin_country = 30;
    double z = 1.96;
    double ratio_cap = 0.3;
    double scale_symptomatic = 0;  // 0 = off
    bool strict = false;
    std::string out;
};

inline void append_estimate_rows(std::ostream& os, std::span<const EstimateResult> rows) {
    for (const auto& e : rows)
        os << format_date(e.date) << ',' << method_tag(e.method) << ',' << format_g6(e.point)
           << ',' << format_g6(e.ci_low) << ',' << format_g6(e.ci_high) << ',' << e.n_responses
           << ',' << e.total_reach << '\n';
}

inline int cmd_estimate(const EstimateOpts& opts) {
    RunManifest manifest;
    manifest.command = "estimate";
    manifest.parameters = {{"method", opts.method},
                           {"a-min", std::to_string(opts.a_min)},
                           {"amin-country", std::to_string(opts.amin_country)},
                           {"z", format_g6(opts.z)},
                           {"ratio-cap", format_g6(opts.ratio_cap)},
                           {"scale-symptomatic", format_g6(opts.scale_symptomatic)},
                           {"strict", opts.strict ? "true" : "false"}};
    if (!opts.country.empty()) manifest.parameters["country"] = opts.country;

    auto input = slurp(opts.responses_path);
    std::istringstream stream(input.content);
    auto parsed = parse_responses(stream, opts.strict);
    manifest.inputs.push_back(std::move(input));
    for (const auto& reject : parsed.rejects)
        std::cerr << opts.responses_path << ":" << reject.line << ": rejected: " << reject.reason
                  << "\n";

    std::vector<SurveyResponse> responses;
    for (auto& r : parsed.rows) {
        if (!opts.country.empty() && r.country != opts.country) continue;
        responses.push_back(std::move(r));
    }
    if (opts.country.empty()) {
        for (std::size_t i = 1; i < responses.size(); ++i)
            if (responses[i].country != responses[0].country)
                throw CommandError(
                    "responses mix several countries; select one with --country");
    }
    std::stable_sort(responses.begin(), responses.end(),
                     [](const SurveyResponse& a, const SurveyResponse& b) { return a.date < b.date; });

    std::vector<EstimateResult> series;
    if (!responses.empty()) {
        auto report = apply_filters(responses, opts.ratio_cap);
        std::cerr << "filter: kept " << report.kept.size() << ", removed "
                  << report.removed_reach.size() << " by reach fence ("
                  << format_g6(report.reach_fence) << "), " << report.removed_ratio.size()
                  << " by ratio cap\n";
        if (opts.method == "region") {
            if (opts.regions_path.empty())
                throw CommandError("--method region requires --regions <table.csv>");
            auto table = slurp(opts.regions_path);
            std::istringstream tstream(table.content);
            auto country = parse_region_table(tstream);
            manifest.inputs.push_back(std::move(table));
            if (!responses.empty() && country.country != responses[0].country)
                throw CommandError("region table is for " + country.country +
                                   " but responses are for " + responses[0].country);
            series = rolling_region_series(report.kept, country, opts.a_min, opts.z);
        } else {
            series = rolling_country_series(report.kept, opts.amin_country, opts.z);
        }
        if (opts.scale_symptomatic > 0)
            for (auto& e : series) e = scale_symptomatic_to_total(e, opts.scale_symptomatic);
    }

    std::ostringstream out;
    out << "date,method,point,ci_low,ci_high,n_responses,total_reach\n";
    append_estimate_rows(out, series);
    deliver(out.str(), opts.out, manifest);
    return 0;
}

// --- ccfr --------------------------------------------------------------------

struct CcfrOpts {
    std::string series_path;
    std::int64_t baseline_deaths = 1023;
    std::int64_t baseline_cases = 74130;
    double delay_mean = 13.0;
    double delay_sd = 12.7;
    int delay_horizon = 120;
    double z = 1.96;
    std::string out;
};

inline int cmd_ccfr(const CcfrOpts& opts) {
    RunManifest manifest;
    manifest.command = "ccfr";
    manifest.parameters = {{"baseline-deaths", std::to_string(opts.baseline_deaths)},
                           {"baseline-cases", std::to_string(opts.baseline_cases)},
                           {"delay-mean", format_g6(opts.delay_mean)},
                           {"delay-sd", format_g6(opts.delay_sd)},
                           {"delay-horizon", std::to_string(opts.delay_horizon)},
                           {"z", format_g6(opts.z)}};

    auto input = slurp(opts.series_path);
    std::istringstream stream(input.content);
    auto series = parse_official_series(stream);
    manifest.inputs.push_back(std::move(input));

    const Baseline baseline{opts.baseline_deaths, opts.baseline_cases};
    std::ostringstream out;
    out << "date,ccfr,ratio,ratio_low,ratio_high,true_cases,true_cases_low,true_cases_high\n";
    if (!series.points.empty()) {
        auto delay = discretize_delay(opts.delay_mean, opts.delay_sd, opts.delay_horizon);
        auto states = ccfr_series(series.points, delay, baseline);
        std::map<Date, std::int64_t> cum_cases;
        std::int64_t running = 0;
        for (const auto& p : series.points) cum_cases[p.date] = (running += p.new_cases);
        for (const auto& s : states) {
            const double reported = double(cum_cases.at(s.date));
            out << format_date(s.date) << ',' << format_g6(s.ccfr) << ',' << format_g6(s.ratio);
            if (s.sigma_hat) {
                auto ci = ln_method_ci(s.cum_deaths, s.known_outcome, baseline, opts.z);
                out << ',' << format_g6(ci.low) << ',' << format_g6(ci.high) << ','
                    << format_g6(reported * s.ratio) << ',' << format_g6(reported * ci.low) << ','
                    << format_g6(reported * ci.high) << '\n';
            } else {
                out << ",,," << format_g6(reported * s.ratio) << ",,\n";
            }
        }
    }
    deliver(out.str(), opts.out, manifest);
    return 0;
}

// --- compare -----------------------------------------------------------------

struct CompareOpts {
    std::string survey_path;    // output of `estimate`
    std::string ccfr_path;      // output of `ccfr`
    std::string official_path;  // raw official series
    double serology_reference = -1;  // < 0 = absent
    double serology_low = -1;
    double serology_high = -1;
    std::int64_t population = 0;     // 0 = keep fractions
    double scale_symptomatic = 0;    // 0 = off; applied to survey and ccfr columns
    std::string out;
};

namespace detail {

struct CcfrOutRow {
    double true_cases = 0;
    std::optional<double> low, high;
};

inline double parse_double_cell(const std::string& s, long line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "unparseable number '" + s + "'");
    }
}

inline std::map<Date, EstimateResult> parse_estimate_output(std::istream& in) {
    static constexpr std::string_view kHeader[] = {"date",    "method",      "point",
                                                   "ci_low",  "ci_high",     "n_responses",
                                                   "total_reach"};
    auto table = read_csv(in, kHeader);
    if (!table.malformed.empty())
        throw ParseError(table.malformed.front().line, "wrong number of fields");
    std::map<Date, EstimateResult> out;
    for (const auto& row : table.rows) {
        auto date = parse_date(row.fields[0]);
        if (!date) throw ParseError(row.line, "unparseable date '" + row.fields[0] + "'");
        EstimateResult e;
        e.date = *date;
        auto method = parse_method_tag(row.fields[1]);
        if (!method) throw ParseError(row.line, "unknown method tag '" + row.fields[1] + "'");
        e.method = *method;
        e.point = parse_double_cell(row.fields[2], row.line);
        e.ci_low = parse_double_cell(row.fields[3], row.line);
        e.ci_high = parse_double_cell(row.fields[4], row.line);
        out[*date] = e;  // one estimate per day; later rows win
    }
    return out;
}

inline std::map<Date, CcfrOutRow> parse_ccfr_output(std::istream& in) {
    static constexpr std::string_view kHeader[] = {"date",      "ccfr",           "ratio",
                                                   "ratio_low", "ratio_high",     "true_cases",
                                                   "true_cases_low", "true_cases_high"};
    auto table = read_csv(in, kHeader);
    if (!table.malformed.empty())
        throw ParseError(table.malformed.front().line, "wrong number of fields");
    std::map<Date, CcfrOutRow> out;
    for (const auto& row : table.rows) {
        auto date = parse_date(row.fields[0]);
        if (!date) throw ParseError(row.line, "unparseable date '" + row.fields[0] + "'");
        CcfrOutRow r;
        r.true_cases = parse_double_cell(row.fields[5], row.line);
        if (!row.fields[6].empty()) r.low = parse_double_cell(row.fields[6], row.line);
        if (!row.fields[7].empty()) r.high = parse_double_cell(row.fields[7], row.line);
        out[*date] = r;
    }
    return out;
}

}  // namespace detail

/// Date-aligned wide table over the intersection of the provided series'
/// date ranges; cells are empty where a series has no value that day.
inline int cmd_compare(const CompareOpts& opts) {
    if (opts.survey_path.empty() && opts.ccfr_path.empty())
        throw CommandError("compare needs at least one of --survey / --ccfr");

    RunManifest manifest;
    manifest.command = "compare";
    manifest.parameters = {{"population", std::to_string(opts.population)},
                           {"scale-symptomatic", format_g6(opts.scale_symptomatic)}};
    if (opts.serology_reference >= 0)
        manifest.parameters["serology-reference"] = format_g6(opts.serology_reference);
    if (opts.serology_low >= 0) manifest.parameters["serology-low"] = format_g6(opts.serology_low);
    if (opts.serology_high >= 0)
        manifest.parameters["serology-high"] = format_g6(opts.serology_high);

    std::map<Date, EstimateResult> survey;
    std::map<Date, detail::CcfrOutRow> ccfr;
    std::map<Date, std::int64_t> official;
    std::optional<Date> lo, hi;
    auto narrow = [&](Date first, Date last) {
        lo = lo ? std::max(*lo, first) : first;
        hi = hi ? std::min(*hi, last) : last;
    };

    if (!opts.survey_path.empty()) {
        auto f = slurp(opts.survey_path);
        std::istringstream s(f.content);
        survey = detail::parse_estimate_output(s);
        manifest.inputs.push_back(std::move(f));
        if (!survey.empty()) narrow(survey.begin()->first, survey.rbegin()->first);
    }
    if (!opts.ccfr_path.empty()) {
        auto f = slurp(opts.ccfr_path);
        std::istringstream s(f.content);
        ccfr = detail::parse_ccfr_output(s);
        manifest.inputs.push_back(std::move(f));
        if (!ccfr.empty()) narrow(ccfr.begin()->first, ccfr.rbegin()->first);
    }
    if (!opts.official_path.empty()) {
        auto f = slurp(opts.official_path);
        std::istringstream s(f.content);
        auto series = parse_official_series(s);
        manifest.inputs.push_back(std::move(f));
        std::int64_t running = 0;
        for (const auto& p : series.points) official[p.date] = (running += p.new_cases);
        if (!official.empty()) narrow(official.begin()->first, official.rbegin()->first);
    }

    const double scale = opts.scale_symptomatic > 0 ? 1.0 / opts.scale_symptomatic : 1.0;
    const double pop = opts.population > 0 ? double(opts.population) : 1.0;

    std::ostringstream out;
    out << "date,survey_point,survey_low,survey_high,ccfr_cases,ccfr_cases_low,ccfr_cases_high,"
           "official_cum_cases,serology_reference,serology_low,serology_high\n";
    const bool empty_intersection = !lo || !hi || *lo > *hi;
    if (empty_intersection) std::cerr << "compare: input date ranges do not overlap\n";
    if (!empty_intersection) {
        auto serology_cell = [&](double v) { return v >= 0 ? format_g6(v * pop) : std::string(); };
        for (Date d = *lo; d <= *hi; d += std::chrono::days{1}) {
            out << format_date(d);
            if (auto it = survey.find(d); it != survey.end()) {
                const auto& e = it->second;
                out << ',' << format_g6(e.point * scale * pop) << ','
                    << format_g6(e.ci_low * scale * pop) << ','
                    << format_g6(e.ci_high * scale * pop);
            } else {
                out << ",,,";
            }
            if (auto it = ccfr.find(d); it != ccfr.end()) {
                const auto& r = it->second;
                out << ',' << format_g6(r.true_cases * scale);
                out << ',' << (r.low ? format_g6(*r.low * scale) : std::string());
                out << ',' << (r.high ? format_g6(*r.high * scale) : std::string());
            } else {
                out << ",,,";
            }
            if (auto it = official.find(d); it != official.end())
                out << ',' << it->second;
            else
                out << ',';
            out << ',' << serology_cell(opts.serology_reference) << ','
                << serology_cell(opts.serology_low) << ',' << serology_cell(opts.serology_high)
                << '\n';
        }
    }
    deliver(out.str(), opts.out, manifest);
    return 0;
}

// --- simulate ----------------------------------------------------------------

struct SimulateOpts {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;  // overrides the scenario seed
    std::optional<int> n;               // overrides the scenario batch size
    std::string responses_out;
    std::string truth_out;
    std::string experiment;             // "", "coverage", "bias"
    int trials = 1000;
    std::string estimator = "region";   // coverage experiment estimator
    std::string out;
};

inline int cmd_simulate(const SimulateOpts& opts) {
    RunManifest manifest;
    manifest.command = "simulate";

    auto input = slurp(opts.scenario_path);
    std::istringstream stream(input.content);
    auto scenario = parse_scenario(stream);
    manifest.inputs.push_back(std::move(input));
    if (opts.seed) scenario.world.rng_seed = *opts.seed;
    if (opts.n) scenario.n = *opts.n;

    manifest.parameters = {{"seed", std::to_string(scenario.world.rng_seed)},
                           {"n", std::to_string(scenario.n)},
                           {"date", format_date(scenario.date)}};
    if (!opts.experiment.empty()) {
        manifest.parameters["experiment"] = opts.experiment;
        manifest.parameters["trials"] = std::to_string(opts.trials);
        if (opts.experiment == "coverage") manifest.parameters["estimator"] = opts.estimator;
    }

    auto responses =
        simulate_responses(scenario.world, scenario.model, scenario.n, scenario.date);

    if (!opts.responses_out.empty()) {
        std::ostringstream rs;
        write_responses(rs, responses);
        RunManifest m = manifest;
        m.command = "simulate:responses";
        deliver(rs.str(), opts.responses_out, m);
    }
    if (!opts.truth_out.empty()) {
        std::ostringstream ts;
        ts << "region,prevalence\n";
        for (const auto& [code, p] : scenario.world.true_prevalence)
            ts << code << ',' << format_g6(p) << '\n';
        RunManifest m = manifest;
        m.command = "simulate:truth";
        deliver(ts.str(), opts.truth_out, m);
    }

    std::ostringstream out;
    if (opts.experiment.empty()) {
        // default payload: the responses themselves
        write_responses(out, responses);
    } else if (opts.experiment == "coverage") {
        const Method method =
            opts.estimator == "country" ? Method::CountryPooled : Method::RegionStratified;
        auto result =
            coverage_experiment(scenario.world, scenario.model, scenario.n, opts.trials, method);
        out << "key,value\n";
        out << "experiment,coverage\n";
        out << "estimator," << method_tag(method) << '\n';
        out << "trials," << result.trials << '\n';
        out << "n," << scenario.n << '\n';
        out << "truth," << format_g6(result.truth) << '\n';
        out << "covered," << result.covered << '\n';
        out << "failed," << result.failed << '\n';
        out << "coverage," << format_g6(result.coverage) << '\n';
    } else if (opts.experiment == "bias") {
        // the scenario's weights are the biased model; the unbiased model
        // samples respondents proportionally to region population
        RespondentModel unbiased = scenario.model;
        unbiased.region_bias.clear();
        for (const auto& [code, p] : scenario.world.true_prevalence)
            unbiased.region_bias[code] =
                double(scenario.world.country.find_region(code)->population);
        auto result =
            bias_experiment(scenario.world, scenario.model, unbiased, scenario.n, opts.trials);
        out << "key,value\n";
        out << "experiment,bias\n";
        out << "trials," << opts.trials << '\n';
        out << "n," << scenario.n << '\n';
        out << "truth," << format_g6(result.truth) << '\n';
        out << "pooled_mae_biased," << format_g6(result.pooled_mae_biased) << '\n';
        out << "pooled_mae_unbiased," << format_g6(result.pooled_mae_unbiased) << '\n';
        out << "stratified_mae_biased," << format_g6(result.stratified_mae_biased) << '\n';
        out << "stratified_mae_unbiased," << format_g6(result.stratified_mae_unbiased) << '\n';
    } else {
        throw CommandError("unknown experiment '" + opts.experiment + "'");
    }
    deliver(out.str(), opts.out, manifest);
    return 0;
}

}  // namespace episcale::cli
