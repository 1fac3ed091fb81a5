// Argument parsing for the episcale tool. Kept separate from main() so the
// test suite can drive the full CLI in-process.

#pragma once

#include <CLI11.hpp>

#include "episcale/commands.hpp"

namespace episcale::cli {

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"epidemic incidence estimation from indirect surveys and official series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    std::string out;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    app.add_option("--out", out, "write the command's output CSV to this file (with a .manifest.json beside it)");
    app.add_option("--seed", seed, "override the random seed (simulate only)");
    app.add_flag("--strict", strict, "abort on the first malformed input row");

    EstimateOpts est;
    auto* estimate = app.add_subcommand("estimate", "incidence estimates from survey responses");
    estimate->fallthrough();
    estimate->add_option("responses", est.responses_path, "responses CSV (date,country,region,reach,count)")
        ->required();
    estimate->add_option("--method", est.method, "estimation approach")
        ->required()
        ->check(CLI::IsMember({"region", "country"}));
    estimate->add_option("--regions", est.regions_path, "region table CSV (country,region,population)");
    estimate->add_option("--country", est.country, "restrict to one country code");
    estimate->add_option("--a-min", est.a_min, "min responses per rolling window (region method)")
        ->capture_default_str();
    estimate->add_option("--amin-country", est.amin_country, "min responses per block (country method)")
        ->capture_default_str();
    estimate->add_option("--z", est.z, "normal quantile for the CIs")->capture_default_str();
    estimate->add_option("--ratio-cap", est.ratio_cap, "outlier cap on count/reach")
        ->capture_default_str();
    estimate->add_option("--scale-symptomatic", est.scale_symptomatic,
                         "divide estimates by this symptomatic fraction")
        ->check(CLI::Range(0.0, 1.0));

    CcfrOpts ccfr;
    auto* ccfr_cmd = app.add_subcommand("ccfr", "delay-corrected CFR and true-case estimates");
    ccfr_cmd->fallthrough();
    ccfr_cmd->add_option("series", ccfr.series_path, "official series CSV (date,country,new_cases,new_deaths)")
        ->required();
    ccfr_cmd->add_option("--baseline-deaths", ccfr.baseline_deaths, "baseline deaths d_b")
        ->capture_default_str();
    ccfr_cmd->add_option("--baseline-cases", ccfr.baseline_cases, "baseline cases c_b")
        ->capture_default_str();
    ccfr_cmd->add_option("--delay-mean", ccfr.delay_mean, "delay mean in days")->capture_default_str();
    ccfr_cmd->add_option("--delay-sd", ccfr.delay_sd, "delay standard deviation in days")
        ->capture_default_str();
    ccfr_cmd->add_option("--delay-horizon", ccfr.delay_horizon, "delay truncation in days")
        ->capture_default_str();
    ccfr_cmd->add_option("--z", ccfr.z, "normal quantile for the CIs")->capture_default_str();

    CompareOpts cmp;
    auto* compare = app.add_subcommand("compare", "date-aligned join of the estimate series");
    compare->fallthrough();
    compare->add_option("--survey", cmp.survey_path, "output CSV of `estimate`");
    compare->add_option("--ccfr", cmp.ccfr_path, "output CSV of `ccfr`");
    compare->add_option("--official", cmp.official_path, "official series CSV");
    compare->add_option("--serology-reference", cmp.serology_reference,
                        "constant reference prevalence column");
    compare->add_option("--serology-low", cmp.serology_low, "reference band lower bound");
    compare->add_option("--serology-high", cmp.serology_high, "reference band upper bound");
    compare->add_option("--population", cmp.population,
                        "scale fraction columns to absolute cases for this population");
    compare->add_option("--scale-symptomatic", cmp.scale_symptomatic,
                        "divide survey and ccfr columns by this symptomatic fraction")
        ->check(CLI::Range(0.0, 1.0));

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "synthetic responses and estimator experiments");
    simulate->fallthrough();
    simulate->add_option("--scenario", sim.scenario_path, "scenario config file")->required();
    simulate->add_option("--n", sim.n, "responses per batch/trial (overrides scenario)");
    simulate->add_option("--responses-out", sim.responses_out, "write the simulated responses CSV here");
    simulate->add_option("--truth-out", sim.truth_out, "write the true prevalence CSV here");
    simulate->add_option("--experiment", sim.experiment, "run an experiment instead of a plain batch")
        ->check(CLI::IsMember({"coverage", "bias"}));
    simulate->add_option("--trials", sim.trials, "experiment trial count")->capture_default_str();
    simulate->add_option("--estimator", sim.estimator, "estimator for the coverage experiment")
        ->check(CLI::IsMember({"region", "country"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*estimate) {
            est.strict = strict;
            est.out = out;
            return cmd_estimate(est);
        }
        if (*ccfr_cmd) {
            ccfr.out = out;
            return cmd_ccfr(ccfr);
        }
        if (*compare) {
            cmp.out = out;
            return cmd_compare(cmp);
        }
        if (*simulate) {
            sim.seed = seed;
            sim.out = out;
            return cmd_simulate(sim);
        }
    } catch (const std::exception& e) {
        std::cerr << "episcale: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace episcale::cli
