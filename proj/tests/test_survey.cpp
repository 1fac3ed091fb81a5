#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "episcale/survey.hpp"
#include "oracles.hpp"

using namespace episcale;

namespace {
const Date kDay = *parse_date("2020-04-15");

SurveyResponse resp(std::int64_t reach, std::int64_t count, const char* region = "A",
                    const char* date = "2020-04-15") {
    SurveyResponse r;
    r.date = *parse_date(date);
    r.country = "ES";
    if (*region) r.region = region;
    r.reach = reach;
    r.count = count;
    return r;
}

CountryInfo two_region_country(std::int64_t pop_a = 1000000, std::int64_t pop_b = 1000000,
                               std::int64_t national = 2000000) {
    CountryInfo c;
    c.country = "ES";
    c.population = national;
    c.regions = {{"A", "ES", pop_a}, {"B", "ES", pop_b}};
    return c;
}
}  // namespace

TEST_CASE("region_ratio is the ratio of sums") {
    auto agg = region_ratio(std::vector<SurveyResponse>{resp(100, 2), resp(50, 1)});
    REQUIRE(agg.p_hat == 3.0 / 150.0);
    REQUIRE(agg.reach_sum == 150);
    REQUIRE(agg.count_sum == 3);
    REQUIRE(agg.n == 2);

    REQUIRE(region_ratio(std::vector<SurveyResponse>{resp(100, 0)}).p_hat == 0.0);
    REQUIRE(region_ratio(std::vector<SurveyResponse>{resp(10, 3)}).p_hat == Catch::Approx(0.3));

    REQUIRE_THROWS_AS(region_ratio(std::vector<SurveyResponse>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(region_ratio(std::vector<SurveyResponse>{resp(10, 1, "A"), resp(10, 1, "B")}),
                      std::invalid_argument);
}

TEST_CASE("ratio of sums differs from the mean of ratios") {
    std::mt19937 gen(5);
    std::uniform_int_distribution<int> reach(1, 300);
    for (int i = 0; i < 500; ++i) {
        const int a = reach(gen), c = reach(gen);
        std::uniform_int_distribution<int> cb(0, a), cd(0, c);
        const int b = cb(gen), d = cd(gen);
        auto agg = region_ratio(std::vector<SurveyResponse>{resp(a, b), resp(c, d)});
        REQUIRE(agg.p_hat == Catch::Approx(double(b + d) / double(a + c)).epsilon(1e-12));
        const double mean_of_ratios = 0.5 * (double(b) / a + double(d) / c);
        if (std::abs(double(b) / a - double(d) / c) > 1e-9 && a != c)
            REQUIRE_FALSE(agg.p_hat == Catch::Approx(mean_of_ratios).epsilon(1e-9));
    }
}

TEST_CASE("stratified estimate reproduces the worked two-region example") {
    std::map<std::string, std::vector<SurveyResponse>> by_region{
        {"A", {resp(100, 2, "A"), resp(50, 1, "A")}},
        {"B", {resp(200, 10, "B"), resp(100, 5, "B")}},
    };
    auto country = two_region_country();
    auto est = stratified_estimate(by_region, country, kDay, 4);

    REQUIRE(std::abs(est.point - 0.035) <= 1e-15);
    REQUIRE(est.method == Method::RegionStratified);
    REQUIRE(est.n_responses == 4);
    REQUIRE(est.total_reach == 450);
    // all individual ratios equal their region ratio, so the variance is zero
    REQUIRE(est.ci_low == Catch::Approx(0.035).margin(1e-15));
    REQUIRE(est.ci_high == Catch::Approx(0.035).margin(1e-15));

    auto oracle = oracles::stratified_brute_force(by_region, country);
    REQUIRE(est.point == Catch::Approx(oracle.point).margin(1e-15));
    REQUIRE(oracle.variance == 0.0);
}

TEST_CASE("stratified variance matches the brute-force oracle") {
    std::mt19937 gen(31337);
    std::uniform_int_distribution<int> reach(1, 250), n_regional(2, 6), n_resp(1, 8);
    const char* codes[] = {"A", "B", "C", "D", "E", "F"};
    for (int trial = 0; trial < 300; ++trial) {
        CountryInfo country;
        country.country = "ES";
        std::map<std::string, std::vector<SurveyResponse>> by_region;
        const int regions = n_regional(gen);
        std::int64_t pop_sum = 0;
        bool any_pair = false;
        for (int i = 0; i < regions; ++i) {
            std::uniform_int_distribution<int> pop(100000, 9000000);
            const std::int64_t n_i = pop(gen);
            country.regions.push_back({codes[i], "ES", n_i});
            pop_sum += n_i;
            const int k = n_resp(gen);
            any_pair = any_pair || k >= 2;
            for (int j = 0; j < k; ++j) {
                const int r = reach(gen);
                std::uniform_int_distribution<int> count(0, r);
                by_region[codes[i]].push_back(resp(r, count(gen), codes[i]));
            }
        }
        country.population = pop_sum * 2;  // regions need not partition the country
        if (!any_pair) continue;

        std::int64_t total = 0;
        for (const auto& [code, rs] : by_region) total += std::int64_t(rs.size());
        auto est = stratified_estimate(by_region, country, kDay, total);
        auto oracle = oracles::stratified_brute_force(by_region, country);

        REQUIRE(est.point == Catch::Approx(oracle.point).margin(1e-12));
        const double half = 1.96 * std::sqrt(oracle.variance);
        REQUIRE(est.ci_high == Catch::Approx(std::min(1.0, oracle.point + half)).margin(1e-12));
        REQUIRE(est.ci_low == Catch::Approx(std::max(0.0, oracle.point - half)).margin(1e-12));
        REQUIRE(est.point >= 0.0);
        REQUIRE(est.ci_low >= 0.0);
        REQUIRE(est.ci_high <= 1.0);
        REQUIRE(est.ci_low <= est.point);
        REQUIRE(est.point <= est.ci_high);
    }
}

TEST_CASE("singleton regions contribute their ratio but no variance") {
    std::map<std::string, std::vector<SurveyResponse>> by_region{
        {"A", {resp(100, 2, "A"), resp(50, 3, "A")}},
        {"B", {resp(200, 10, "B")}},  // n=1: S^2 undefined, treated as 0
    };
    auto country = two_region_country();
    auto est = stratified_estimate(by_region, country, kDay, 3);
    const double expected_point = 0.5 * (5.0 / 150.0) + 0.5 * 0.05;
    REQUIRE(est.point == Catch::Approx(expected_point).margin(1e-15));
    auto oracle = oracles::stratified_brute_force(by_region, country);
    const double half = est.ci_high - est.point;
    REQUIRE(half == Catch::Approx(1.96 * std::sqrt(oracle.variance)).margin(1e-12));
}

TEST_CASE("stratified estimate rejects unusable windows") {
    auto country = two_region_country();
    std::map<std::string, std::vector<SurveyResponse>> only_singletons{
        {"A", {resp(100, 2, "A")}}, {"B", {resp(50, 1, "B")}}};
    REQUIRE_THROWS_AS(stratified_estimate(only_singletons, country, kDay, 2),
                      std::invalid_argument);

    std::map<std::string, std::vector<SurveyResponse>> unknown{
        {"Z", {resp(100, 2, "Z"), resp(50, 1, "Z")}}};
    REQUIRE_THROWS_AS(stratified_estimate(unknown, country, kDay, 2), std::invalid_argument);

    std::map<std::string, std::vector<SurveyResponse>> empty;
    REQUIRE_THROWS_AS(stratified_estimate(empty, country, kDay, 0), std::invalid_argument);
}

TEST_CASE("stratified weights renormalize over represented regions") {
    CountryInfo country;
    country.country = "ES";
    country.population = 10000000;
    country.regions = {{"A", "ES", 1000000}, {"B", "ES", 2000000}, {"C", "ES", 3000000}};
    // region C unrepresented: weights should be 1/3 and 2/3
    std::map<std::string, std::vector<SurveyResponse>> by_region{
        {"A", {resp(100, 10, "A"), resp(100, 10, "A")}},
        {"B", {resp(100, 4, "B"), resp(100, 4, "B")}},
    };
    auto est = stratified_estimate(by_region, country, kDay, 4);
    REQUIRE(est.point == Catch::Approx((1.0 / 3.0) * 0.1 + (2.0 / 3.0) * 0.04).margin(1e-12));
}

TEST_CASE("pooled estimate matches the binomial CI arithmetic") {
    auto est = pooled_estimate(
        std::vector<SurveyResponse>{resp(100, 2), resp(50, 1), resp(50, 2)}, kDay);
    REQUIRE(est.point == Catch::Approx(0.025).margin(1e-15));
    // frozen from an independent evaluation of p +/- 1.96*sqrt(p(1-p)/200)
    REQUIRE(est.ci_low == Catch::Approx(0.0033621859).margin(1e-9));
    REQUIRE(est.ci_high == Catch::Approx(0.0466378141).margin(1e-9));
    REQUIRE(est.n_responses == 3);
    REQUIRE(est.total_reach == 200);
    REQUIRE(est.method == Method::CountryPooled);

    auto zero = pooled_estimate(std::vector<SurveyResponse>{resp(100, 0)}, kDay);
    REQUIRE(zero.point == 0.0);
    REQUIRE(zero.ci_low == 0.0);
    REQUIRE(zero.ci_high == 0.0);

    auto third = pooled_estimate(std::vector<SurveyResponse>{resp(10, 3)}, kDay);
    REQUIRE(third.point == Catch::Approx(0.3));
    REQUIRE(third.ci_high - third.point == Catch::Approx(1.96 * std::sqrt(0.21 / 10.0)).margin(1e-12));

    REQUIRE_THROWS_AS(pooled_estimate(std::vector<SurveyResponse>{}, kDay), std::invalid_argument);
}

TEST_CASE("pooled CI lower bound clamps at zero") {
    auto est = pooled_estimate(std::vector<SurveyResponse>{resp(10, 1)}, kDay);
    // p=0.1, half = 1.96*sqrt(0.09/10) ~= 0.186 -> raw lower bound negative
    REQUIRE(est.ci_low == 0.0);
    REQUIRE(est.point == Catch::Approx(0.1));
}

TEST_CASE("duplicating a window shrinks the pooled CI halfwidth by sqrt(2)") {
    std::mt19937 gen(11);
    std::uniform_int_distribution<int> reach(1, 200), n_resp(1, 30);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SurveyResponse> batch;
        const int n = n_resp(gen);
        for (int i = 0; i < n; ++i) {
            const int r = reach(gen);
            std::uniform_int_distribution<int> count(0, std::max(1, r / 4));
            batch.push_back(resp(r, count(gen)));
        }
        auto single = pooled_estimate(batch, kDay);
        std::vector<SurveyResponse> doubled = batch;
        doubled.insert(doubled.end(), batch.begin(), batch.end());
        auto twice = pooled_estimate(doubled, kDay);

        REQUIRE(twice.point == single.point);  // integer sums: exactly equal
        const double h1 = single.ci_high - single.point;
        const double h2 = twice.ci_high - twice.point;
        if (h1 > 0) REQUIRE(h1 / h2 == Catch::Approx(std::sqrt(2.0)).margin(1e-9));
    }
}

TEST_CASE("estimators are permutation invariant") {
    std::mt19937 gen(222);
    std::uniform_int_distribution<int> reach(1, 200);
    std::vector<SurveyResponse> batch;
    for (int i = 0; i < 40; ++i) {
        const int r = reach(gen);
        std::uniform_int_distribution<int> count(0, r / 3);
        batch.push_back(resp(r, count(gen), i % 2 ? "A" : "B"));
    }
    auto country = two_region_country();
    auto group = [&](const std::vector<SurveyResponse>& v) {
        std::map<std::string, std::vector<SurveyResponse>> by_region;
        for (const auto& r : v) by_region[*r.region].push_back(r);
        return by_region;
    };
    auto pooled_a = pooled_estimate(batch, kDay);
    auto strat_a = stratified_estimate(group(batch), country, kDay, 40);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(batch.begin(), batch.end(), gen);
        auto pooled_b = pooled_estimate(batch, kDay);
        REQUIRE(pooled_b.point == pooled_a.point);
        REQUIRE(pooled_b.ci_low == pooled_a.ci_low);
        auto strat_b = stratified_estimate(group(batch), country, kDay, 40);
        REQUIRE(strat_b.point == Catch::Approx(strat_a.point).margin(1e-14));
        REQUIRE(strat_b.ci_high == Catch::Approx(strat_a.ci_high).margin(1e-12));
    }
}

TEST_CASE("rolling region series accumulates whole days backwards") {
    CountryInfo country = two_region_country();

    SECTION("300 responses on one day produce one estimate") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 300; ++i)
            responses.push_back(resp(100, i % 7 == 0 ? 3 : 2, i % 2 ? "A" : "B"));
        auto series = rolling_region_series(responses, country, 300);
        REQUIRE(series.size() == 1);
        REQUIRE(series[0].date == kDay);
        REQUIRE(series[0].n_responses == 300);
    }
    SECTION("150 per day over 3 days: estimates on days 2 and 3") {
        std::vector<SurveyResponse> responses;
        const char* dates[] = {"2020-04-13", "2020-04-14", "2020-04-15"};
        for (const char* d : dates)
            for (int i = 0; i < 150; ++i)
                responses.push_back(resp(100, 2, i % 2 ? "A" : "B", d));
        auto series = rolling_region_series(responses, country, 300);
        REQUIRE(series.size() == 2);
        REQUIRE(format_date(series[0].date) == "2020-04-14");
        REQUIRE(format_date(series[1].date) == "2020-04-15");
        REQUIRE(series[0].n_responses == 300);  // two-day window
        REQUIRE(series[1].n_responses == 300);
    }
    SECTION("too little history emits nothing") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 10; ++i) responses.push_back(resp(100, 2, "A"));
        REQUIRE(rolling_region_series(responses, country, 300).empty());
    }
    SECTION("country-wide responses count toward the window but not the math") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 250; ++i) responses.push_back(resp(100, 2, "A", "2020-04-14"));
        for (int i = 0; i < 50; ++i) responses.push_back(resp(100, 9, "", "2020-04-15"));
        for (int i = 0; i < 10; ++i) responses.push_back(resp(100, 2, "A", "2020-04-15"));
        auto series = rolling_region_series(responses, country, 300);
        // day 14: only 250 accumulated -> nothing; day 15: 310 -> estimate
        REQUIRE(series.size() == 1);
        REQUIRE(format_date(series[0].date) == "2020-04-15");
        REQUIRE(series[0].n_responses == 260);       // regional responses only
        REQUIRE(series[0].point == Catch::Approx(0.02));  // country-wide 9s excluded
    }
}

TEST_CASE("rolling country series emits disjoint forward blocks") {
    SECTION("exactly a_min on one day") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 30; ++i) responses.push_back(resp(100, 2));
        auto series = rolling_country_series(responses, 30);
        REQUIRE(series.size() == 1);
        REQUIRE(series[0].date == kDay);
        REQUIRE(series[0].n_responses == 30);
    }
    SECTION("10 per day over 6 days: blocks end on days 3 and 6") {
        std::vector<SurveyResponse> responses;
        const char* dates[] = {"2020-04-10", "2020-04-11", "2020-04-12",
                               "2020-04-13", "2020-04-14", "2020-04-15"};
        for (const char* d : dates)
            for (int i = 0; i < 10; ++i) responses.push_back(resp(100, 2, "A", d));
        auto series = rolling_country_series(responses, 30);
        REQUIRE(series.size() == 2);
        REQUIRE(format_date(series[0].date) == "2020-04-12");
        REQUIRE(format_date(series[1].date) == "2020-04-15");
        REQUIRE(series[0].n_responses == 30);
        REQUIRE(series[1].n_responses == 30);
    }
    SECTION("below the threshold emits nothing") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 29; ++i) responses.push_back(resp(100, 2));
        REQUIRE(rolling_country_series(responses, 30).empty());
    }
    SECTION("country-wide responses participate") {
        std::vector<SurveyResponse> responses;
        for (int i = 0; i < 15; ++i) responses.push_back(resp(100, 2, ""));
        for (int i = 0; i < 15; ++i) responses.push_back(resp(100, 2, "A"));
        REQUIRE(rolling_country_series(responses, 30).size() == 1);
    }
}

TEST_CASE("country blocks use every response at most once") {
    std::mt19937 gen(808);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SurveyResponse> responses;
        std::uniform_int_distribution<int> per_day(0, 12);
        std::int64_t total = 0;
        for (int d = 1; d <= 20; ++d) {
            char date[11];
            std::snprintf(date, sizeof date, "2020-04-%02d", d);
            const int k = per_day(gen);
            total += k;
            for (int i = 0; i < k; ++i) responses.push_back(resp(100, 1, "A", date));
        }
        auto series = rolling_country_series(responses, 30);
        std::int64_t used = 0;
        Date prev_date{};
        for (const auto& e : series) {
            used += e.n_responses;
            REQUIRE(e.n_responses >= 30);
            if (used > e.n_responses) REQUIRE(e.date > prev_date);  // blocks move forward
            prev_date = e.date;
        }
        REQUIRE(used <= total);
        REQUIRE(total - used < 30);  // only a trailing partial block may remain
    }
}

TEST_CASE("z override controls the CI width") {
    auto est = pooled_estimate(std::vector<SurveyResponse>{resp(100, 10)}, kDay, 0.0);
    REQUIRE(est.ci_low == est.point);
    REQUIRE(est.ci_high == est.point);
}
