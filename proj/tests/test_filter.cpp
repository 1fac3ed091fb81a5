#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "episcale/filter.hpp"

using namespace episcale;

namespace {
SurveyResponse resp(std::int64_t reach, std::int64_t count, const char* region = "M") {
    SurveyResponse r;
    r.date = *parse_date("2020-04-15");
    r.country = "ES";
    r.region = region;
    r.reach = reach;
    r.count = count;
    return r;
}
}  // namespace

TEST_CASE("reach_fence uses type-7 interpolated quartiles") {
    // frozen against numpy.percentile (linear interpolation)
    REQUIRE(reach_fence(std::vector<std::int64_t>{10, 20, 30, 40, 1000}) == Catch::Approx(70.0));
    REQUIRE(reach_fence(std::vector<std::int64_t>{5, 5, 5, 5}) == Catch::Approx(5.0));
    REQUIRE(reach_fence(std::vector<std::int64_t>{7}) == Catch::Approx(7.0));
    REQUIRE(reach_fence(std::vector<std::int64_t>{3, 7, 12, 25, 40, 41, 55, 90}) ==
            Catch::Approx(95.125));
    REQUIRE(reach_fence(std::vector<std::int64_t>{1, 2}) == Catch::Approx(2.5));
    REQUIRE(reach_fence(std::vector<std::int64_t>{2, 4, 6}) == Catch::Approx(8.0));
    // order must not matter
    REQUIRE(reach_fence(std::vector<std::int64_t>{1000, 40, 10, 30, 20}) == Catch::Approx(70.0));
    REQUIRE_THROWS_AS(reach_fence(std::vector<std::int64_t>{}), std::invalid_argument);
}

TEST_CASE("apply_filters applies the reach fence, then the ratio cap") {
    SECTION("large reach falls to the fence") {
        std::vector<SurveyResponse> in{resp(10, 2), resp(12, 1), resp(14, 0), resp(16, 1),
                                       resp(1000, 5)};
        // reaches {10,12,14,16,1000}: Q1=12, Q3=16, fence=22
        auto report = apply_filters(in, 0.3);
        REQUIRE(report.reach_fence == Catch::Approx(22.0));
        REQUIRE(report.removed_reach.size() == 1);
        REQUIRE(report.removed_reach[0].reach == 1000);
        REQUIRE(report.removed_ratio.size() == 0);
        REQUIRE(report.kept.size() == 4);
    }
    SECTION("three-response batch: the fence is too wide to trigger") {
        // reaches {50,100,1000}: Q1=75, Q3=550, fence = 550 + 1.5*475 = 1262.5
        std::vector<SurveyResponse> in{resp(100, 2), resp(50, 1), resp(1000, 5)};
        auto report = apply_filters(in, 0.3);
        REQUIRE(report.reach_fence == Catch::Approx(1262.5));
        REQUIRE(report.kept.size() == 3);
        REQUIRE(report.removed_reach.empty());
    }
    SECTION("high symptomatic ratio is removed") {
        auto report = apply_filters(std::vector<SurveyResponse>{resp(10, 5)}, 0.3);
        REQUIRE(report.kept.empty());
        REQUIRE(report.removed_ratio.size() == 1);
    }
    SECTION("ratio at the cap boundary survives") {
        auto report = apply_filters(std::vector<SurveyResponse>{resp(10, 3)}, 0.3);
        REQUIRE(report.kept.size() == 1);
    }
    SECTION("single zero-count response is kept") {
        auto report = apply_filters(std::vector<SurveyResponse>{resp(100, 0)}, 0.3);
        REQUIRE(report.kept.size() == 1);
        REQUIRE(report.removed_reach.empty());
        REQUIRE(report.removed_ratio.empty());
    }
    SECTION("fence is computed on the full batch, before any removal") {
        // the ratio outlier still contributes its reach to the fence
        std::vector<SurveyResponse> in{resp(10, 9), resp(10, 0), resp(10, 0), resp(10, 0)};
        auto report = apply_filters(in, 0.3);
        REQUIRE(report.reach_fence == Catch::Approx(10.0));
        REQUIRE(report.removed_ratio.size() == 1);
        REQUIRE(report.kept.size() == 3);
    }
    SECTION("argument validation") {
        REQUIRE_THROWS_AS(apply_filters(std::vector<SurveyResponse>{}, 0.3),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(apply_filters(std::vector<SurveyResponse>{resp(10, 0)}, 0.0),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(apply_filters(std::vector<SurveyResponse>{resp(10, 0)}, 1.5),
                          std::invalid_argument);
    }
}

namespace {
std::vector<SurveyResponse> random_batch(std::mt19937& gen, int n) {
    std::uniform_int_distribution<int> reach(1, 400);
    std::vector<SurveyResponse> out;
    for (int i = 0; i < n; ++i) {
        const int r = reach(gen);
        std::uniform_int_distribution<int> count(0, r);
        out.push_back(resp(r, count(gen)));
    }
    return out;
}

long multiset_hash(const std::vector<SurveyResponse>& v) {
    long h = 0;
    for (const auto& r : v) h += r.reach * 1000003 + r.count;  // order-free combination
    return h;
}
}  // namespace

TEST_CASE("filter partition property") {
    std::mt19937 gen(1234);
    std::uniform_int_distribution<int> size(1, 60);
    for (int trial = 0; trial < 200; ++trial) {
        auto in = random_batch(gen, size(gen));
        auto report = apply_filters(in, 0.3);
        REQUIRE(report.kept.size() + report.removed_reach.size() + report.removed_ratio.size() ==
                in.size());
        REQUIRE(multiset_hash(report.kept) + multiset_hash(report.removed_reach) +
                    multiset_hash(report.removed_ratio) ==
                multiset_hash(in));
        // classification is consistent with the fence
        for (const auto& r : report.removed_reach) REQUIRE(double(r.reach) > report.reach_fence);
        for (const auto& r : report.removed_ratio) {
            REQUIRE(double(r.reach) <= report.reach_fence);
            REQUIRE(double(r.count) / double(r.reach) > 0.3);
        }
    }
}

TEST_CASE("raising the ratio cap never shrinks the kept set") {
    std::mt19937 gen(77);
    for (int trial = 0; trial < 100; ++trial) {
        auto in = random_batch(gen, 40);
        std::size_t prev = 0;
        for (double cap : {0.05, 0.1, 0.3, 0.6, 1.0}) {
            auto kept = apply_filters(in, cap).kept.size();
            REQUIRE(kept >= prev);
            prev = kept;
        }
    }
}

TEST_CASE("a minimal-reach zero-count response is never removed") {
    std::mt19937 gen(4321);
    for (int trial = 0; trial < 100; ++trial) {
        auto in = random_batch(gen, 30);
        std::int64_t min_reach = in.front().reach;
        for (const auto& r : in) min_reach = std::min(min_reach, r.reach);
        in.push_back(resp(min_reach, 0));
        auto report = apply_filters(in, 0.3);
        bool found = false;
        for (const auto& r : report.kept)
            if (r.reach == min_reach && r.count == 0) found = true;
        REQUIRE(found);
    }
}
