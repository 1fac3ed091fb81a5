// Shared domain types and their invariants. No I/O, no statistics.

#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "episcale/country.hpp"
#include "episcale/date.hpp"

namespace episcale {

/// One participant's record: how many people they know in an area (reach)
/// and how many of those have compatible symptoms (count).
/// Invariants: reach >= 1, 0 <= count <= reach. Absent region = country-wide.
struct SurveyResponse {
    Date date{};
    std::string country;
    std::optional<std::string> region;
    std::int64_t reach = 0;
    std::int64_t count = 0;

    bool country_wide() const { return !region.has_value(); }
};

struct RegionInfo {
    std::string region;
    std::string country;
    std::int64_t population = 0;
};

struct CountryInfo {
    std::string country;
    std::int64_t population = 0;            // national total N
    std::vector<RegionInfo> regions;        // unique codes, sum of populations <= N

    const RegionInfo* find_region(std::string_view code) const {
        for (const auto& r : regions)
            if (r.region == code) return &r;
        return nullptr;
    }
};

/// Per-day official counts. Series are dense and date-sorted after ingest.
struct OfficialSeriesPoint {
    Date date{};
    std::int64_t new_cases = 0;
    std::int64_t new_deaths = 0;
};

enum class Method { RegionStratified, CountryPooled, Ccfr };

inline std::string_view method_tag(Method m) {
    switch (m) {
        case Method::RegionStratified: return "region-stratified";
        case Method::CountryPooled: return "country-pooled";
        case Method::Ccfr: return "ccfr";
    }
    return "?";
}

inline std::optional<Method> parse_method_tag(std::string_view tag) {
    if (tag == "region-stratified") return Method::RegionStratified;
    if (tag == "country-pooled") return Method::CountryPooled;
    if (tag == "ccfr") return Method::Ccfr;
    return std::nullopt;
}

/// Point estimate with 95% CI. Estimator math keeps fractions in [0,1];
/// conversion to absolute cases is a presentation-layer multiply.
struct EstimateResult {
    Date date{};
    double point = 0;
    double ci_low = 0;      // clamped at 0: proportions cannot be negative
    double ci_high = 0;
    std::int64_t n_responses = 0;
    std::int64_t total_reach = 0;
    Method method = Method::CountryPooled;
};

/// Discretized confirmation-to-death delay. pmf[j] is the probability the
/// outcome is known j days after confirmation; sums to 1 after truncation.
struct DelayModel {
    double mean_days = 13.0;
    double sd_days = 12.7;
    int max_horizon = 120;
    std::vector<double> pmf;
};

/// Reference deaths/cases pair the under-reporting ratio is measured against.
struct Baseline {
    std::int64_t deaths = 1023;
    std::int64_t cases = 74130;

    double cfr() const { return double(deaths) / double(cases); }
};

// --- response validation ---------------------------------------------------

enum class RejectCode {
    BadDate,
    UnknownCountry,
    BadField,
    NegativeValue,
    ZeroReach,
    CountExceedsReach,
};

struct Reject {
    RejectCode code;
    std::string detail;
};

/// Candidate record as read from a CSV row, before validation.
struct RawResponse {
    std::string date;
    std::string country;
    std::string region;  // empty = country-wide
    std::string reach;
    std::string count;
};

namespace detail {
inline std::optional<std::int64_t> parse_int64(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}
}  // namespace detail

/// Checks every type invariant; returns the response or a structured
/// rejection naming the violated rule.
inline std::variant<SurveyResponse, Reject> validate_response(const RawResponse& raw) {
    auto date = parse_date(raw.date);
    if (!date) return Reject{RejectCode::BadDate, "unparseable date '" + raw.date + "'"};
    if (!is_country_code(raw.country))
        return Reject{RejectCode::UnknownCountry, "unknown country code '" + raw.country + "'"};
    auto reach = detail::parse_int64(raw.reach);
    if (!reach) return Reject{RejectCode::BadField, "unparseable reach '" + raw.reach + "'"};
    auto count = detail::parse_int64(raw.count);
    if (!count) return Reject{RejectCode::BadField, "unparseable count '" + raw.count + "'"};
    if (*reach < 0 || *count < 0)
        return Reject{RejectCode::NegativeValue, "negative reach or count"};
    if (*reach == 0)
        return Reject{RejectCode::ZeroReach, "zero reach carries no information"};
    if (*count > *reach)
        return Reject{RejectCode::CountExceedsReach, "count exceeds reach"};
    SurveyResponse r;
    r.date = *date;
    r.country = raw.country;
    if (!raw.region.empty()) r.region = raw.region;
    r.reach = *reach;
    r.count = *count;
    return r;
}

}  // namespace episcale
