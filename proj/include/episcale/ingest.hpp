// Parsers for the toolkit's file formats:
//   responses CSV:        date,country,region,reach,count   (region may be empty)
//   official series CSV:  date,country,new_cases,new_deaths (one country per file)
//   region table CSV:     country,region,population         (empty region = national total)
//   serology truth CSV:   region,prevalence

#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "episcale/csv.hpp"
#include "episcale/model.hpp"

namespace episcale {

struct ResponseReject {
    long line = 0;
    std::string reason;
};

/// Parsed responses plus everything that was rejected. rows + rejects
/// account for every non-blank data line of the input.
struct ResponseFile {
    std::vector<SurveyResponse> rows;
    std::vector<ResponseReject> rejects;
};

/// Every well-formed row goes through validate_response. In strict mode the
/// first bad row aborts with a ParseError; otherwise bad rows are collected.
inline ResponseFile parse_responses(std::istream& in, bool strict = false) {
    static constexpr std::string_view kHeader[] = {"date", "country", "region", "reach", "count"};
    auto table = read_csv(in, kHeader);

    ResponseFile out;
    auto reject = [&](long line, const std::string& reason) {
        if (strict) throw ParseError(line, reason);
        out.rejects.push_back({line, reason});
    };

    for (const auto& row : table.malformed) reject(row.line, "wrong number of fields");
    for (const auto& row : table.rows) {
        RawResponse raw{row.fields[0], row.fields[1], row.fields[2], row.fields[3], row.fields[4]};
        auto result = validate_response(raw);
        if (auto* r = std::get_if<SurveyResponse>(&result))
            out.rows.push_back(std::move(*r));
        else
            reject(row.line, std::get<Reject>(result).detail);
    }
    // keep rejects in file order (malformed rows were collected first)
    std::sort(out.rejects.begin(), out.rejects.end(),
              [](const ResponseReject& a, const ResponseReject& b) { return a.line < b.line; });
    return out;
}

/// Canonical serialization; parse_responses(write_responses(rows)) round-trips.
inline void write_responses(std::ostream& os, std::span<const SurveyResponse> rows) {
    os << "date,country,region,reach,count\n";
    for (const auto& r : rows)
        os << format_date(r.date) << ',' << r.country << ',' << (r.region ? *r.region : "") << ','
           << r.reach << ',' << r.count << '\n';
}

struct OfficialSeries {
    std::string country;
    std::vector<OfficialSeriesPoint> points;  // dense daily grid, date-sorted
};

/// Rejects negative daily counts (real-world correction rows must be cleaned
/// by the caller) and duplicate dates. Gap days are filled with zeros so the
/// delay convolution sees a contiguous grid.
inline OfficialSeries parse_official_series(std::istream& in) {
    static constexpr std::string_view kHeader[] = {"date", "country", "new_cases", "new_deaths"};
    auto table = read_csv(in, kHeader);
    if (!table.malformed.empty())
        throw ParseError(table.malformed.front().line, "wrong number of fields");

    OfficialSeries out;
    std::map<Date, OfficialSeriesPoint> by_date;
    std::map<Date, long> line_of;
    for (const auto& row : table.rows) {
        auto date = parse_date(row.fields[0]);
        if (!date) throw ParseError(row.line, "unparseable date '" + row.fields[0] + "'");
        if (out.country.empty())
            out.country = row.fields[1];
        else if (out.country != row.fields[1])
            throw ParseError(row.line, "mixed countries in one series ('" + out.country + "' vs '" +
                                           row.fields[1] + "')");
        auto cases = detail::parse_int64(row.fields[2]);
        auto deaths = detail::parse_int64(row.fields[3]);
        if (!cases || !deaths) throw ParseError(row.line, "unparseable count");
        if (*cases < 0 || *deaths < 0) throw ParseError(row.line, "negative daily count");
        if (!by_date.emplace(*date, OfficialSeriesPoint{*date, *cases, *deaths}).second)
            throw ParseError(row.line, "duplicate date " + row.fields[0] + " (first at line " +
                                           std::to_string(line_of[*date]) + ")");
        line_of[*date] = row.line;
    }
    if (by_date.empty()) return out;

    Date d = by_date.begin()->first;
    const Date last = by_date.rbegin()->first;
    for (; d <= last; d += std::chrono::days{1}) {
        auto it = by_date.find(d);
        out.points.push_back(it != by_date.end() ? it->second : OfficialSeriesPoint{d, 0, 0});
    }
    return out;
}

/// One country per table: the empty-region row carries the national
/// population, every other row one region.
inline CountryInfo parse_region_table(std::istream& in) {
    static constexpr std::string_view kHeader[] = {"country", "region", "population"};
    auto table = read_csv(in, kHeader);
    if (!table.malformed.empty())
        throw ParseError(table.malformed.front().line, "wrong number of fields");

    CountryInfo out;
    bool have_national = false;
    for (const auto& row : table.rows) {
        const std::string& country = row.fields[0];
        if (!is_country_code(country))
            throw ParseError(row.line, "unknown country code '" + country + "'");
        if (out.country.empty())
            out.country = country;
        else if (out.country != country)
            throw ParseError(row.line, "mixed countries in one region table");
        auto pop = detail::parse_int64(row.fields[2]);
        if (!pop || *pop < 1) throw ParseError(row.line, "population must be a positive integer");
        if (row.fields[1].empty()) {
            if (have_national) throw ParseError(row.line, "duplicate national row");
            have_national = true;
            out.population = *pop;
        } else {
            if (out.find_region(row.fields[1]))
                throw ParseError(row.line, "duplicate region '" + row.fields[1] + "'");
            out.regions.push_back({row.fields[1], country, *pop});
        }
    }
    if (!have_national) throw ParseError(1, "missing national row (empty region column)");
    std::int64_t region_sum = 0;
    for (const auto& r : out.regions) region_sum += r.population;
    if (region_sum > out.population)
        throw ParseError(1, "region populations exceed the national total");
    std::sort(out.regions.begin(), out.regions.end(),
              [](const RegionInfo& a, const RegionInfo& b) { return a.region < b.region; });
    return out;
}

struct RegionPrevalence {
    std::string region;
    double prevalence = 0;
};

/// Regional ground-truth prevalences from a serology study.
inline std::vector<RegionPrevalence> parse_serology_truth(std::istream& in) {
    static constexpr std::string_view kHeader[] = {"region", "prevalence"};
    auto table = read_csv(in, kHeader);
    if (!table.malformed.empty())
        throw ParseError(table.malformed.front().line, "wrong number of fields");

    std::vector<RegionPrevalence> out;
    for (const auto& row : table.rows) {
        if (row.fields[0].empty()) throw ParseError(row.line, "empty region code");
        double p = 0;
        try {
            std::size_t pos = 0;
            p = std::stod(row.fields[1], &pos);
            if (pos != row.fields[1].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError(row.line, "unparseable prevalence '" + row.fields[1] + "'");
        }
        if (p < 0.0 || p > 1.0) throw ParseError(row.line, "prevalence outside [0,1]");
        for (const auto& seen : out)
            if (seen.region == row.fields[0])
                throw ParseError(row.line, "duplicate region '" + row.fields[0] + "'");
        out.push_back({row.fields[0], p});
    }
    return out;
}

}  // namespace episcale
