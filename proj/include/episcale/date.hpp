// Calendar dates at daily resolution (ISO-8601 YYYY-MM-DD, no time zones).

#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace episcale {

using Date = std::chrono::sys_days;

namespace detail {
inline bool all_digits(std::string_view s) {
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return !s.empty();
}
}  // namespace detail

/// Parses "YYYY-MM-DD". Rejects malformed strings and invalid civil dates.
inline std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto ys = s.substr(0, 4), ms = s.substr(5, 2), ds = s.substr(8, 2);
    if (!detail::all_digits(ys) || !detail::all_digits(ms) || !detail::all_digits(ds))
        return std::nullopt;
    int y = (ys[0] - '0') * 1000 + (ys[1] - '0') * 100 + (ys[2] - '0') * 10 + (ys[3] - '0');
    unsigned m = unsigned((ms[0] - '0') * 10 + (ms[1] - '0'));
    unsigned d = unsigned((ds[0] - '0') * 10 + (ds[1] - '0'));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

inline std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

/// a - b in whole days.
inline long day_diff(Date a, Date b) { return (a - b).count(); }

}  // namespace episcale
