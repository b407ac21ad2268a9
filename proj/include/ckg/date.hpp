#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "ckg/error.hpp"

namespace ckg {

/// Calendar date at day resolution, stored as days since 1970-01-01.
struct Date {
    std::int32_t days = 0;

    constexpr auto operator<=>(const Date&) const = default;

    constexpr Date plus_days(std::int32_t n) const { return Date{days + n}; }

    static Date from_ymd(int y, unsigned m, unsigned d) {
        using namespace std::chrono;
        year_month_day ymd{year{y}, month{m}, day{d}};
        if (!ymd.ok()) {
            fail(Errc::Date, "invalid calendar date " + std::to_string(y) + "-" +
                                 std::to_string(m) + "-" + std::to_string(d));
        }
        return Date{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
    }

    /// Parses strict ISO-8601 `YYYY-MM-DD`.
    static Date parse(std::string_view s) {
        auto digits = [&](std::size_t from, std::size_t len, int& out) {
            out = 0;
            for (std::size_t i = from; i < from + len; ++i) {
                if (s[i] < '0' || s[i] > '9') return false;
                out = out * 10 + (s[i] - '0');
            }
            return true;
        };
        int y = 0, m = 0, d = 0;
        if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !digits(0, 4, y) ||
            !digits(5, 2, m) || !digits(8, 2, d)) {
            fail(Errc::Date, "unparseable date '" + std::string(s) + "'");
        }
        return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    }

    std::string to_string() const {
        using namespace std::chrono;
        year_month_day ymd{sys_days{std::chrono::days{days}}};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }
};

} // namespace ckg
