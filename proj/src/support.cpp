#include "tcenter/clock.hpp"
#include "tcenter/error.hpp"
#include "tcenter/ids.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/core.h>

namespace tcenter {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::auth: return "auth";
    case ErrorCode::state: return "state";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

std::string IdSequence::format(std::uint64_t n) const {
    return fmt::format("{}-{:08d}", prefix_, n);
}

namespace {

using namespace std::chrono;

} // namespace

std::string format_timestamp(Timestamp ts) {
    const sys_time<milliseconds> tp{milliseconds{ts.millis}};
    const auto day = floor<days>(tp);
    const year_month_day ymd{day};
    const hh_mm_ss hms{tp - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", int(ymd.year()),
                       unsigned(ymd.month()), unsigned(ymd.day()), hms.hours().count(),
                       hms.minutes().count(), hms.seconds().count(),
                       hms.subseconds().count());
}

Timestamp parse_timestamp(std::string_view text) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
    int consumed = 0;
    const std::string buf(text);
    if (text.size() != 24 ||
        std::sscanf(buf.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u.%3uZ%n", &y, &mo, &d, &h, &mi, &s, &ms,
                    &consumed) != 7 ||
        consumed != 24) {
        fail(ErrorCode::validation, fmt::format("malformed timestamp '{}'", text));
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        fail(ErrorCode::validation, fmt::format("malformed timestamp '{}'", text));
    }
    const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
    return Timestamp{tp.time_since_epoch().count()};
}

Clock system_clock() {
    return [] {
        const auto now = time_point_cast<milliseconds>(std::chrono::system_clock::now());
        return Timestamp{now.time_since_epoch().count()};
    };
}

} // namespace tcenter
