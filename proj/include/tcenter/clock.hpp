#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace tcenter {

// Milliseconds since the Unix epoch, UTC.
struct Timestamp {
    std::int64_t millis = 0;
    auto operator<=>(const Timestamp&) const = default;
};

// "2026-10-16T08:30:00.250Z"
std::string format_timestamp(Timestamp ts);
// Accepts the format produced by format_timestamp; throws Error(validation) otherwise.
Timestamp parse_timestamp(std::string_view text);

using Clock = std::function<Timestamp()>;

Clock system_clock();

} // namespace tcenter
