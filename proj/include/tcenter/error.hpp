#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace tcenter {

// Stable machine-readable codes; the API error body uses code_name().
enum class ErrorCode { validation, not_found, conflict, auth, state, io };

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::json& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    nlohmann::json detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json detail = nullptr) {
    throw Error(code, message, std::move(detail));
}

} // namespace tcenter
