#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "tcenter/center.hpp"

namespace tcenter {

/// Service configuration, read from a JSON file:
///
///   {
///     "listen": "127.0.0.1:8080",
///     "data_dir": "data",
///     "docs_dir": "docs",
///     "source_lang": "en",
///     "auto_forum_mirror": true,
///     "session_ttl_seconds": 86400,
///     "admins": ["admin"],
///     "weights": {"views": 1.0, "requests": 2.0, "quality": 1.0, "untranslated": 3.0},
///     "languages": [{"code": "es", "name": "Spanish", "palette": ["á", "ñ", "¿"]}]
///   }
///
/// Relative paths are resolved against the directory holding the file.
struct Config {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080; // 0 picks a free port
    std::filesystem::path data_dir = "data";
    std::filesystem::path docs_dir = "docs";
    CenterOptions center;

    void validate() const;
};

Config parse_config(std::string_view text, const std::filesystem::path& base_dir);
/// Throws Error(io) when the file cannot be read, Error(validation) when it is invalid.
Config load_config(const std::filesystem::path& file);

} // namespace tcenter
