#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <string>

#include "tcenter/center.hpp"
#include "tcenter/config.hpp"
#include "tcenter/error.hpp"

namespace tcenter {

/// JSON-over-HTTP interface to a TranslationCenter.
///
/// Reads are public. Mutations need "Authorization: Bearer <token>" from
/// POST /api/members or POST /api/sessions; import, export and closing polls
/// additionally need an administrator. Failures are reported as
/// {"error": {"code", "message", "detail"?}}.
class ApiServer {
public:
    ApiServer(TranslationCenter& center, std::filesystem::path docs_dir);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Logs "METHOD path status" per request; headers are never logged.
    void set_access_log(std::function<void(const std::string&)> sink);

    /// Binds and returns the bound port (port 0 picks a free one). Throws Error(io).
    int bind(const std::string& host, int port);
    /// Serves until stop(); requires a prior bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code (validation 400, auth 401, not_found 404,
/// conflict/state 409, io 500).
int http_status(ErrorCode code) noexcept;

/// Runs the service until SIGINT/SIGTERM: locks the data directory, restores
/// state, prints "listening on HOST:PORT", serves, flushes on shutdown.
/// Returns a process exit code.
int serve(const Config& config, std::ostream& out, std::ostream& err);

} // namespace tcenter
