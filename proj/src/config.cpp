#include "tcenter/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T field(const json& obj, const char* key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::validation, fmt::format("config: field '{}' has the wrong type", key),
             {{"field", key}});
    }
}

double weight(const json& obj, const char* key, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) {
        fail(ErrorCode::validation, fmt::format("config: weight '{}' must be a number", key),
             {{"field", key}});
    }
    return it->get<double>();
}

void parse_listen(std::string_view listen, Config& cfg) {
    const auto colon = listen.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        fail(ErrorCode::validation, fmt::format("config: listen '{}' is not HOST:PORT", listen),
             {{"field", "listen"}});
    }
    unsigned port = 0;
    const auto digits = listen.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535) {
        fail(ErrorCode::validation, fmt::format("config: bad port in '{}'", listen),
             {{"field", "listen"}});
    }
    cfg.host = std::string(listen.substr(0, colon));
    cfg.port = static_cast<std::uint16_t>(port);
}

} // namespace

void Config::validate() const {
    center.validate();
    if (data_dir.empty()) fail(ErrorCode::validation, "config: data_dir is empty");
}

Config parse_config(std::string_view text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::validation, fmt::format("config: malformed JSON: {}", e.what()));
    }
    if (!root.is_object()) fail(ErrorCode::validation, "config: expected a JSON object");

    Config cfg;
    parse_listen(field<std::string>(root, "listen", "127.0.0.1:8080"), cfg);
    cfg.data_dir = base_dir / field<std::string>(root, "data_dir", "data");
    cfg.docs_dir = base_dir / field<std::string>(root, "docs_dir", "docs");

    CenterOptions& c = cfg.center;
    c.source_lang = field<std::string>(root, "source_lang", "en");
    c.auto_forum_mirror = field<bool>(root, "auto_forum_mirror", true);
    c.session_ttl = std::chrono::seconds(field<std::int64_t>(root, "session_ttl_seconds", 86400));
    c.admins = field<std::vector<std::string>>(root, "admins", {});
    if (const auto w = root.find("weights"); w != root.end()) {
        if (!w->is_object()) fail(ErrorCode::validation, "config: weights must be an object");
        c.weights.views = weight(*w, "views", c.weights.views);
        c.weights.requests = weight(*w, "requests", c.weights.requests);
        c.weights.quality = weight(*w, "quality", c.weights.quality);
        c.weights.untranslated = weight(*w, "untranslated", c.weights.untranslated);
    }
    if (const auto langs = root.find("languages"); langs != root.end()) {
        if (!langs->is_array()) fail(ErrorCode::validation, "config: languages must be an array");
        for (const auto& l : *langs) {
            if (!l.is_object()) fail(ErrorCode::validation, "config: bad language entry");
            c.languages.push_back(Language{field<std::string>(l, "code", ""),
                                           field<std::string>(l, "name", ""),
                                           field<std::vector<std::string>>(l, "palette", {})});
        }
    }
    cfg.validate();
    return cfg;
}

Config load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        fail(ErrorCode::io, fmt::format("cannot read config '{}'", file.string()),
             {{"path", file.string()}});
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

} // namespace tcenter
