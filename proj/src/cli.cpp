#include "tcenter/cli.hpp"

#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "tcenter/api.hpp"
#include "tcenter/center.hpp"
#include "tcenter/config.hpp"
#include "tcenter/error.hpp"

namespace tcenter {

namespace {

constexpr const char* kStatsGrammar = R"(stats output grammar (one record per line):
  items <TOTAL>
  <LANG> <TRANSLATED>/<TOTAL> <PERCENT>%
PERCENT has exactly one decimal, rounded half-up; languages appear in config order.)";

// Author id recorded on translations imported from the command line.
constexpr const char* kCliAuthor = "cli";

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, fmt::format("cannot read '{}'", path), {{"path", path}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_text(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, fmt::format("cannot write '{}'", path), {{"path", path}});
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::io, fmt::format("cannot write '{}'", path), {{"path", path}});
}

int exit_code(ErrorCode code) {
    return code == ErrorCode::io || code == ErrorCode::state ? kExitIo : kExitValidation;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Translation center administration"};
    app.footer(kStatsGrammar);
    app.require_subcommand(1);

    std::string config_path = "tcenter.json";
    std::string file, lang, out_path;

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
    serve_cmd->add_option("--config", config_path, "Service configuration file")->required();

    auto* import_cmd = app.add_subcommand("import", "Import a catalog or translation document");
    import_cmd->add_option("--file", file, "Document to import")->required();
    import_cmd->add_option("--config", config_path, "Service configuration file");

    auto* export_cmd = app.add_subcommand("export", "Export current translations for a language");
    export_cmd->add_option("--lang", lang, "Target language code")->required();
    export_cmd->add_option("--out", out_path, "Output file ('-' for stdout)")->required();
    export_cmd->add_option("--config", config_path, "Service configuration file");

    auto* stats_cmd = app.add_subcommand("stats", "Print per-language progress meters");
    stats_cmd->add_option("--lang", lang, "Only this language");
    stats_cmd->add_option("--config", config_path, "Service configuration file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        const Config config = load_config(config_path);
        if (*serve_cmd) return serve(config, out, err);

        DataDirectory storage = DataDirectory::open(config.data_dir);
        TranslationCenter center(config.center, system_clock(), storage);

        if (*import_cmd) {
            const auto report = center.import_document(read_text(file), kCliAuthor);
            out << report.describe() << '\n';
            return kExitOk;
        }
        if (*export_cmd) {
            const std::string bytes = serialize(center.export_translations(lang));
            if (out_path == "-") {
                out << bytes;
            } else {
                write_text(out_path, bytes);
            }
            return kExitOk;
        }
        if (*stats_cmd) {
            if (!lang.empty()) (void)center.language(lang);
            out << "items " << center.list_items(config.center.languages.front().code,
                                                 ItemFilter::all, ItemOrder::id)
                                   .size()
                << '\n';
            for (const auto& l : config.center.languages) {
                if (!lang.empty() && l.code != lang) continue;
                const auto p = center.progress(l.code);
                out << fmt::format("{} {}/{} {}%\n", l.code, p.translated_count, p.total_count,
                                   p.percent);
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitValidation;
}

} // namespace tcenter
