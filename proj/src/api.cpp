#include "tcenter/api.hpp"

#include <charconv>
#include <csignal>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>
#include <pthread.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;
using httplib::Request;
using httplib::Response;

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::validation: return 400;
    case ErrorCode::auth: return 401;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::state: return 409;
    case ErrorCode::io: return 500;
    }
    return 500;
}

namespace {

void send_json(Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(Response& res, int status, std::string_view code, std::string_view message,
                const json& detail = nullptr) {
    json err{{"code", code}, {"message", message}};
    if (!detail.is_null()) err["detail"] = detail;
    send_json(res, json{{"error", std::move(err)}}, status);
}

json body_of(const Request& req) {
    if (req.body.empty()) return json::object();
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) fail(ErrorCode::validation, "request body must be a JSON object");
        return j;
    } catch (const json::parse_error&) {
        fail(ErrorCode::validation, "request body is not valid JSON");
    }
}

std::string required(const json& body, const char* key) {
    const auto it = body.find(key);
    if (it == body.end() || !it->is_string()) {
        fail(ErrorCode::validation, fmt::format("field '{}' must be a string", key),
             {{"field", key}});
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
    const auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        fail(ErrorCode::validation, fmt::format("field '{}' must be a string", key),
             {{"field", key}});
    }
    return it->get<std::string>();
}

std::string query(const Request& req, const char* key) {
    if (!req.has_param(key)) {
        fail(ErrorCode::validation, fmt::format("query parameter '{}' is required", key),
             {{"field", key}});
    }
    return req.get_param_value(key);
}

std::uint64_t parse_u64(std::string_view text, const char* field) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(ErrorCode::validation, fmt::format("'{}' must be a non-negative integer", field),
             {{"field", field}});
    }
    return v;
}

json session_json(const Session& s) {
    return json{{"token", s.token}, {"member_id", s.member_id},
                {"expires_at", format_timestamp(s.expires_at)}};
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

struct Forbidden {};

} // namespace

struct ApiServer::Impl {
    TranslationCenter& center;
    std::filesystem::path docs_dir;
    httplib::Server server;
    std::function<void(const std::string&)> access_log;

    Impl(TranslationCenter& c, std::filesystem::path docs) : center(c), docs_dir(std::move(docs)) {
        routes();
    }

    std::string member_of(const Request& req) const {
        const auto header = req.get_header_value("Authorization");
        constexpr std::string_view prefix = "Bearer ";
        if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
            fail(ErrorCode::auth, "a session token is required");
        }
        return center.authenticate(std::string_view(header).substr(prefix.size()));
    }

    std::string admin_of(const Request& req) const {
        auto member = member_of(req);
        if (!center.is_admin(member)) throw Forbidden{};
        return member;
    }

    // Wraps a handler with uniform error reporting.
    template <typename F>
    httplib::Server::Handler wrap(F handler) {
        return [handler = std::move(handler)](const Request& req, Response& res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                send_error(res, http_status(e.code()), code_name(e.code()), e.what(), e.detail());
            } catch (const Forbidden&) {
                send_error(res, 403, "auth", "administrator role required",
                           {{"required_role", "admin"}});
            }
        };
    }

    void routes();
};

void ApiServer::Impl::routes() {
    auto& s = server;
    auto& c = center;

    s.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, "io", what);
    });
    s.set_logger([this](const Request& req, const Response& res) {
        if (access_log) access_log(fmt::format("{} {} {}", req.method, req.path, res.status));
    });

    // languages and progress
    s.Get("/api/languages", wrap([&c](const Request&, Response& res) {
              send_json(res, c.options().languages);
          }));
    s.Get("/api/progress", wrap([&c](const Request&, Response& res) {
              json out = json::array();
              for (const auto& l : c.options().languages) out.push_back(c.progress(l.code));
              send_json(res, out);
          }));
    s.Get("/api/progress/:lang", wrap([&c](const Request& req, Response& res) {
              send_json(res, c.progress(req.path_params.at("lang")));
          }));

    // items
    s.Get("/api/items", wrap([&c](const Request& req, Response& res) {
              const auto lang = query(req, "lang");
              const auto filter = parse_item_filter(
                  req.has_param("filter") ? req.get_param_value("filter") : "all");
              const auto order = parse_item_order(
                  req.has_param("order") ? req.get_param_value("order") : "priority");
              if (!filter) fail(ErrorCode::validation, "filter must be untranslated|translated|all");
              if (!order) fail(ErrorCode::validation, "order must be priority|id");
              send_json(res, c.list_items(lang, *filter, *order));
          }));
    s.Get("/api/items/:id", wrap([&c](const Request& req, Response& res) {
              const Item item = c.item(req.path_params.at("id"));
              json out{{"item", item}, {"page", nullptr}};
              if (auto page = c.page(item.page_id)) out["page"] = *page;
              send_json(res, out);
          }));
    s.Get("/api/items/:id/context", wrap([&c](const Request& req, Response& res) {
              const auto& id = req.path_params.at("id");
              const auto lang = query(req, "lang");
              const Item item = c.item(id);
              json out{{"item_id", id},
                       {"lang", lang},
                       {"category", to_string(item.category)},
                       {"page_id", item.page_id},
                       {"snippet", c.context_snippet(id, lang)},
                       {"preview", c.page_preview(id, lang)}};
              if (auto page = c.page(item.page_id)) {
                  out["page_url"] = page->url;
                  out["page_title"] = page->title;
              }
              send_json(res, out);
          }));
    s.Post("/api/items/:id/view", wrap([this, &c](const Request& req, Response& res) {
               member_of(req);
               send_json(res, {{"view_count", c.record_view(req.path_params.at("id"))}});
           }));
    s.Get("/api/items/:id/translations", wrap([&c](const Request& req, Response& res) {
              const auto& id = req.path_params.at("id");
              const auto lang = query(req, "lang");
              const auto current = c.current_translation(id, lang);
              send_json(res, {{"item_id", id},
                              {"lang", lang},
                              {"current", current ? json(*current) : json(nullptr)},
                              {"history", c.translation_history(id, lang)}});
          }));
    s.Post("/api/items/:id/translations", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               std::optional<std::uint32_t> base;
               if (const auto it = body.find("base_version"); it != body.end() && !it->is_null()) {
                   if (!it->is_number_unsigned()) {
                       fail(ErrorCode::validation, "base_version must be a non-negative integer",
                            {{"field", "base_version"}});
                   }
                   base = it->get<std::uint32_t>();
               }
               const auto t = c.submit_translation(req.path_params.at("id"), required(body, "lang"),
                                                   required(body, "text"), member, base);
               send_json(res, t, 201);
           }));
    s.Get("/api/items/:id/comments", wrap([&c](const Request& req, Response& res) {
              send_json(res, c.comments(req.path_params.at("id"), query(req, "lang")));
          }));
    s.Post("/api/items/:id/comments", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto lang = req.has_param("lang") ? req.get_param_value("lang")
                                                       : required(body, "lang");
               send_json(res,
                         c.add_comment(req.path_params.at("id"), lang, member,
                                       required(body, "body"), optional_string(body, "parent_id")),
                         201);
           }));

    // workflow
    s.Post("/api/requests", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto item = optional_string(body, "item_id");
               const auto page = optional_string(body, "page_id");
               if (item.has_value() == page.has_value()) {
                   fail(ErrorCode::validation, "give exactly one of item_id and page_id");
               }
               const RequestTarget target{item ? RequestTarget::Kind::item
                                               : RequestTarget::Kind::page,
                                          item ? *item : *page};
               send_json(res, c.request_translation(target, required(body, "lang"), member));
           }));
    s.Get("/api/binder", wrap([this, &c](const Request& req, Response& res) {
              send_json(res, c.binder_of(member_of(req)));
          }));
    s.Get("/api/random", wrap([&c](const Request& req, Response& res) {
              std::uint64_t seed = 0;
              if (req.has_param("seed")) {
                  seed = parse_u64(req.get_param_value("seed"), "seed");
              } else {
                  seed = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
              }
              send_json(res, c.next_random_item(query(req, "lang"), seed));
          }));

    // reviews
    s.Get("/api/translations/:tid/reviews", wrap([&c](const Request& req, Response& res) {
              send_json(res, c.reviews(req.path_params.at("tid")));
          }));
    s.Post("/api/translations/:tid/reviews", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               if (!body.contains("rubric")) {
                   fail(ErrorCode::validation, "field 'rubric' is required", {{"field", "rubric"}});
               }
               send_json(res,
                         c.submit_review(req.path_params.at("tid"), member,
                                         rubric_from_json(body["rubric"]),
                                         optional_string(body, "body")),
                         201);
           }));
    s.Get("/api/quality/:item/:lang", wrap([&c](const Request& req, Response& res) {
              const auto& item = req.path_params.at("item");
              const auto& lang = req.path_params.at("lang");
              c.item(item);
              const auto current = c.current_translation(item, lang);
              send_json(res, {{"item_id", item},
                              {"lang", lang},
                              {"translation_id", current ? json(current->translation_id)
                                                         : json(nullptr)},
                              {"review_count",
                               current ? c.reviews(current->translation_id).size() : 0},
                              {"quality", c.quality(item, lang)}});
          }));

    // glossary
    s.Get("/api/glossary", wrap([&c](const Request& req, Response& res) {
              if (req.has_param("term")) {
                  const auto entry = c.glossary_lookup(req.get_param_value("term"));
                  if (!entry) fail(ErrorCode::not_found, "unknown glossary term");
                  send_json(res, *entry);
                  return;
              }
              send_json(res, c.glossary());
          }));
    s.Post("/api/glossary", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               GlossaryUpsert change{required(body, "term"),
                                     optional_string(body, "definition").value_or(""),
                                     required(body, "lang"),
                                     required(body, "text"),
                                     optional_string(body, "region_note"),
                                     optional_string(body, "poll_id")};
               send_json(res, c.glossary_upsert(change, member));
           }));
    s.Post("/api/glossary/:term/comments", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto comment =
                   c.glossary_comment(req.path_params.at("term"), member, required(body, "body"),
                                      optional_string(body, "parent_id"));
               send_json(res,
                         {{"comment_id", comment.comment_id},
                          {"author_id", comment.author_id},
                          {"body", comment.body},
                          {"created_at", format_timestamp(comment.created_at)},
                          {"parent_id", comment.parent_id ? json(*comment.parent_id)
                                                          : json(nullptr)}},
                         201);
           }));

    // forums
    s.Get("/api/forums", wrap([&c](const Request& req, Response& res) {
              std::optional<ForumKind> kind;
              if (req.has_param("kind")) {
                  kind = parse_forum_kind(req.get_param_value("kind"));
                  if (!kind) fail(ErrorCode::validation, "unknown forum kind");
              }
              std::optional<std::string> lang;
              if (req.has_param("lang")) lang = req.get_param_value("lang");
              send_json(res, c.forum_threads(kind, lang ? std::optional<std::string_view>(*lang)
                                                        : std::nullopt));
          }));
    s.Post("/api/forums", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto kind = parse_forum_kind(required(body, "kind"));
               if (!kind) {
                   fail(ErrorCode::validation, "kind must be general|help|suggestion|language",
                        {{"field", "kind"}});
               }
               const NewThread opening{*kind, optional_string(body, "lang"), required(body, "title")};
               const auto [thread, post] = c.create_thread(opening, member, required(body, "body"));
               send_json(res, {{"thread", thread}, {"post", post}}, 201);
           }));
    s.Get("/api/forums/:thread/posts", wrap([&c](const Request& req, Response& res) {
              const auto& id = req.path_params.at("thread");
              const auto posts = c.forum_posts(id);
              send_json(res, {{"thread", *c.forum_thread(id)}, {"posts", posts}});
          }));
    s.Post("/api/forums/:thread/posts", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               send_json(res, c.forum_post(req.path_params.at("thread"), member,
                                           required(body, "body")),
                         201);
           }));

    // polls
    s.Get("/api/polls", wrap([&c](const Request&, Response& res) { send_json(res, c.polls()); }));
    s.Get("/api/polls/:id", wrap([&c](const Request& req, Response& res) {
              send_json(res, c.poll(req.path_params.at("id")));
          }));
    s.Post("/api/polls", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto options = body.find("options");
               if (options == body.end() || !options->is_array() ||
                   !std::all_of(options->begin(), options->end(),
                                [](const json& o) { return o.is_string(); })) {
                   fail(ErrorCode::validation, "options must be an array of strings",
                        {{"field", "options"}});
               }
               send_json(res,
                         c.create_poll(required(body, "question"),
                                       options->get<std::vector<std::string>>(),
                                       optional_string(body, "lang"), member),
                         201);
           }));
    s.Post("/api/polls/:id/votes", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto option = body.find("option");
               if (option == body.end() || !option->is_number_integer() ||
                   option->get<std::int64_t>() < 0) {
                   fail(ErrorCode::validation, "option must be a non-negative integer",
                        {{"field", "option"}});
               }
               const auto& id = req.path_params.at("id");
               const auto tally = c.poll_vote(id, member, option->get<std::size_t>());
               std::size_t voters = 0;
               for (auto n : tally) voters += n;
               send_json(res, {{"poll_id", id}, {"tally", tally}, {"voters", voters}});
           }));
    s.Post("/api/polls/:id/close", wrap([this, &c](const Request& req, Response& res) {
               admin_of(req);
               send_json(res, c.close_poll(req.path_params.at("id")));
           }));

    // members and sessions
    s.Get("/api/directory", wrap([&c](const Request&, Response& res) {
              send_json(res, c.directory_list());
          }));
    s.Post("/api/members", wrap([&c](const Request& req, Response& res) {
               const json body = body_of(req);
               std::vector<std::string> languages;
               if (const auto it = body.find("languages"); it != body.end()) {
                   try {
                       languages = it->get<std::vector<std::string>>();
                   } catch (const json::exception&) {
                       fail(ErrorCode::validation, "languages must be an array of strings",
                            {{"field", "languages"}});
                   }
               }
               const bool opt_in = body.value("contact_opt_in", false);
               const auto r = c.register_member(required(body, "display_name"),
                                                std::move(languages), opt_in,
                                                optional_string(body, "contact_info").value_or(""));
               json member = r.member;
               member["contact_info"] = r.member.contact_info; // the owner may see it
               send_json(res,
                         {{"member", member},
                          {"session", session_json(r.session)},
                          {"login_key", r.login_key},
                          {"is_admin", c.is_admin(r.member.member_id)}},
                         201);
           }));
    s.Post("/api/members/me/contact", wrap([this, &c](const Request& req, Response& res) {
               const auto member = member_of(req);
               const json body = body_of(req);
               const auto it = body.find("contact_opt_in");
               if (it == body.end() || !it->is_boolean()) {
                   fail(ErrorCode::validation, "contact_opt_in must be a boolean",
                        {{"field", "contact_opt_in"}});
               }
               send_json(res, c.set_contact(member, it->get<bool>(),
                                            optional_string(body, "contact_info").value_or("")));
           }));
    s.Post("/api/sessions", wrap([&c](const Request& req, Response& res) {
               const json body = body_of(req);
               const auto session =
                   c.login(required(body, "display_name"), required(body, "login_key"));
               send_json(res, session_json(session), 201);
           }));

    // administration
    s.Get("/api/export/:lang", wrap([this, &c](const Request& req, Response& res) {
              admin_of(req);
              res.set_content(serialize(c.export_translations(req.path_params.at("lang"))),
                              "application/json; charset=utf-8");
          }));
    s.Post("/api/import", wrap([this, &c](const Request& req, Response& res) {
               const auto admin = admin_of(req);
               send_json(res, c.import_document(req.body, admin));
           }));

    // static help documents
    for (const std::string name : {"tutorial", "faq"}) {
        s.Get("/docs/" + name, wrap([this, name](const Request&, Response& res) {
                  const auto text = read_file(docs_dir / (name + ".md"));
                  if (!text) fail(ErrorCode::not_found, fmt::format("no {} document", name));
                  res.set_content(*text, "text/markdown; charset=utf-8");
              }));
    }
}

ApiServer::ApiServer(TranslationCenter& center, std::filesystem::path docs_dir)
    : impl_(std::make_unique<Impl>(center, std::move(docs_dir))) {}

ApiServer::~ApiServer() = default;

void ApiServer::set_access_log(std::function<void(const std::string&)> sink) {
    impl_->access_log = std::move(sink);
}

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) fail(ErrorCode::io, fmt::format("cannot bind {}", host));
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        fail(ErrorCode::io, fmt::format("cannot bind {}:{} (port busy?)", host, port),
             {{"host", host}, {"port", port}});
    }
    return port;
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop() { impl_->server.stop(); }

int serve(const Config& config, std::ostream& out, std::ostream& err) {
    // Block the shutdown signals in every thread; one thread waits for them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    DataDirectory storage = DataDirectory::open(config.data_dir);
    TranslationCenter center(config.center, system_clock(), storage);
    ApiServer api(center, config.docs_dir);
    std::mutex log_mutex;
    api.set_access_log([&err, &log_mutex](const std::string& line) {
        std::lock_guard lock(log_mutex);
        err << line << '\n';
    });
    const int port = api.bind(config.host, config.port);
    out << "listening on " << config.host << ':' << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        api.stop();
    });
    api.listen();
    // listen() can also return on its own (socket error); wake the waiter then
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    center.flush();
    out << "stopped" << std::endl;
    return 0;
}

} // namespace tcenter
