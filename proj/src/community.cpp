#include "tcenter/community.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

Timestamp ts(const json& j, const char* key) { return parse_timestamp(j.at(key).get<std::string>()); }

constexpr std::string_view kForumKinds[] = {"general", "help", "suggestion", "language"};

} // namespace

// Glossary ------------------------------------------------------------------

std::string fold_term(std::string_view term) {
    std::string out(term);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void to_json(json& j, const GlossaryEntry& e) {
    json translations = json::object();
    for (const auto& [lang, variants] : e.translations) {
        json list = json::array();
        for (const auto& v : variants) {
            list.push_back({{"text", v.text},
                            {"region_note", opt(v.region_note)},
                            {"author_id", v.author_id},
                            {"created_at", format_timestamp(v.created_at)}});
        }
        translations[lang] = std::move(list);
    }
    json comments = json::array();
    for (const auto& c : e.comments) {
        comments.push_back({{"comment_id", c.comment_id},
                            {"author_id", c.author_id},
                            {"body", c.body},
                            {"created_at", format_timestamp(c.created_at)},
                            {"parent_id", opt(c.parent_id)}});
    }
    j = json{{"term", e.term},
             {"definition", e.definition},
             {"translations", std::move(translations)},
             {"comments", std::move(comments)},
             {"poll_id", opt(e.poll_id)},
             {"created_at", format_timestamp(e.created_at)}};
}

GlossaryEntry Glossary::upsert(const GlossaryUpsert& change, std::string_view author_id,
                               Timestamp now) {
    if (blank(change.term)) fail(ErrorCode::validation, "glossary term is empty", {{"field", "term"}});
    if (blank(change.text)) {
        fail(ErrorCode::validation, "glossary translation is empty", {{"field", "text"}});
    }
    if (change.lang.empty()) fail(ErrorCode::validation, "glossary lang is empty", {{"field", "lang"}});
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(fold_term(change.term));
    GlossaryEntry& entry = it->second;
    if (inserted) {
        entry.term = change.term;
        entry.created_at = now;
    }
    if (!change.definition.empty()) entry.definition = change.definition;
    if (change.poll_id) entry.poll_id = change.poll_id;
    auto& variants = entry.translations[change.lang];
    const bool known = std::any_of(variants.begin(), variants.end(), [&](const auto& v) {
        return v.text == change.text && v.region_note == change.region_note;
    });
    if (!known) {
        variants.push_back(
            GlossaryVariant{change.text, change.region_note, std::string(author_id), now});
    }
    return entry;
}

std::optional<GlossaryEntry> Glossary::lookup(std::string_view term) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(fold_term(term));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<GlossaryEntry> Glossary::entries() const {
    std::lock_guard lock(mutex_);
    std::vector<GlossaryEntry> out;
    for (const auto& [key, e] : entries_) out.push_back(e);
    return out;
}

GlossaryComment Glossary::add_comment(std::string_view term, std::string_view author_id,
                                      std::string_view body, std::optional<std::string> parent_id,
                                      Timestamp now) {
    if (blank(body)) fail(ErrorCode::validation, "comment body is empty", {{"field", "body"}});
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(fold_term(term));
    if (it == entries_.end()) {
        fail(ErrorCode::not_found, fmt::format("unknown glossary term '{}'", term));
    }
    auto& comments = it->second.comments;
    if (parent_id && std::none_of(comments.begin(), comments.end(), [&](const auto& c) {
            return c.comment_id == *parent_id;
        })) {
        fail(ErrorCode::not_found, fmt::format("no comment '{}' on term '{}'", *parent_id, term),
             {{"parent_id", *parent_id}});
    }
    comments.push_back(GlossaryComment{comment_ids_.next(), std::string(author_id),
                                       std::string(body), now, std::move(parent_id)});
    return comments.back();
}

json Glossary::snapshot() const {
    std::lock_guard lock(mutex_);
    json entries = json::array();
    for (const auto& [key, e] : entries_) entries.push_back(e);
    return json{{"entries", std::move(entries)}, {"last_comment_id", comment_ids_.last()}};
}

void Glossary::restore(const json& state) {
    std::lock_guard lock(mutex_);
    entries_.clear();
    for (const auto& j : state.at("entries")) {
        GlossaryEntry e;
        e.term = j.at("term").get<std::string>();
        e.definition = j.at("definition").get<std::string>();
        e.poll_id = opt_string(j, "poll_id");
        e.created_at = ts(j, "created_at");
        for (const auto& [lang, list] : j.at("translations").items()) {
            auto& variants = e.translations[lang];
            for (const auto& v : list) {
                variants.push_back(GlossaryVariant{v.at("text").get<std::string>(),
                                                   opt_string(v, "region_note"),
                                                   v.at("author_id").get<std::string>(),
                                                   ts(v, "created_at")});
            }
        }
        for (const auto& c : j.at("comments")) {
            e.comments.push_back(GlossaryComment{c.at("comment_id").get<std::string>(),
                                                 c.at("author_id").get<std::string>(),
                                                 c.at("body").get<std::string>(),
                                                 ts(c, "created_at"), opt_string(c, "parent_id")});
        }
        entries_.emplace(fold_term(e.term), std::move(e));
    }
    comment_ids_.reset(state.at("last_comment_id").get<std::uint64_t>());
}

// Forums ----------------------------------------------------------------------

std::string_view to_string(ForumKind kind) noexcept {
    return kForumKinds[static_cast<std::size_t>(kind)];
}

std::optional<ForumKind> parse_forum_kind(std::string_view text) noexcept {
    for (std::size_t i = 0; i < std::size(kForumKinds); ++i) {
        if (kForumKinds[i] == text) return static_cast<ForumKind>(i);
    }
    return std::nullopt;
}

void to_json(json& j, const ForumThread& t) {
    j = json{{"thread_id", t.thread_id},
             {"kind", to_string(t.kind)},
             {"lang", opt(t.lang)},
             {"title", t.title},
             {"author_id", t.author_id},
             {"created_at", format_timestamp(t.created_at)},
             {"item_id", opt(t.item_id)}};
}

void to_json(json& j, const ForumPost& p) {
    j = json{{"post_id", p.post_id},
             {"thread_id", p.thread_id},
             {"author_id", p.author_id},
             {"body", p.body},
             {"created_at", format_timestamp(p.created_at)}};
}

ForumPost Forums::append(Entry& entry, std::string_view author_id, std::string_view body,
                         Timestamp now) {
    // (created_at, post_id) must stay strictly increasing within a thread
    if (!entry.posts.empty() && now < entry.posts.back().created_at) {
        now = entry.posts.back().created_at;
    }
    entry.posts.push_back(ForumPost{post_ids_.next(), entry.thread.thread_id,
                                    std::string(author_id), std::string(body), now});
    return entry.posts.back();
}

Forums::Entry& Forums::insert_thread(ForumThread thread) {
    const std::string id = thread.thread_id;
    return threads_.emplace(id, Entry{std::move(thread), {}}).first->second;
}

std::pair<ForumThread, ForumPost> Forums::create_thread(const NewThread& opening,
                                                        std::string_view author_id,
                                                        std::string_view body, Timestamp now) {
    const bool is_language = opening.kind == ForumKind::language;
    if (is_language && (!opening.lang || opening.lang->empty())) {
        fail(ErrorCode::validation, "language forums require a lang", {{"field", "lang"}});
    }
    if (!is_language && opening.lang) {
        fail(ErrorCode::validation, "only language forums carry a lang", {{"field", "lang"}});
    }
    if (blank(opening.title)) fail(ErrorCode::validation, "thread title is empty", {{"field", "title"}});
    if (blank(body)) fail(ErrorCode::validation, "post body is empty", {{"field", "body"}});
    std::lock_guard lock(mutex_);
    Entry& entry = insert_thread(ForumThread{thread_ids_.next(), opening.kind, opening.lang, opening.title,
                                             std::string(author_id), now, std::nullopt});
    ForumPost first = append(entry, author_id, body, now);
    return {entry.thread, std::move(first)};
}

ForumPost Forums::post(std::string_view thread_id, std::string_view author_id,
                       std::string_view body, Timestamp now) {
    if (blank(body)) fail(ErrorCode::validation, "post body is empty", {{"field", "body"}});
    std::lock_guard lock(mutex_);
    const auto it = threads_.find(thread_id);
    if (it == threads_.end()) {
        fail(ErrorCode::not_found, fmt::format("unknown thread '{}'", thread_id));
    }
    return append(it->second, author_id, body, now);
}

ForumPost Forums::mirror_item_comment(std::string_view lang, std::string_view item_id,
                                      std::string_view author_id, std::string_view body,
                                      Timestamp now) {
    std::lock_guard lock(mutex_);
    for (auto& [id, entry] : threads_) {
        const auto& t = entry.thread;
        if (t.kind == ForumKind::language && t.lang == lang && t.item_id == item_id) {
            return append(entry, author_id, body, now);
        }
    }
    Entry& entry = insert_thread(ForumThread{thread_ids_.next(), ForumKind::language,
                                             std::string(lang),
                                             fmt::format("Item {}", item_id),
                                             std::string(author_id), now, std::string(item_id)});
    return append(entry, author_id, body, now);
}

std::vector<ForumThread> Forums::threads(std::optional<ForumKind> kind,
                                         std::optional<std::string_view> lang) const {
    std::lock_guard lock(mutex_);
    std::vector<ForumThread> out;
    for (const auto& [id, entry] : threads_) {
        if (kind && entry.thread.kind != *kind) continue;
        if (lang && entry.thread.lang != *lang) continue;
        out.push_back(entry.thread);
    }
    return out;
}

std::optional<ForumThread> Forums::thread(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    const auto it = threads_.find(thread_id);
    if (it == threads_.end()) return std::nullopt;
    return it->second.thread;
}

std::vector<ForumPost> Forums::posts(std::string_view thread_id) const {
    std::lock_guard lock(mutex_);
    const auto it = threads_.find(thread_id);
    if (it == threads_.end()) {
        fail(ErrorCode::not_found, fmt::format("unknown thread '{}'", thread_id));
    }
    return it->second.posts;
}

json Forums::snapshot() const {
    std::lock_guard lock(mutex_);
    json threads = json::array();
    for (const auto& [id, entry] : threads_) {
        threads.push_back({{"thread", entry.thread}, {"posts", entry.posts}});
    }
    return json{{"threads", std::move(threads)},
                {"last_thread_id", thread_ids_.last()},
                {"last_post_id", post_ids_.last()}};
}

void Forums::restore(const json& state) {
    std::lock_guard lock(mutex_);
    threads_.clear();
    for (const auto& j : state.at("threads")) {
        const json& jt = j.at("thread");
        const auto kind = parse_forum_kind(jt.at("kind").get<std::string>());
        if (!kind) fail(ErrorCode::validation, "state: bad forum kind");
        Entry& entry = insert_thread(ForumThread{jt.at("thread_id").get<std::string>(), *kind,
                                                 opt_string(jt, "lang"),
                                                 jt.at("title").get<std::string>(),
                                                 jt.at("author_id").get<std::string>(),
                                                 ts(jt, "created_at"), opt_string(jt, "item_id")});
        for (const auto& p : j.at("posts")) {
            entry.posts.push_back(ForumPost{p.at("post_id").get<std::string>(),
                                            entry.thread.thread_id,
                                            p.at("author_id").get<std::string>(),
                                            p.at("body").get<std::string>(), ts(p, "created_at")});
        }
    }
    thread_ids_.reset(state.at("last_thread_id").get<std::uint64_t>());
    post_ids_.reset(state.at("last_post_id").get<std::uint64_t>());
}

// Polls -----------------------------------------------------------------------

std::vector<std::size_t> Poll::tally() const {
    std::vector<std::size_t> counts(options.size(), 0);
    for (const auto& [member, option] : votes) ++counts[option];
    return counts;
}

void to_json(json& j, const Poll& p) {
    j = json{{"poll_id", p.poll_id},
             {"question", p.question},
             {"options", p.options},
             {"lang", opt(p.lang)},
             {"tally", p.tally()},
             {"voters", p.votes.size()},
             {"state", p.state == PollState::open ? "open" : "closed"},
             {"created_by", p.created_by},
             {"created_at", format_timestamp(p.created_at)}};
}

Poll Polls::create(std::string_view question, std::vector<std::string> options,
                   std::optional<std::string> lang, std::string_view creator, Timestamp now) {
    if (blank(question)) fail(ErrorCode::validation, "poll question is empty", {{"field", "question"}});
    if (options.size() < 2) {
        fail(ErrorCode::validation, "a poll needs at least two options", {{"field", "options"}});
    }
    for (const auto& o : options) {
        if (blank(o)) fail(ErrorCode::validation, "poll option is empty", {{"field", "options"}});
    }
    std::lock_guard lock(mutex_);
    Poll p{ids_.next(), std::string(question), std::move(options), std::move(lang), {},
           PollState::open, std::string(creator), now};
    return polls_.emplace(p.poll_id, p).first->second;
}

std::vector<std::size_t> Polls::vote(std::string_view poll_id, std::string_view member_id,
                                     std::size_t option) {
    std::lock_guard lock(mutex_);
    const auto it = polls_.find(poll_id);
    if (it == polls_.end()) fail(ErrorCode::not_found, fmt::format("unknown poll '{}'", poll_id));
    Poll& p = it->second;
    if (p.state == PollState::closed) {
        fail(ErrorCode::state, fmt::format("poll '{}' is closed", poll_id));
    }
    if (option >= p.options.size()) {
        fail(ErrorCode::validation,
             fmt::format("option {} out of range (poll has {})", option, p.options.size()),
             {{"field", "option"}});
    }
    p.votes[std::string(member_id)] = option;
    return p.tally();
}

Poll Polls::close(std::string_view poll_id) {
    std::lock_guard lock(mutex_);
    const auto it = polls_.find(poll_id);
    if (it == polls_.end()) fail(ErrorCode::not_found, fmt::format("unknown poll '{}'", poll_id));
    it->second.state = PollState::closed;
    return it->second;
}

Poll Polls::get(std::string_view poll_id) const {
    std::lock_guard lock(mutex_);
    const auto it = polls_.find(poll_id);
    if (it == polls_.end()) fail(ErrorCode::not_found, fmt::format("unknown poll '{}'", poll_id));
    return it->second;
}

std::vector<Poll> Polls::list() const {
    std::lock_guard lock(mutex_);
    std::vector<Poll> out;
    for (const auto& [id, p] : polls_) out.push_back(p);
    return out;
}

json Polls::snapshot() const {
    std::lock_guard lock(mutex_);
    json polls = json::array();
    for (const auto& [id, p] : polls_) {
        json j = p;
        j["votes"] = p.votes;
        polls.push_back(std::move(j));
    }
    return json{{"polls", std::move(polls)}, {"last_poll_id", ids_.last()}};
}

void Polls::restore(const json& state) {
    std::lock_guard lock(mutex_);
    polls_.clear();
    for (const auto& j : state.at("polls")) {
        Poll p{j.at("poll_id").get<std::string>(),
               j.at("question").get<std::string>(),
               j.at("options").get<std::vector<std::string>>(),
               opt_string(j, "lang"),
               j.at("votes").get<std::map<std::string, std::size_t>>(),
               j.at("state").get<std::string>() == "open" ? PollState::open : PollState::closed,
               j.at("created_by").get<std::string>(),
               ts(j, "created_at")};
        for (const auto& [member, option] : p.votes) {
            if (option >= p.options.size()) fail(ErrorCode::validation, "state: bad vote");
        }
        polls_.emplace(p.poll_id, std::move(p));
    }
    ids_.reset(state.at("last_poll_id").get<std::uint64_t>());
}

} // namespace tcenter
