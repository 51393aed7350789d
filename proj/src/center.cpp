#include "tcenter/center.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

constexpr int kStateFormat = 1;

} // namespace

void to_json(json& j, const Language& l) {
    j = json{{"code", l.code}, {"name", l.name}, {"palette", l.palette}};
}

void CenterOptions::validate() const {
    weights.validate();
    if (languages.empty()) {
        fail(ErrorCode::validation, "at least one target language is required",
             {{"field", "languages"}});
    }
    std::set<std::string, std::less<>> codes;
    for (const auto& l : languages) {
        if (l.code.empty()) fail(ErrorCode::validation, "language code is empty");
        if (!codes.insert(l.code).second) {
            fail(ErrorCode::validation, fmt::format("language '{}' listed twice", l.code));
        }
    }
    if (session_ttl.count() <= 0) {
        fail(ErrorCode::validation, "session ttl must be positive", {{"field", "session_ttl"}});
    }
}

std::optional<ItemFilter> parse_item_filter(std::string_view text) noexcept {
    if (text == "untranslated") return ItemFilter::untranslated;
    if (text == "translated") return ItemFilter::translated;
    if (text == "all") return ItemFilter::all;
    return std::nullopt;
}

std::optional<ItemOrder> parse_item_order(std::string_view text) noexcept {
    if (text == "priority") return ItemOrder::priority;
    if (text == "id") return ItemOrder::id;
    return std::nullopt;
}

std::string ImportReport::describe() const {
    if (kind == Kind::catalog) {
        return fmt::format("{} added, {} updated", catalog.added, catalog.updated);
    }
    return fmt::format("{} imported, {} unchanged, {} untranslated", translations.imported,
                       translations.unchanged, translations.untranslated);
}

void to_json(json& j, const ListedItem& e) {
    j = json{{"item", e.item},
             {"status", e.translated ? "translated" : "untranslated"},
             {"priority", e.priority},
             {"request_count", e.request_count}};
}

void to_json(json& j, const PreviewSegment& s) {
    j = json{{"item_id", s.item_id},
             {"text", s.text},
             {"translated", s.translated},
             {"highlighted", s.highlighted}};
}

void to_json(json& j, const Binder& b) {
    json items = json::array();
    for (const auto& a : b.translated_items) {
        items.push_back({{"item_id", a.item_id},
                         {"lang", a.lang},
                         {"version", a.version},
                         {"translation_id", a.translation_id}});
    }
    j = json{{"member_id", b.member_id},
             {"translated_items", std::move(items)},
             {"watches", b.watches},
             {"notifications", b.notifications}};
}

void to_json(json& j, const DirectoryEntry& d) {
    j = json{{"member_id", d.member_id},
             {"display_name", d.display_name},
             {"items_translated_count", d.items_translated_count}};
    if (d.contact_info) j["contact_info"] = *d.contact_info;
}

void to_json(json& j, const ImportReport& r) {
    if (r.kind == ImportReport::Kind::catalog) {
        j = json{{"kind", "catalog"}, {"added", r.catalog.added}, {"updated", r.catalog.updated}};
    } else {
        j = json{{"kind", "translations"},
                 {"imported", r.translations.imported},
                 {"unchanged", r.translations.unchanged},
                 {"untranslated", r.translations.untranslated}};
    }
    j["summary"] = r.describe();
}

// ---------------------------------------------------------------------------

TranslationCenter::TranslationCenter(CenterOptions options, Clock clock)
    : options_(std::move(options)), clock_(std::move(clock)) {
    options_.validate();
}

TranslationCenter::TranslationCenter(CenterOptions options, Clock clock, DataDirectory& storage)
    : TranslationCenter(std::move(options), std::move(clock)) {
    storage_ = &storage;
    const auto bytes = storage.read_snapshot();
    if (!bytes) return;
    try {
        restore(json::parse(*bytes));
    } catch (const json::exception& e) {
        fail(ErrorCode::io, fmt::format("corrupt state file in '{}': {}", storage.path().string(),
                                        e.what()));
    } catch (const Error& e) {
        fail(ErrorCode::io, fmt::format("corrupt state file in '{}': {}", storage.path().string(),
                                        e.what()));
    }
}

template <typename F>
auto TranslationCenter::mutate(F&& body) {
    using Result = decltype(body());
    std::uint64_t generation = 0;
    if constexpr (std::is_void_v<Result>) {
        {
            std::shared_lock gate(gate_);
            body();
            generation = ++generation_;
        }
        persist(generation);
    } else {
        std::optional<Result> result;
        {
            std::shared_lock gate(gate_);
            result.emplace(body());
            generation = ++generation_;
        }
        persist(generation);
        return std::move(*result);
    }
}

void TranslationCenter::persist(std::uint64_t generation) {
    if (!storage_) return;
    std::unique_lock lock(persist_mutex_);
    for (;;) {
        if (durable_generation_ >= generation) return;
        if (!writing_) break;
        persist_cv_.wait(lock);
    }
    writing_ = true;
    lock.unlock();
    std::uint64_t target = 0;
    std::string bytes;
    try {
        json state;
        {
            std::unique_lock gate(gate_);
            target = generation_.load();
            state = snapshot_locked();
        }
        bytes = state.dump();
        storage_->write_snapshot(bytes);
    } catch (...) {
        lock.lock();
        writing_ = false;
        persist_cv_.notify_all();
        throw;
    }
    lock.lock();
    durable_generation_ = std::max(durable_generation_, target);
    writing_ = false;
    persist_cv_.notify_all();
}

void TranslationCenter::flush() { persist(generation_.load()); }

json TranslationCenter::snapshot() const {
    std::unique_lock gate(gate_);
    return snapshot_locked();
}

json TranslationCenter::snapshot_locked() const {
    return json{{"format", kStateFormat},
                {"catalog", catalog_.snapshot()},
                {"store", store_.snapshot()},
                {"requests", requests_.snapshot()},
                {"reviews", reviews_.snapshot()},
                {"glossary", glossary_.snapshot()},
                {"forums", forums_.snapshot()},
                {"polls", polls_.snapshot()},
                {"members", members_.snapshot()},
                {"sessions", sessions_.snapshot(clock_())}};
}

void TranslationCenter::restore(const json& state) {
    if (state.value("format", 0) != kStateFormat) {
        fail(ErrorCode::validation, "unsupported state format");
    }
    std::unique_lock gate(gate_);
    catalog_.restore(state.at("catalog"));
    store_.restore(state.at("store"));
    requests_.restore(state.at("requests"));
    reviews_.restore(state.at("reviews"));
    glossary_.restore(state.at("glossary"));
    forums_.restore(state.at("forums"));
    polls_.restore(state.at("polls"));
    members_.restore(state.at("members"));
    sessions_.restore(state.at("sessions"));
}

// ---------------------------------------------------------------------------

const Language& TranslationCenter::language(std::string_view code) const {
    for (const auto& l : options_.languages) {
        if (l.code == code) return l;
    }
    fail(ErrorCode::not_found, fmt::format("language '{}' is not registered", code),
         {{"lang", code}});
}

void TranslationCenter::require_language(std::string_view lang) const { (void)language(lang); }

Member TranslationCenter::require_member(std::string_view member_id) const {
    auto m = members_.find(member_id);
    if (!m) {
        fail(ErrorCode::not_found, fmt::format("unknown member '{}'", member_id),
             {{"member_id", member_id}});
    }
    return std::move(*m);
}

Item TranslationCenter::require_item(std::string_view item_id) const {
    return catalog_.get(item_id);
}

bool TranslationCenter::is_admin(std::string_view member_id) const {
    const auto m = members_.find(member_id);
    if (!m) return false;
    return std::find(options_.admins.begin(), options_.admins.end(), m->display_name) !=
           options_.admins.end();
}

// catalog -------------------------------------------------------------------

ImportSummary TranslationCenter::import_catalog(const CatalogDocument& doc) {
    ImportSummary summary;
    std::uint64_t generation = 0;
    {
        // exclusive: the catalog update and the stale marking land together
        std::unique_lock gate(gate_);
        summary = catalog_.import(doc, options_.source_lang, now());
        for (const auto& id : summary.superseded_ids) store_.mark_stale(id);
        generation = ++generation_;
    }
    persist(generation);
    return summary;
}

TranslationImportSummary TranslationCenter::import_translations(const TranslationDocument& doc,
                                                                std::string_view author_id) {
    require_language(doc.lang);
    TranslationImportSummary summary;
    std::uint64_t generation = 0;
    {
        std::unique_lock gate(gate_);
        for (const auto& e : doc.items) {
            if (!catalog_.contains(e.id)) {
                fail(ErrorCode::not_found, fmt::format("unknown item '{}'", e.id),
                     {{"item_id", e.id}});
            }
        }
        summary = store_.import_document(doc, author_id, now());
        generation = ++generation_;
    }
    persist(generation);
    return summary;
}

ImportReport TranslationCenter::import_document(std::string_view text,
                                                std::string_view author_id) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error&) {
        // re-parse through the catalog parser for a line/column diagnostic
        (void)parse_catalog_document(text);
    }
    ImportReport report;
    if (root.is_object() && root.contains("pages")) {
        report.kind = ImportReport::Kind::catalog;
        report.catalog = import_catalog(catalog_document_from_json(root));
    } else if (root.is_object() && root.contains("items") && root.contains("lang")) {
        report.kind = ImportReport::Kind::translations;
        report.translations = import_translations(translation_document_from_json(root), author_id);
    } else {
        fail(ErrorCode::validation,
             "document is neither a catalog (\"pages\") nor a translation export (\"lang\", "
             "\"items\")");
    }
    return report;
}

std::vector<ListedItem> TranslationCenter::list_items(std::string_view lang, ItemFilter filter,
                                                      ItemOrder order) const {
    require_language(lang);
    std::vector<ListedItem> out;
    for (auto& item : catalog_.items()) {
        const auto current = store_.current(item.id, lang);
        const bool translated = current.has_value();
        if (filter == ItemFilter::untranslated && translated) continue;
        if (filter == ItemFilter::translated && !translated) continue;
        PriorityInputs in{item.view_count, requests_.request_count(item.id, lang), std::nullopt};
        if (current) in.quality = reviews_.quality(current->translation_id);
        const double score = compute_priority(in, options_.weights);
        out.push_back(ListedItem{std::move(item), translated, score, in.request_count});
    }
    if (order == ItemOrder::priority) {
        sort_by_priority(
            out, [](const ListedItem& e) { return e.priority; },
            [](const ListedItem& e) -> const std::string& { return e.item.id; });
    }
    // catalog_.items() is already in ascending id order
    return out;
}

Item TranslationCenter::item(std::string_view item_id) const { return require_item(item_id); }

std::optional<SourcePage> TranslationCenter::page(std::string_view page_id) const {
    return catalog_.page(page_id);
}

std::uint64_t TranslationCenter::record_view(std::string_view item_id) {
    return mutate([&] { return catalog_.record_view(item_id); });
}

std::string TranslationCenter::context_snippet(std::string_view item_id,
                                               std::string_view lang) const {
    const Item it = require_item(item_id);
    const auto current = store_.current(item_id, lang);
    return tcenter::context_snippet(
        it, current ? std::optional<std::string_view>(current->text) : std::nullopt);
}

std::vector<PreviewSegment> TranslationCenter::page_preview(std::string_view item_id,
                                                            std::string_view lang) const {
    const Item focus = require_item(item_id);
    std::vector<PreviewSegment> out;
    const auto page = catalog_.page(focus.page_id);
    std::vector<std::string> ids = page ? page->segment_ids : std::vector<std::string>{focus.id};
    for (const auto& id : ids) {
        const auto it = catalog_.find(id);
        if (!it) continue;
        const auto current = store_.current(id, lang);
        out.push_back(PreviewSegment{id, current ? current->text : it->source_text,
                                     current.has_value(), id == focus.id});
    }
    return out;
}

// store ---------------------------------------------------------------------

Translation TranslationCenter::submit_translation(std::string_view item_id, std::string_view lang,
                                                  std::string_view text,
                                                  std::string_view author_id,
                                                  std::optional<std::uint32_t> base_version) {
    require_item(item_id);
    require_language(lang);
    require_member(author_id);
    return mutate(
        [&] { return store_.submit(item_id, lang, text, author_id, base_version, now()); });
}

std::optional<Translation> TranslationCenter::current_translation(std::string_view item_id,
                                                                  std::string_view lang) const {
    require_item(item_id);
    return store_.current(item_id, lang);
}

std::vector<Translation> TranslationCenter::translation_history(std::string_view item_id,
                                                                std::string_view lang) const {
    require_item(item_id);
    return store_.history(item_id, lang);
}

std::optional<Translation> TranslationCenter::translation(std::string_view translation_id) const {
    return store_.find(translation_id);
}

TranslationComment TranslationCenter::add_comment(std::string_view item_id, std::string_view lang,
                                                  std::string_view author_id,
                                                  std::string_view body,
                                                  std::optional<std::string> parent_id) {
    require_item(item_id);
    require_language(lang);
    require_member(author_id);
    return mutate([&] {
        auto comment =
            store_.add_comment(item_id, lang, author_id, body, std::move(parent_id), now());
        if (options_.auto_forum_mirror) {
            forums_.mirror_item_comment(lang, item_id, author_id, body, comment.created_at);
        }
        return comment;
    });
}

std::vector<TranslationComment> TranslationCenter::comments(std::string_view item_id,
                                                            std::string_view lang) const {
    require_item(item_id);
    return store_.comments(item_id, lang);
}

Progress TranslationCenter::progress(std::string_view lang) const {
    Progress p;
    p.lang = std::string(lang);
    const bool registered = std::any_of(options_.languages.begin(), options_.languages.end(),
                                        [&](const Language& l) { return l.code == lang; });
    if (registered) {
        p.total_count = catalog_.size();
        p.translated_count = store_.translated_count(lang);
    }
    p.percent = format_percent(p.translated_count, p.total_count);
    return p;
}

TranslationDocument TranslationCenter::export_translations(std::string_view lang) const {
    require_language(lang);
    return store_.export_document(lang, catalog_.item_ids());
}

// workflow ------------------------------------------------------------------

PriorityInputs TranslationCenter::priority_inputs(std::string_view item_id,
                                                  std::string_view lang) const {
    const Item it = require_item(item_id);
    require_language(lang);
    PriorityInputs in{it.view_count, requests_.request_count(item_id, lang), std::nullopt};
    if (const auto current = store_.current(item_id, lang)) {
        in.quality = reviews_.quality(current->translation_id);
    }
    return in;
}

double TranslationCenter::priority(std::string_view item_id, std::string_view lang) const {
    return compute_priority(priority_inputs(item_id, lang), options_.weights);
}

Item TranslationCenter::next_random_item(std::string_view lang, std::uint64_t seed) const {
    require_language(lang);
    auto items = catalog_.items();
    if (items.empty()) fail(ErrorCode::not_found, "the catalog is empty");
    std::vector<Item> open;
    for (auto& it : items) {
        if (!store_.current(it.id, lang)) open.push_back(it);
    }
    auto& pool = open.empty() ? items : open; // all translated: edit mode
    return pool[pick_uniform(pool.size(), seed)];
}

RequestOutcome TranslationCenter::request_translation(const RequestTarget& target,
                                                      std::string_view lang,
                                                      std::string_view requester) {
    require_language(lang);
    require_member(requester);
    std::vector<std::string> ids;
    if (target.kind == RequestTarget::Kind::item) {
        require_item(target.id);
        ids.push_back(target.id);
    } else {
        const auto page = catalog_.page(target.id);
        if (!page) {
            fail(ErrorCode::not_found, fmt::format("unknown page '{}'", target.id),
                 {{"page_id", target.id}});
        }
        ids = page->segment_ids;
    }
    return mutate([&] { return requests_.request(target, lang, requester, ids, now()); });
}

Binder TranslationCenter::binder_of(std::string_view member_id) {
    require_member(member_id);
    Binder b;
    b.member_id = std::string(member_id);
    std::uint64_t generation = 0;
    {
        std::shared_lock gate(gate_);
        b.notifications = requests_.acknowledge(member_id, [&](const auto& item, const auto& lang) {
            return store_.current(item, lang).has_value();
        });
        if (!b.notifications.empty()) generation = ++generation_;
    }
    if (generation != 0) persist(generation);
    for (const auto& t : store_.authored_by(member_id)) {
        b.translated_items.push_back(AuthoredEntry{t.item_id, t.lang, t.version, t.translation_id});
    }
    std::sort(b.translated_items.begin(), b.translated_items.end(),
              [](const AuthoredEntry& a, const AuthoredEntry& c) {
                  return std::tie(a.item_id, a.lang, a.version) <
                         std::tie(c.item_id, c.lang, c.version);
              });
    b.watches = requests_.watches(member_id);
    return b;
}

// review --------------------------------------------------------------------

Review TranslationCenter::submit_review(std::string_view translation_id,
                                        std::string_view reviewer, const RubricScores& rubric,
                                        std::optional<std::string> body) {
    const auto t = store_.find(translation_id);
    if (!t) {
        fail(ErrorCode::not_found, fmt::format("unknown translation '{}'", translation_id),
             {{"translation_id", translation_id}});
    }
    require_member(reviewer);
    return mutate([&] {
        return reviews_.submit(translation_id, t->author_id, reviewer, rubric, std::move(body),
                               now());
    });
}

std::vector<Review> TranslationCenter::reviews(std::string_view translation_id) const {
    return reviews_.reviews_of(translation_id);
}

double TranslationCenter::quality(std::string_view item_id, std::string_view lang) const {
    require_language(lang);
    const auto current = store_.current(item_id, lang);
    return reviews_.quality(current ? std::optional<std::string_view>(current->translation_id)
                                    : std::nullopt);
}

// community -----------------------------------------------------------------

GlossaryEntry TranslationCenter::glossary_upsert(const GlossaryUpsert& change,
                                                 std::string_view author_id) {
    require_member(author_id);
    if (change.poll_id) (void)polls_.get(*change.poll_id);
    return mutate([&] { return glossary_.upsert(change, author_id, now()); });
}

std::optional<GlossaryEntry> TranslationCenter::glossary_lookup(std::string_view term) const {
    return glossary_.lookup(term);
}

std::vector<GlossaryEntry> TranslationCenter::glossary() const { return glossary_.entries(); }

GlossaryComment TranslationCenter::glossary_comment(std::string_view term,
                                                    std::string_view author_id,
                                                    std::string_view body,
                                                    std::optional<std::string> parent_id) {
    require_member(author_id);
    return mutate(
        [&] { return glossary_.add_comment(term, author_id, body, std::move(parent_id), now()); });
}

std::pair<ForumThread, ForumPost> TranslationCenter::create_thread(const NewThread& opening,
                                                                   std::string_view author_id,
                                                                   std::string_view body) {
    require_member(author_id);
    if (opening.lang) require_language(*opening.lang);
    return mutate([&] { return forums_.create_thread(opening, author_id, body, now()); });
}

ForumPost TranslationCenter::forum_post(std::string_view thread_id, std::string_view author_id,
                                        std::string_view body) {
    require_member(author_id);
    return mutate([&] { return forums_.post(thread_id, author_id, body, now()); });
}

std::vector<ForumThread> TranslationCenter::forum_threads(
    std::optional<ForumKind> kind, std::optional<std::string_view> lang) const {
    return forums_.threads(kind, lang);
}

std::optional<ForumThread> TranslationCenter::forum_thread(std::string_view thread_id) const {
    return forums_.thread(thread_id);
}

std::vector<ForumPost> TranslationCenter::forum_posts(std::string_view thread_id) const {
    return forums_.posts(thread_id);
}

Poll TranslationCenter::create_poll(std::string_view question, std::vector<std::string> options,
                                    std::optional<std::string> lang, std::string_view creator) {
    require_member(creator);
    if (lang) require_language(*lang);
    return mutate(
        [&] { return polls_.create(question, std::move(options), std::move(lang), creator, now()); });
}

std::vector<std::size_t> TranslationCenter::poll_vote(std::string_view poll_id,
                                                      std::string_view member_id,
                                                      std::size_t option) {
    require_member(member_id);
    return mutate([&] { return polls_.vote(poll_id, member_id, option); });
}

Poll TranslationCenter::close_poll(std::string_view poll_id) {
    return mutate([&] { return polls_.close(poll_id); });
}

Poll TranslationCenter::poll(std::string_view poll_id) const { return polls_.get(poll_id); }

std::vector<Poll> TranslationCenter::polls() const { return polls_.list(); }

std::vector<DirectoryEntry> TranslationCenter::directory_list() const {
    std::vector<DirectoryEntry> out;
    for (const auto& m : members_.members()) {
        if (!m.contact_opt_in) continue;
        out.push_back(DirectoryEntry{m.member_id, m.display_name, m.contact_info,
                                     store_.authored_by(m.member_id).size()});
    }
    return out;
}

// members -------------------------------------------------------------------

Registration TranslationCenter::register_member(std::string_view display_name,
                                                std::vector<std::string> languages,
                                                bool contact_opt_in, std::string contact_info) {
    return mutate([&] {
        Registration r;
        r.member = members_.add(display_name, std::move(languages), contact_opt_in,
                                std::move(contact_info), now());
        r.session = sessions_.issue(r.member.member_id, now(), options_.session_ttl);
        r.login_key = sessions_.issue_login_key(r.member.member_id);
        return r;
    });
}

Session TranslationCenter::login(std::string_view display_name, std::string_view login_key) {
    const auto m = members_.find_by_name(display_name);
    if (!m || !sessions_.check_login_key(m->member_id, login_key)) {
        fail(ErrorCode::auth, "unknown member or wrong login key");
    }
    return mutate([&] { return sessions_.issue(m->member_id, now(), options_.session_ttl); });
}

std::string TranslationCenter::authenticate(std::string_view token) const {
    return sessions_.authenticate(token, now());
}

Member TranslationCenter::set_contact(std::string_view member_id, bool opt_in,
                                      std::string contact_info) {
    return mutate([&] { return members_.set_contact(member_id, opt_in, std::move(contact_info)); });
}

std::optional<Member> TranslationCenter::member(std::string_view member_id) const {
    return members_.find(member_id);
}

std::vector<std::string> TranslationCenter::verify_invariants() const {
    return verify_state(snapshot());
}

// ---------------------------------------------------------------------------

std::vector<std::string> verify_state(const json& state) {
    std::vector<std::string> problems;
    auto report = [&](std::string message) { problems.push_back(std::move(message)); };

    std::set<std::string> items;
    for (const auto& j : state.at("catalog").at("items")) items.insert(j.at("id").get<std::string>());

    std::map<std::string, std::string> authors; // translation_id -> author
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& jt : state.at("store").at("threads")) {
        const auto item = jt.at("item_id").get<std::string>();
        const auto lang = jt.at("lang").get<std::string>();
        if (!pairs.emplace(item, lang).second) report(fmt::format("duplicate thread {}/{}", item, lang));
        if (!items.contains(item)) report(fmt::format("translation of unknown item {}", item));
        const auto& versions = jt.at("versions");
        std::size_t current = 0;
        for (std::size_t i = 0; i < versions.size(); ++i) {
            const auto& v = versions[i];
            if (v.at("version").get<std::size_t>() != i + 1) {
                report(fmt::format("{}/{}: version gap at position {}", item, lang, i));
            }
            const auto status = v.at("status").get<std::string>();
            if (status == "current") {
                ++current;
                if (i + 1 != versions.size()) {
                    report(fmt::format("{}/{}: current version is not the latest", item, lang));
                }
            }
            if (v.at("text").get<std::string>().empty()) {
                report(fmt::format("{}/{}: empty translation text", item, lang));
            }
            authors[v.at("translation_id").get<std::string>()] = v.at("author_id").get<std::string>();
        }
        if (current > 1) report(fmt::format("{}/{}: {} current versions", item, lang, current));
        std::set<std::string> comment_ids;
        for (const auto& c : jt.at("comments")) {
            if (!c.at("parent_id").is_null() &&
                !comment_ids.contains(c.at("parent_id").get<std::string>())) {
                report(fmt::format("{}/{}: comment parent outside thread", item, lang));
            }
            comment_ids.insert(c.at("comment_id").get<std::string>());
        }
    }

    std::set<std::pair<std::string, std::string>> review_keys;
    for (const auto& r : state.at("reviews").at("reviews")) {
        const auto tid = r.at("translation_id").get<std::string>();
        const auto reviewer = r.at("reviewer").get<std::string>();
        const auto author = authors.find(tid);
        if (author == authors.end()) report("review of unknown translation " + tid);
        else if (author->second == reviewer) report("self review of " + tid);
        if (!review_keys.emplace(reviewer, tid).second) {
            report(fmt::format("duplicate review by {} of {}", reviewer, tid));
        }
        try {
            (void)rubric_total(rubric_from_json(r.at("rubric")));
        } catch (const Error& e) {
            report(fmt::format("review {}: {}", r.at("review_id").get<std::string>(), e.what()));
        }
    }

    for (const auto& p : state.at("polls").at("polls")) {
        const auto options = p.at("options").size();
        const auto& votes = p.at("votes");
        std::vector<std::size_t> recount(options, 0);
        for (const auto& [member, option] : votes.items()) {
            const auto idx = option.get<std::size_t>();
            if (idx >= options) report("poll vote out of range");
            else ++recount[idx];
        }
        std::size_t total = 0;
        for (auto n : recount) total += n;
        if (total != votes.size()) report("poll tally does not match voters");
    }

    for (const auto& [member, watches] : state.at("requests").at("watches").items()) {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& w : watches) {
            if (!seen.emplace(w.at("item_id").get<std::string>(), w.at("lang").get<std::string>())
                     .second) {
                report("duplicate watch for " + member);
            }
        }
    }
    return problems;
}

} // namespace tcenter
