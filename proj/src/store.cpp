#include "tcenter/store.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<TranslationStatus> parse_status(std::string_view s) {
    if (s == "current") return TranslationStatus::current;
    if (s == "superseded") return TranslationStatus::superseded;
    if (s == "stale") return TranslationStatus::stale;
    return std::nullopt;
}

} // namespace

std::string_view to_string(TranslationStatus status) noexcept {
    switch (status) {
    case TranslationStatus::current: return "current";
    case TranslationStatus::superseded: return "superseded";
    case TranslationStatus::stale: return "stale";
    }
    return "current";
}

void to_json(json& j, const Translation& t) {
    j = json{{"translation_id", t.translation_id},
             {"item_id", t.item_id},
             {"lang", t.lang},
             {"text", t.text},
             {"author_id", t.author_id},
             {"version", t.version},
             {"status", to_string(t.status)},
             {"created_at", format_timestamp(t.created_at)}};
}

void to_json(json& j, const TranslationComment& c) {
    j = json{{"comment_id", c.comment_id},
             {"item_id", c.item_id},
             {"lang", c.lang},
             {"author_id", c.author_id},
             {"body", c.body},
             {"created_at", format_timestamp(c.created_at)},
             {"parent_id", c.parent_id ? json(*c.parent_id) : json(nullptr)}};
}

void to_json(json& j, const Progress& p) {
    j = json{{"lang", p.lang},
             {"translated_count", p.translated_count},
             {"total_count", p.total_count},
             {"percent", p.percent}};
}

std::string format_percent(std::size_t translated, std::size_t total) {
    if (total == 0) return "0.0";
    // tenths of a percent, rounded half-up: floor((1000 m + n/2) / n)
    const std::uint64_t m = translated, n = total;
    const std::uint64_t tenths = (2000 * m + n) / (2 * n);
    return fmt::format("{}.{}", tenths / 10, tenths % 10);
}

std::string serialize(const TranslationDocument& doc) {
    json items = json::array();
    for (const auto& e : doc.items) {
        items.push_back({{"id", e.id},
                         {"text", e.text ? json(*e.text) : json(nullptr)},
                         {"version", e.version ? json(*e.version) : json(nullptr)}});
    }
    const json root{{"lang", doc.lang},
                    {"generated_at", doc.generated_at ? json(format_timestamp(*doc.generated_at))
                                                      : json(nullptr)},
                    {"items", std::move(items)}};
    return root.dump(2) + "\n";
}

TranslationDocument translation_document_from_json(const json& root) {
    if (!root.is_object()) fail(ErrorCode::validation, "document: expected a JSON object");
    TranslationDocument doc;
    const auto lang = root.find("lang");
    if (lang == root.end() || !lang->is_string() || lang->get<std::string>().empty()) {
        fail(ErrorCode::validation, "document: 'lang' must be a non-empty string");
    }
    doc.lang = lang->get<std::string>();
    const auto generated = root.find("generated_at");
    if (generated != root.end() && !generated->is_null()) {
        if (!generated->is_string()) fail(ErrorCode::validation, "document: bad 'generated_at'");
        doc.generated_at = parse_timestamp(generated->get<std::string>());
    }
    const auto items = root.find("items");
    if (items == root.end() || !items->is_array()) {
        fail(ErrorCode::validation, "document: 'items' must be an array");
    }
    for (std::size_t i = 0; i < items->size(); ++i) {
        const json& j = (*items)[i];
        const std::string where = fmt::format("items[{}]", i);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
            fail(ErrorCode::validation, where + ": missing 'id'", {{"record", where}});
        }
        ExportEntry e{j["id"].get<std::string>(), std::nullopt, std::nullopt};
        const json text = j.value("text", json(nullptr));
        const json version = j.value("version", json(nullptr));
        if (text.is_null() != version.is_null()) {
            fail(ErrorCode::validation, where + ": 'text' and 'version' must both be null or set",
                 {{"record", where}});
        }
        if (!text.is_null()) {
            if (!text.is_string() || blank(text.get<std::string>())) {
                fail(ErrorCode::validation, where + ": empty text", {{"record", where}});
            }
            if (!version.is_number_unsigned() || version.get<std::uint64_t>() == 0 ||
                version.get<std::uint64_t>() > 0xffffffffu) {
                fail(ErrorCode::validation, where + ": version must be a positive integer",
                     {{"record", where}});
            }
            e.text = text.get<std::string>();
            e.version = version.get<std::uint32_t>();
        }
        doc.items.push_back(std::move(e));
    }
    return doc;
}

TranslationDocument parse_translation_document(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::validation,
             fmt::format("malformed translation document at byte {}", e.byte),
             {{"byte", e.byte}});
    }
    return translation_document_from_json(root);
}

const Translation* TranslationStore::Thread::current() const {
    if (versions.empty() || versions.back().status != TranslationStatus::current) return nullptr;
    return &versions.back();
}

TranslationStore::Thread* TranslationStore::find_thread(std::string_view item_id,
                                                        std::string_view lang) const {
    std::shared_lock lock(mutex_);
    const auto it = threads_.find(Key{item_id, lang});
    return it == threads_.end() ? nullptr : it->second.get();
}

TranslationStore::Thread& TranslationStore::thread(std::string_view item_id,
                                                   std::string_view lang) {
    if (Thread* t = find_thread(item_id, lang)) return *t;
    std::unique_lock lock(mutex_);
    auto& slot = threads_[Key{item_id, lang}];
    if (!slot) slot = std::make_unique<Thread>();
    return *slot;
}

Translation TranslationStore::append_version(Thread& thread, std::string_view item_id,
                                             std::string_view lang, std::string_view text,
                                             std::string_view author_id, Timestamp now) {
    if (!thread.versions.empty() && thread.versions.back().status == TranslationStatus::current) {
        thread.versions.back().status = TranslationStatus::superseded;
    }
    Translation t{translation_ids_.next(),
                  std::string(item_id),
                  std::string(lang),
                  std::string(text),
                  std::string(author_id),
                  static_cast<std::uint32_t>(thread.versions.size() + 1),
                  TranslationStatus::current,
                  now};
    {
        std::lock_guard index(index_mutex_);
        by_translation_id_.emplace(t.translation_id, Key{item_id, lang});
    }
    thread.versions.push_back(t);
    return t;
}

Translation TranslationStore::submit(std::string_view item_id, std::string_view lang,
                                     std::string_view text, std::string_view author_id,
                                     std::optional<std::uint32_t> base_version, Timestamp now) {
    if (blank(text)) fail(ErrorCode::validation, "translation text is empty", {{"field", "text"}});
    Thread& t = thread(item_id, lang);
    std::lock_guard lock(t.mutex);
    const auto head = static_cast<std::uint32_t>(t.versions.size());
    const Translation* cur = t.current();
    const bool ok = cur ? (base_version && *base_version == head)
                        : (!base_version || *base_version == head);
    if (!ok) {
        fail(ErrorCode::conflict,
             fmt::format("translation of '{}' into '{}' is at version {}", item_id, lang,
                         cur ? head : 0),
             {{"current_version", cur ? json(head) : json(nullptr)}, {"latest_version", head}});
    }
    return append_version(t, item_id, lang, text, author_id, now);
}

std::optional<Translation> TranslationStore::current(std::string_view item_id,
                                                     std::string_view lang) const {
    const Thread* t = find_thread(item_id, lang);
    if (!t) return std::nullopt;
    std::lock_guard lock(t->mutex);
    if (const Translation* cur = t->current()) return *cur;
    return std::nullopt;
}

std::vector<Translation> TranslationStore::history(std::string_view item_id,
                                                   std::string_view lang) const {
    const Thread* t = find_thread(item_id, lang);
    if (!t) return {};
    std::lock_guard lock(t->mutex);
    return t->versions;
}

std::optional<Translation> TranslationStore::find(std::string_view translation_id) const {
    Key key;
    {
        std::lock_guard index(index_mutex_);
        const auto it = by_translation_id_.find(translation_id);
        if (it == by_translation_id_.end()) return std::nullopt;
        key = it->second;
    }
    const Thread* t = find_thread(key.first, key.second);
    if (!t) return std::nullopt;
    std::lock_guard lock(t->mutex);
    for (const auto& v : t->versions) {
        if (v.translation_id == translation_id) return v;
    }
    return std::nullopt;
}

TranslationComment TranslationStore::add_comment(std::string_view item_id, std::string_view lang,
                                                 std::string_view author_id,
                                                 std::string_view body,
                                                 std::optional<std::string> parent_id,
                                                 Timestamp now) {
    if (blank(body)) fail(ErrorCode::validation, "comment body is empty", {{"field", "body"}});
    if (parent_id) {
        std::lock_guard index(index_mutex_);
        const auto it = by_comment_id_.find(*parent_id);
        if (it == by_comment_id_.end() || it->second != Key{item_id, lang}) {
            fail(ErrorCode::not_found,
                 fmt::format("no comment '{}' in the thread of '{}' ({})", *parent_id, item_id,
                             lang),
                 {{"parent_id", *parent_id}});
        }
    }
    Thread& t = thread(item_id, lang);
    std::lock_guard lock(t.mutex);
    TranslationComment c{comment_ids_.next(), std::string(item_id), std::string(lang),
                         std::string(author_id), std::string(body), now, std::move(parent_id)};
    {
        std::lock_guard index(index_mutex_);
        by_comment_id_.emplace(c.comment_id, Key{item_id, lang});
    }
    t.comments.push_back(c);
    return c;
}

std::vector<TranslationComment> TranslationStore::comments(std::string_view item_id,
                                                           std::string_view lang) const {
    const Thread* t = find_thread(item_id, lang);
    if (!t) return {};
    std::lock_guard lock(t->mutex);
    return t->comments;
}

std::size_t TranslationStore::mark_stale(std::string_view item_id) {
    std::shared_lock lock(mutex_);
    std::size_t n = 0;
    for (auto it = threads_.lower_bound(Key{item_id, ""});
         it != threads_.end() && it->first.first == item_id; ++it) {
        std::lock_guard tl(it->second->mutex);
        auto& versions = it->second->versions;
        if (!versions.empty() && versions.back().status == TranslationStatus::current) {
            versions.back().status = TranslationStatus::stale;
            ++n;
        }
    }
    return n;
}

std::size_t TranslationStore::translated_count(std::string_view lang) const {
    std::shared_lock lock(mutex_);
    std::size_t n = 0;
    for (const auto& [key, t] : threads_) {
        if (key.second != lang) continue;
        std::lock_guard tl(t->mutex);
        if (t->current()) ++n;
    }
    return n;
}

std::vector<Translation> TranslationStore::authored_by(std::string_view member_id) const {
    std::shared_lock lock(mutex_);
    std::vector<Translation> out;
    for (const auto& [key, t] : threads_) {
        std::lock_guard tl(t->mutex);
        for (const auto& v : t->versions) {
            if (v.author_id == member_id) out.push_back(v);
        }
    }
    return out;
}

TranslationDocument TranslationStore::export_document(std::string_view lang,
                                                      std::vector<std::string> item_ids) const {
    std::sort(item_ids.begin(), item_ids.end());
    TranslationDocument doc;
    doc.lang = std::string(lang);
    for (auto& id : item_ids) {
        ExportEntry e{std::move(id), std::nullopt, std::nullopt};
        if (auto cur = current(e.id, lang)) {
            e.text = cur->text;
            e.version = cur->version;
            if (!doc.generated_at || *doc.generated_at < cur->created_at) {
                doc.generated_at = cur->created_at;
            }
        }
        doc.items.push_back(std::move(e));
    }
    return doc;
}

TranslationImportSummary TranslationStore::import_document(const TranslationDocument& doc,
                                                           std::string_view author_id,
                                                           Timestamp now) {
    const Timestamp stamp = doc.generated_at.value_or(now);
    TranslationImportSummary summary;
    // check everything first so a conflicting document changes nothing
    for (const auto& e : doc.items) {
        if (!e.text) continue;
        const Thread* t = find_thread(e.id, doc.lang);
        if (!t) continue;
        std::lock_guard lock(t->mutex);
        const Translation* cur = t->current();
        const bool same = cur && cur->version == *e.version && cur->text == *e.text;
        if (!same && *e.version <= t->versions.size()) {
            fail(ErrorCode::conflict,
                 fmt::format("'{}' ({}) already has version {}", e.id, doc.lang,
                             t->versions.size()),
                 {{"item_id", e.id}, {"latest_version", t->versions.size()}});
        }
    }
    for (const auto& e : doc.items) {
        if (!e.text) {
            ++summary.untranslated;
            continue;
        }
        Thread& t = thread(e.id, doc.lang);
        std::lock_guard lock(t.mutex);
        const Translation* cur = t.current();
        if (cur && cur->version == *e.version && cur->text == *e.text) {
            ++summary.unchanged;
            continue;
        }
        if (*e.version <= t.versions.size()) {
            fail(ErrorCode::conflict, fmt::format("'{}' ({}) changed during import", e.id,
                                                  doc.lang));
        }
        while (t.versions.size() < *e.version) {
            append_version(t, e.id, doc.lang, *e.text, author_id, stamp);
        }
        ++summary.imported;
    }
    return summary;
}

json TranslationStore::snapshot() const {
    std::shared_lock lock(mutex_);
    json threads = json::array();
    for (const auto& [key, t] : threads_) {
        std::lock_guard tl(t->mutex);
        threads.push_back({{"item_id", key.first},
                           {"lang", key.second},
                           {"versions", t->versions},
                           {"comments", t->comments}});
    }
    return json{{"threads", std::move(threads)},
                {"last_translation_id", translation_ids_.last()},
                {"last_comment_id", comment_ids_.last()}};
}

void TranslationStore::restore(const json& state) {
    std::unique_lock lock(mutex_);
    std::lock_guard index(index_mutex_);
    threads_.clear();
    by_translation_id_.clear();
    by_comment_id_.clear();
    for (const auto& jt : state.at("threads")) {
        Key key{jt.at("item_id").get<std::string>(), jt.at("lang").get<std::string>()};
        auto thread = std::make_unique<Thread>();
        for (const auto& j : jt.at("versions")) {
            const auto status = parse_status(j.at("status").get<std::string>());
            if (!status) fail(ErrorCode::validation, "state: bad translation status");
            Translation t{j.at("translation_id").get<std::string>(),
                          key.first,
                          key.second,
                          j.at("text").get<std::string>(),
                          j.at("author_id").get<std::string>(),
                          j.at("version").get<std::uint32_t>(),
                          *status,
                          parse_timestamp(j.at("created_at").get<std::string>())};
            if (t.version != thread->versions.size() + 1) {
                fail(ErrorCode::validation, "state: version gap for " + key.first);
            }
            by_translation_id_.emplace(t.translation_id, key);
            thread->versions.push_back(std::move(t));
        }
        for (const auto& j : jt.at("comments")) {
            TranslationComment c{j.at("comment_id").get<std::string>(),
                                 key.first,
                                 key.second,
                                 j.at("author_id").get<std::string>(),
                                 j.at("body").get<std::string>(),
                                 parse_timestamp(j.at("created_at").get<std::string>()),
                                 std::nullopt};
            if (!j.at("parent_id").is_null()) c.parent_id = j["parent_id"].get<std::string>();
            by_comment_id_.emplace(c.comment_id, key);
            thread->comments.push_back(std::move(c));
        }
        threads_.emplace(std::move(key), std::move(thread));
    }
    translation_ids_.reset(state.at("last_translation_id").get<std::uint64_t>());
    comment_ids_.reset(state.at("last_comment_id").get<std::uint64_t>());
}

} // namespace tcenter
