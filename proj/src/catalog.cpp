#include "tcenter/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

constexpr std::string_view kCategoryNames[] = {"menu_link", "informational_text", "button",
                                               "heading", "other"};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Line and column (1-based) of a byte offset.
std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(ErrorCode::validation, fmt::format("{}: missing field '{}'", where, key),
             {{"record", where}, {"field", key}});
    }
    if (!it->is_string()) {
        fail(ErrorCode::validation, fmt::format("{}: field '{}' must be a string", where, key),
             {{"record", where}, {"field", key}});
    }
    return it->get<std::string>();
}

const json& required_array(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        fail(ErrorCode::validation, fmt::format("{}: field '{}' must be an array", where, key),
             {{"record", where}, {"field", key}});
    }
    return *it;
}

} // namespace

std::string_view to_string(Category category) noexcept {
    return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<Category> parse_category(std::string_view text) noexcept {
    for (std::size_t i = 0; i < std::size(kCategoryNames); ++i) {
        if (kCategoryNames[i] == text) return static_cast<Category>(i);
    }
    return std::nullopt;
}

void to_json(json& j, const Item& item) {
    j = json{{"id", item.id},
             {"source_text", item.source_text},
             {"source_lang", item.source_lang},
             {"page_id", item.page_id},
             {"category", to_string(item.category)},
             {"context_before", item.context_before},
             {"context_after", item.context_after},
             {"view_count", item.view_count},
             {"created_at", format_timestamp(item.created_at)}};
}

void to_json(json& j, const SourcePage& page) {
    j = json{{"page_id", page.page_id},
             {"url", page.url},
             {"title", page.title},
             {"segment_ids", page.segment_ids}};
}

CatalogDocument catalog_document_from_json(const json& root) {
    if (!root.is_object()) fail(ErrorCode::validation, "document: expected a JSON object");
    CatalogDocument doc;
    std::set<std::string, std::less<>> page_ids;
    std::set<std::string, std::less<>> segment_ids;
    const json& pages = required_array(root, "pages", "document");
    for (std::size_t p = 0; p < pages.size(); ++p) {
        const std::string where = fmt::format("pages[{}]", p);
        const json& jp = pages[p];
        if (!jp.is_object()) fail(ErrorCode::validation, where + ": expected an object");
        CatalogPage page;
        page.page_id = required_string(jp, "page_id", where);
        page.url = required_string(jp, "url", where);
        page.title = required_string(jp, "title", where);
        if (page.page_id.empty()) fail(ErrorCode::validation, where + ": empty page_id");
        if (!page_ids.insert(page.page_id).second) {
            fail(ErrorCode::validation,
                 fmt::format("{}: duplicate page id '{}'", where, page.page_id),
                 {{"record", where}, {"page_id", page.page_id}});
        }
        const json& segments = required_array(jp, "segments", where);
        for (std::size_t s = 0; s < segments.size(); ++s) {
            const std::string swhere = fmt::format("{}.segments[{}]", where, s);
            const json& js = segments[s];
            if (!js.is_object()) fail(ErrorCode::validation, swhere + ": expected an object");
            CatalogSegment seg;
            seg.id = required_string(js, "id", swhere);
            seg.text = required_string(js, "text", swhere);
            const auto category = required_string(js, "category", swhere);
            seg.context_before = required_string(js, "context_before", swhere);
            seg.context_after = required_string(js, "context_after", swhere);
            if (seg.id.empty()) fail(ErrorCode::validation, swhere + ": empty segment id");
            if (blank(seg.text)) {
                fail(ErrorCode::validation, fmt::format("{}: empty text for '{}'", swhere, seg.id),
                     {{"record", swhere}, {"field", "text"}});
            }
            const auto parsed = parse_category(category);
            if (!parsed) {
                fail(ErrorCode::validation,
                     fmt::format("{}: unknown category '{}'", swhere, category),
                     {{"record", swhere}, {"field", "category"}});
            }
            seg.category = *parsed;
            if (!segment_ids.insert(seg.id).second) {
                fail(ErrorCode::validation,
                     fmt::format("{}: duplicate segment id '{}'", swhere, seg.id),
                     {{"record", swhere}, {"segment_id", seg.id}});
            }
            page.segments.push_back(std::move(seg));
        }
        doc.pages.push_back(std::move(page));
    }
    return doc;
}

CatalogDocument parse_catalog_document(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // byte is 1-based and points at the offending character
        const auto [line, column] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
        fail(ErrorCode::validation,
             fmt::format("malformed catalog document at line {}, column {}", line, column),
             {{"line", line}, {"column", column}});
    }
    return catalog_document_from_json(root);
}

json to_json(const CatalogDocument& doc) {
    json pages = json::array();
    for (const auto& page : doc.pages) {
        json segments = json::array();
        for (const auto& seg : page.segments) {
            segments.push_back({{"id", seg.id},
                                {"text", seg.text},
                                {"category", to_string(seg.category)},
                                {"context_before", seg.context_before},
                                {"context_after", seg.context_after}});
        }
        pages.push_back({{"page_id", page.page_id},
                         {"url", page.url},
                         {"title", page.title},
                         {"segments", std::move(segments)}});
    }
    return json{{"pages", std::move(pages)}};
}

ImportSummary Catalog::import(const CatalogDocument& doc, std::string_view source_lang,
                              Timestamp now) {
    std::unique_lock lock(mutex_);
    ImportSummary summary;
    for (const auto& page : doc.pages) {
        SourcePage& stored = pages_[page.page_id];
        stored.page_id = page.page_id;
        stored.url = page.url;
        stored.title = page.title;
        stored.segment_ids.clear();
        for (const auto& seg : page.segments) {
            stored.segment_ids.push_back(seg.id);
            auto it = items_.find(seg.id);
            if (it == items_.end()) {
                auto entry = std::make_unique<Entry>();
                entry->item = Item{seg.id,         seg.text,           std::string(source_lang),
                                   page.page_id,   seg.category,       seg.context_before,
                                   seg.context_after, 0,               now};
                items_.emplace(seg.id, std::move(entry));
                ++summary.added;
                continue;
            }
            Item& item = it->second->item;
            const bool text_changed = item.source_text != seg.text;
            const bool meta_changed = item.page_id != page.page_id ||
                                      item.category != seg.category ||
                                      item.context_before != seg.context_before ||
                                      item.context_after != seg.context_after;
            if (!text_changed && !meta_changed) continue;
            if (item.page_id != page.page_id) {
                // the item moved; drop it from its previous page listing
                if (auto old = pages_.find(item.page_id); old != pages_.end()) {
                    std::erase(old->second.segment_ids, seg.id);
                }
            }
            item.source_text = seg.text;
            item.page_id = page.page_id;
            item.category = seg.category;
            item.context_before = seg.context_before;
            item.context_after = seg.context_after;
            ++summary.updated;
            if (text_changed) summary.superseded_ids.push_back(seg.id);
        }
    }
    return summary;
}

Item Catalog::materialize(const Entry& entry) const {
    Item item = entry.item;
    item.view_count = entry.views.load();
    return item;
}

bool Catalog::contains(std::string_view id) const {
    std::shared_lock lock(mutex_);
    return items_.find(id) != items_.end();
}

std::optional<Item> Catalog::find(std::string_view id) const {
    std::shared_lock lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) return std::nullopt;
    return materialize(*it->second);
}

Item Catalog::get(std::string_view id) const {
    auto item = find(id);
    if (!item) fail(ErrorCode::not_found, fmt::format("unknown item '{}'", id), {{"item_id", id}});
    return std::move(*item);
}

std::vector<Item> Catalog::items() const {
    std::shared_lock lock(mutex_);
    std::vector<Item> out;
    out.reserve(items_.size());
    for (const auto& [id, entry] : items_) out.push_back(materialize(*entry));
    return out;
}

std::vector<std::string> Catalog::item_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [id, entry] : items_) out.push_back(id);
    return out;
}

std::size_t Catalog::size() const {
    std::shared_lock lock(mutex_);
    return items_.size();
}

std::optional<SourcePage> Catalog::page(std::string_view page_id) const {
    std::shared_lock lock(mutex_);
    const auto it = pages_.find(page_id);
    if (it == pages_.end()) return std::nullopt;
    return it->second;
}

std::vector<SourcePage> Catalog::pages() const {
    std::shared_lock lock(mutex_);
    std::vector<SourcePage> out;
    for (const auto& [id, page] : pages_) out.push_back(page);
    return out;
}

std::uint64_t Catalog::record_view(std::string_view id) {
    std::shared_lock lock(mutex_);
    const auto it = items_.find(id);
    if (it == items_.end()) {
        fail(ErrorCode::not_found, fmt::format("unknown item '{}'", id), {{"item_id", id}});
    }
    return it->second->views.fetch_add(1) + 1;
}

json Catalog::snapshot() const {
    std::shared_lock lock(mutex_);
    json items = json::array();
    for (const auto& [id, entry] : items_) items.push_back(materialize(*entry));
    json pages = json::array();
    for (const auto& [id, page] : pages_) pages.push_back(page);
    return json{{"items", std::move(items)}, {"pages", std::move(pages)}};
}

void Catalog::restore(const json& state) {
    std::unique_lock lock(mutex_);
    items_.clear();
    pages_.clear();
    for (const auto& j : state.at("items")) {
        auto entry = std::make_unique<Entry>();
        Item& item = entry->item;
        item.id = j.at("id").get<std::string>();
        item.source_text = j.at("source_text").get<std::string>();
        item.source_lang = j.at("source_lang").get<std::string>();
        item.page_id = j.at("page_id").get<std::string>();
        const auto category = parse_category(j.at("category").get<std::string>());
        if (!category) fail(ErrorCode::validation, "state: unknown category for " + item.id);
        item.category = *category;
        item.context_before = j.at("context_before").get<std::string>();
        item.context_after = j.at("context_after").get<std::string>();
        item.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        entry->views.store(j.at("view_count").get<std::uint64_t>());
        items_.emplace(item.id, std::move(entry));
    }
    for (const auto& j : state.at("pages")) {
        SourcePage page{j.at("page_id").get<std::string>(), j.at("url").get<std::string>(),
                        j.at("title").get<std::string>(),
                        j.at("segment_ids").get<std::vector<std::string>>()};
        pages_.emplace(page.page_id, std::move(page));
    }
}

std::string context_snippet(const Item& item, std::optional<std::string_view> translated) {
    std::string out;
    const std::string_view display = translated ? *translated : std::string_view(item.source_text);
    out.reserve(item.context_before.size() + display.size() + item.context_after.size() + 4);
    out += item.context_before;
    out += "[[";
    out += display;
    out += "]]";
    out += item.context_after;
    return out;
}

} // namespace tcenter
