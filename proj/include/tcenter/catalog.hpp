#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tcenter/clock.hpp"

namespace tcenter {

enum class Category { menu_link, informational_text, button, heading, other };

std::string_view to_string(Category category) noexcept;
std::optional<Category> parse_category(std::string_view text) noexcept;

/// One translatable interface string.
struct Item {
    std::string id;
    std::string source_text;
    std::string source_lang;
    std::string page_id;
    Category category = Category::other;
    std::string context_before;
    std::string context_after;
    std::uint64_t view_count = 0;
    Timestamp created_at;
};

struct SourcePage {
    std::string page_id;
    std::string url;
    std::string title;
    std::vector<std::string> segment_ids;
};

void to_json(nlohmann::json& j, const Item& item);
void to_json(nlohmann::json& j, const SourcePage& page);

// Catalog-exchange document, as parsed from
// {"pages":[{"page_id","url","title","segments":[{"id","text","category",
//            "context_before","context_after"}]}]}
struct CatalogSegment {
    std::string id;
    std::string text;
    Category category = Category::other;
    std::string context_before;
    std::string context_after;
};

struct CatalogPage {
    std::string page_id;
    std::string url;
    std::string title;
    std::vector<CatalogSegment> segments;
};

struct CatalogDocument {
    std::vector<CatalogPage> pages;
};

/// Parses and validates a catalog-exchange document. Syntax errors report
/// line/column; validation errors report the record path ("pages[1].segments[0]").
CatalogDocument parse_catalog_document(std::string_view text);
CatalogDocument catalog_document_from_json(const nlohmann::json& root);
nlohmann::json to_json(const CatalogDocument& doc);

struct ImportSummary {
    std::size_t added = 0;
    std::size_t updated = 0;
    // Items whose source_text changed; their translations must go stale.
    std::vector<std::string> superseded_ids;
};

class Catalog {
public:
    Catalog() = default;
    Catalog(const Catalog&) = delete;
    Catalog& operator=(const Catalog&) = delete;

    // All-or-nothing: the whole document is validated before anything changes.
    ImportSummary import(const CatalogDocument& doc, std::string_view source_lang, Timestamp now);

    bool contains(std::string_view id) const;
    std::optional<Item> find(std::string_view id) const;
    Item get(std::string_view id) const; // throws not_found
    std::vector<Item> items() const;     // ascending id
    std::vector<std::string> item_ids() const;
    std::size_t size() const;

    std::optional<SourcePage> page(std::string_view page_id) const;
    std::vector<SourcePage> pages() const;

    std::uint64_t record_view(std::string_view id);

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    struct Entry {
        Item item; // view_count lives in `views`
        std::atomic<std::uint64_t> views{0};
    };

    Item materialize(const Entry& entry) const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<Entry>, std::less<>> items_;
    std::map<std::string, SourcePage, std::less<>> pages_;
};

/// before + "[[" + display + "]]" + after, where display is the translation
/// when one is given and the source text otherwise.
std::string context_snippet(const Item& item, std::optional<std::string_view> translated);

} // namespace tcenter
