#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcenter/clock.hpp"
#include "tcenter/ids.hpp"

namespace tcenter {

enum class TranslationStatus { current, superseded, stale };

std::string_view to_string(TranslationStatus status) noexcept;

struct Translation {
    std::string translation_id;
    std::string item_id;
    std::string lang;
    std::string text;
    std::string author_id;
    std::uint32_t version = 0;
    TranslationStatus status = TranslationStatus::current;
    Timestamp created_at;
};

struct TranslationComment {
    std::string comment_id;
    std::string item_id;
    std::string lang;
    std::string author_id;
    std::string body;
    Timestamp created_at;
    std::optional<std::string> parent_id;
};

void to_json(nlohmann::json& j, const Translation& t);
void to_json(nlohmann::json& j, const TranslationComment& c);

struct Progress {
    std::string lang;
    std::size_t translated_count = 0;
    std::size_t total_count = 0;
    std::string percent; // one decimal, round-half-up, "0.0" for an empty catalog
};

void to_json(nlohmann::json& j, const Progress& p);

/// 100 * translated / total rounded half-up to one decimal.
std::string format_percent(std::size_t translated, std::size_t total);

// Translation-exchange document:
// {"lang", "generated_at", "items":[{"id","text"|null,"version"|null}]}
struct ExportEntry {
    std::string id;
    std::optional<std::string> text;
    std::optional<std::uint32_t> version;
};

struct TranslationDocument {
    std::string lang;
    std::optional<Timestamp> generated_at;
    std::vector<ExportEntry> items; // ascending id
};

/// Canonical bytes of a translation document (stable key order, 2-space indent,
/// trailing newline).
std::string serialize(const TranslationDocument& doc);
TranslationDocument parse_translation_document(std::string_view text);
TranslationDocument translation_document_from_json(const nlohmann::json& root);

struct TranslationImportSummary {
    std::size_t imported = 0;
    std::size_t unchanged = 0;
    std::size_t untranslated = 0;
};

/// Versioned translations and comment threads per (item, lang).
///
/// Writes to one pair are serialized by that pair's thread mutex; writes to
/// distinct pairs only share the map lock in shared mode.
class TranslationStore {
public:
    TranslationStore() = default;
    TranslationStore(const TranslationStore&) = delete;
    TranslationStore& operator=(const TranslationStore&) = delete;

    /// base_version must equal the current version when one exists; otherwise
    /// it is optional and, if given, must equal the highest version (0 if none).
    /// Throws conflict with detail {"current_version": n}.
    Translation submit(std::string_view item_id, std::string_view lang, std::string_view text,
                       std::string_view author_id, std::optional<std::uint32_t> base_version,
                       Timestamp now);

    std::optional<Translation> current(std::string_view item_id, std::string_view lang) const;
    std::vector<Translation> history(std::string_view item_id, std::string_view lang) const;
    std::optional<Translation> find(std::string_view translation_id) const;

    /// parent_id, if given, must name a comment in the same (item, lang) thread.
    TranslationComment add_comment(std::string_view item_id, std::string_view lang,
                                   std::string_view author_id, std::string_view body,
                                   std::optional<std::string> parent_id, Timestamp now);
    std::vector<TranslationComment> comments(std::string_view item_id,
                                             std::string_view lang) const;

    /// Current translations of the item in every language become stale.
    std::size_t mark_stale(std::string_view item_id);

    std::size_t translated_count(std::string_view lang) const;
    std::vector<Translation> authored_by(std::string_view member_id) const;

    /// Entries for the given item ids (any order; output is sorted by id).
    TranslationDocument export_document(std::string_view lang,
                                        std::vector<std::string> item_ids) const;
    /// Applies an exchange document. Items must already exist (checked by the caller).
    TranslationImportSummary import_document(const TranslationDocument& doc,
                                             std::string_view author_id, Timestamp now);

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    using Key = std::pair<std::string, std::string>;

    struct Thread {
        mutable std::mutex mutex;
        std::vector<Translation> versions; // versions[i].version == i + 1
        std::vector<TranslationComment> comments;

        const Translation* current() const;
    };

    Thread* find_thread(std::string_view item_id, std::string_view lang) const;
    Thread& thread(std::string_view item_id, std::string_view lang);
    Translation append_version(Thread& thread, std::string_view item_id, std::string_view lang,
                               std::string_view text, std::string_view author_id, Timestamp now);

    mutable std::shared_mutex mutex_;
    std::map<Key, std::unique_ptr<Thread>> threads_;

    mutable std::mutex index_mutex_;
    std::map<std::string, Key, std::less<>> by_translation_id_;
    std::map<std::string, Key, std::less<>> by_comment_id_;

    IdSequence translation_ids_{"t"};
    IdSequence comment_ids_{"c"};
};

} // namespace tcenter
