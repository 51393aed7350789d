#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcenter/catalog.hpp"
#include "tcenter/clock.hpp"
#include "tcenter/community.hpp"
#include "tcenter/members.hpp"
#include "tcenter/persistence.hpp"
#include "tcenter/review.hpp"
#include "tcenter/store.hpp"
#include "tcenter/workflow.hpp"

namespace tcenter {

/// A target language with the characters offered by the translate page palette.
struct Language {
    std::string code;
    std::string name;
    std::vector<std::string> palette;
};

void to_json(nlohmann::json& j, const Language& l);

struct CenterOptions {
    std::vector<Language> languages;
    std::string source_lang = "en";
    PriorityWeights weights;
    bool auto_forum_mirror = true;
    std::chrono::seconds session_ttl{24 * 3600};
    std::vector<std::string> admins; // display names with the administrator role

    void validate() const;
};

enum class ItemFilter { untranslated, translated, all };
enum class ItemOrder { priority, id };

std::optional<ItemFilter> parse_item_filter(std::string_view text) noexcept;
std::optional<ItemOrder> parse_item_order(std::string_view text) noexcept;

struct ListedItem {
    Item item;
    bool translated = false;
    double priority = 0.0;
    std::uint64_t request_count = 0;
};

struct PreviewSegment {
    std::string item_id;
    std::string text;
    bool translated = false;
    bool highlighted = false;
};

struct AuthoredEntry {
    std::string item_id;
    std::string lang;
    std::uint32_t version = 0;
    std::string translation_id;
};

struct Binder {
    std::string member_id;
    std::vector<AuthoredEntry> translated_items;
    std::vector<Watch> watches;       // state after acknowledgement
    std::vector<Watch> notifications; // delivered by this call
};

struct DirectoryEntry {
    std::string member_id;
    std::string display_name;
    std::optional<std::string> contact_info;
    std::size_t items_translated_count = 0;
};

struct Registration {
    Member member;
    Session session;
    std::string login_key;
};

struct ImportReport {
    enum class Kind { catalog, translations };
    Kind kind = Kind::catalog;
    ImportSummary catalog;
    TranslationImportSummary translations;

    std::string describe() const; // "3 added, 0 updated"
};

void to_json(nlohmann::json& j, const ListedItem& e);
void to_json(nlohmann::json& j, const PreviewSegment& s);
void to_json(nlohmann::json& j, const Binder& b);
void to_json(nlohmann::json& j, const DirectoryEntry& d);
void to_json(nlohmann::json& j, const ImportReport& r);

/// The translation center: catalog, versioned store, workflow, reviews and
/// community spaces behind one facade, optionally backed by a data directory.
///
/// Mutations hold the state gate in shared mode, so they run concurrently and
/// rely on each module's own locking. Snapshots take the gate exclusively and
/// therefore see a consistent cut. With a data directory attached, every
/// mutation returns only after a snapshot containing it is durable.
class TranslationCenter {
public:
    explicit TranslationCenter(CenterOptions options, Clock clock = system_clock());
    /// Restores state from the directory; a corrupt snapshot throws Error(io).
    TranslationCenter(CenterOptions options, Clock clock, DataDirectory& storage);

    TranslationCenter(const TranslationCenter&) = delete;
    TranslationCenter& operator=(const TranslationCenter&) = delete;

    const CenterOptions& options() const noexcept { return options_; }
    const Language& language(std::string_view code) const; // throws not_found
    bool is_admin(std::string_view member_id) const;

    // catalog
    ImportSummary import_catalog(const CatalogDocument& doc);
    TranslationImportSummary import_translations(const TranslationDocument& doc,
                                                 std::string_view author_id);
    /// Detects the document kind ("pages" vs "items") and imports it.
    ImportReport import_document(std::string_view text, std::string_view author_id);

    std::vector<ListedItem> list_items(std::string_view lang, ItemFilter filter,
                                       ItemOrder order) const;
    Item item(std::string_view item_id) const;
    std::optional<SourcePage> page(std::string_view page_id) const;
    std::uint64_t record_view(std::string_view item_id);
    std::string context_snippet(std::string_view item_id, std::string_view lang) const;
    /// Every segment of the item's page, translated where possible, with the
    /// item itself highlighted.
    std::vector<PreviewSegment> page_preview(std::string_view item_id,
                                             std::string_view lang) const;

    // store
    Translation submit_translation(std::string_view item_id, std::string_view lang,
                                   std::string_view text, std::string_view author_id,
                                   std::optional<std::uint32_t> base_version);
    std::optional<Translation> current_translation(std::string_view item_id,
                                                   std::string_view lang) const;
    std::vector<Translation> translation_history(std::string_view item_id,
                                                 std::string_view lang) const;
    std::optional<Translation> translation(std::string_view translation_id) const;
    TranslationComment add_comment(std::string_view item_id, std::string_view lang,
                                   std::string_view author_id, std::string_view body,
                                   std::optional<std::string> parent_id);
    std::vector<TranslationComment> comments(std::string_view item_id,
                                             std::string_view lang) const;
    Progress progress(std::string_view lang) const;
    TranslationDocument export_translations(std::string_view lang) const;

    // workflow
    PriorityInputs priority_inputs(std::string_view item_id, std::string_view lang) const;
    double priority(std::string_view item_id, std::string_view lang) const;
    Item next_random_item(std::string_view lang, std::uint64_t seed) const;
    RequestOutcome request_translation(const RequestTarget& target, std::string_view lang,
                                       std::string_view requester);
    Binder binder_of(std::string_view member_id);

    // review
    Review submit_review(std::string_view translation_id, std::string_view reviewer,
                         const RubricScores& rubric, std::optional<std::string> body);
    std::vector<Review> reviews(std::string_view translation_id) const;
    double quality(std::string_view item_id, std::string_view lang) const;

    // community
    GlossaryEntry glossary_upsert(const GlossaryUpsert& change, std::string_view author_id);
    std::optional<GlossaryEntry> glossary_lookup(std::string_view term) const;
    std::vector<GlossaryEntry> glossary() const;
    GlossaryComment glossary_comment(std::string_view term, std::string_view author_id,
                                     std::string_view body, std::optional<std::string> parent_id);

    std::pair<ForumThread, ForumPost> create_thread(const NewThread& opening,
                                                    std::string_view author_id,
                                                    std::string_view body);
    ForumPost forum_post(std::string_view thread_id, std::string_view author_id,
                         std::string_view body);
    std::vector<ForumThread> forum_threads(std::optional<ForumKind> kind,
                                           std::optional<std::string_view> lang) const;
    std::optional<ForumThread> forum_thread(std::string_view thread_id) const;
    std::vector<ForumPost> forum_posts(std::string_view thread_id) const;

    Poll create_poll(std::string_view question, std::vector<std::string> options,
                     std::optional<std::string> lang, std::string_view creator);
    std::vector<std::size_t> poll_vote(std::string_view poll_id, std::string_view member_id,
                                       std::size_t option);
    Poll close_poll(std::string_view poll_id);
    Poll poll(std::string_view poll_id) const;
    std::vector<Poll> polls() const;

    std::vector<DirectoryEntry> directory_list() const;

    // members and sessions
    Registration register_member(std::string_view display_name,
                                 std::vector<std::string> languages, bool contact_opt_in = false,
                                 std::string contact_info = {});
    Session login(std::string_view display_name, std::string_view login_key);
    std::string authenticate(std::string_view token) const; // member id
    Member set_contact(std::string_view member_id, bool opt_in, std::string contact_info);
    std::optional<Member> member(std::string_view member_id) const;

    // state
    nlohmann::json snapshot() const;
    void flush();
    /// Human-readable violations of the cross-module invariants; empty when
    /// the state is sound.
    std::vector<std::string> verify_invariants() const;

private:
    void require_language(std::string_view lang) const;
    Member require_member(std::string_view member_id) const;
    Item require_item(std::string_view item_id) const;

    nlohmann::json snapshot_locked() const;
    void restore(const nlohmann::json& state);

    template <typename F>
    auto mutate(F&& body);
    void persist(std::uint64_t generation);
    Timestamp now() const { return clock_(); }

    CenterOptions options_;
    Clock clock_;
    DataDirectory* storage_ = nullptr;

    Catalog catalog_;
    TranslationStore store_;
    RequestBook requests_;
    ReviewBook reviews_;
    Glossary glossary_;
    Forums forums_;
    Polls polls_;
    MemberRegistry members_;
    SessionManager sessions_;

    mutable std::shared_mutex gate_;
    std::atomic<std::uint64_t> generation_{0};
    std::mutex persist_mutex_;
    std::condition_variable persist_cv_;
    std::uint64_t durable_generation_ = 0;
    bool writing_ = false;
};

} // namespace tcenter

namespace tcenter {

/// Invariant check over a serialized state (as produced by
/// TranslationCenter::snapshot or stored in a data directory).
std::vector<std::string> verify_state(const nlohmann::json& state);

} // namespace tcenter
