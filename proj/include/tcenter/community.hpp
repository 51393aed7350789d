#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcenter/clock.hpp"
#include "tcenter/ids.hpp"

namespace tcenter {

// Glossary ------------------------------------------------------------------

struct GlossaryVariant {
    std::string text;
    std::optional<std::string> region_note;
    std::string author_id;
    Timestamp created_at;
};

struct GlossaryComment {
    std::string comment_id;
    std::string author_id;
    std::string body;
    Timestamp created_at;
    std::optional<std::string> parent_id;
};

struct GlossaryEntry {
    std::string term; // spelling of the first upsert
    std::string definition;
    std::map<std::string, std::vector<GlossaryVariant>> translations; // lang -> variants
    std::vector<GlossaryComment> comments;
    std::optional<std::string> poll_id; // poll discussing a disputed term
    Timestamp created_at;
};

void to_json(nlohmann::json& j, const GlossaryEntry& e);

struct GlossaryUpsert {
    std::string term;
    std::string definition; // replaces the stored one when non-empty
    std::string lang;
    std::string text;
    std::optional<std::string> region_note;
    std::optional<std::string> poll_id;
};

/// Terminology dictionary keyed case-insensitively. Variants per language are
/// append-only so competing regional terms are all kept.
class Glossary {
public:
    GlossaryEntry upsert(const GlossaryUpsert& change, std::string_view author_id, Timestamp now);
    std::optional<GlossaryEntry> lookup(std::string_view term) const;
    std::vector<GlossaryEntry> entries() const; // ascending by folded term
    GlossaryComment add_comment(std::string_view term, std::string_view author_id,
                                std::string_view body, std::optional<std::string> parent_id,
                                Timestamp now);

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    mutable std::mutex mutex_;
    std::map<std::string, GlossaryEntry, std::less<>> entries_;
    IdSequence comment_ids_{"gc"};
};

/// ASCII case folding used for glossary keys.
std::string fold_term(std::string_view term);

// Forums ----------------------------------------------------------------------

enum class ForumKind { general, help, suggestion, language };

std::string_view to_string(ForumKind kind) noexcept;
std::optional<ForumKind> parse_forum_kind(std::string_view text) noexcept;

struct ForumThread {
    std::string thread_id;
    ForumKind kind = ForumKind::general;
    std::optional<std::string> lang; // present iff kind == language
    std::string title;
    std::string author_id;
    Timestamp created_at;
    std::optional<std::string> item_id; // set on threads mirroring item comments
};

struct ForumPost {
    std::string post_id;
    std::string thread_id;
    std::string author_id;
    std::string body;
    Timestamp created_at;
};

void to_json(nlohmann::json& j, const ForumThread& t);
void to_json(nlohmann::json& j, const ForumPost& p);

struct NewThread {
    ForumKind kind = ForumKind::general;
    std::optional<std::string> lang;
    std::string title;
};

class Forums {
public:
    std::pair<ForumThread, ForumPost> create_thread(const NewThread& opening,
                                                    std::string_view author_id,
                                                    std::string_view body, Timestamp now);
    ForumPost post(std::string_view thread_id, std::string_view author_id, std::string_view body,
                   Timestamp now);
    /// Appends to the language thread dedicated to the item, creating it first.
    ForumPost mirror_item_comment(std::string_view lang, std::string_view item_id,
                                  std::string_view author_id, std::string_view body,
                                  Timestamp now);

    std::vector<ForumThread> threads(std::optional<ForumKind> kind,
                                     std::optional<std::string_view> lang) const;
    std::optional<ForumThread> thread(std::string_view thread_id) const;
    std::vector<ForumPost> posts(std::string_view thread_id) const; // throws not_found

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    struct Entry {
        ForumThread thread;
        std::vector<ForumPost> posts;
    };

    ForumPost append(Entry& entry, std::string_view author_id, std::string_view body,
                     Timestamp now);
    Entry& insert_thread(ForumThread thread);

    mutable std::mutex mutex_;
    std::map<std::string, Entry, std::less<>> threads_;
    IdSequence thread_ids_{"th"};
    IdSequence post_ids_{"po"};
};

// Polls -----------------------------------------------------------------------

enum class PollState { open, closed };

struct Poll {
    std::string poll_id;
    std::string question;
    std::vector<std::string> options;
    std::optional<std::string> lang; // nullopt = global scope
    std::map<std::string, std::size_t> votes; // member -> option index
    PollState state = PollState::open;
    std::string created_by;
    Timestamp created_at;

    std::vector<std::size_t> tally() const;
};

void to_json(nlohmann::json& j, const Poll& p);

class Polls {
public:
    Poll create(std::string_view question, std::vector<std::string> options,
                std::optional<std::string> lang, std::string_view creator, Timestamp now);
    /// Records or replaces the member's vote and returns the new tally.
    std::vector<std::size_t> vote(std::string_view poll_id, std::string_view member_id,
                                  std::size_t option);
    Poll close(std::string_view poll_id);
    Poll get(std::string_view poll_id) const;
    std::vector<Poll> list() const;

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    mutable std::mutex mutex_;
    std::map<std::string, Poll, std::less<>> polls_;
    IdSequence ids_{"pl"};
};

} // namespace tcenter
