#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tcenter/clock.hpp"
#include "tcenter/ids.hpp"

namespace tcenter {

struct Member {
    std::string member_id;
    std::string display_name;
    std::vector<std::string> languages;
    bool contact_opt_in = false;
    std::string contact_info; // only shown when contact_opt_in
    Timestamp created_at;
};

// Public view: contact_info is omitted unless the member opted in.
void to_json(nlohmann::json& j, const Member& m);

class MemberRegistry {
public:
    /// Throws validation for a blank name and conflict for a taken one.
    Member add(std::string_view display_name, std::vector<std::string> languages,
               bool contact_opt_in, std::string contact_info, Timestamp now);
    std::optional<Member> find(std::string_view member_id) const;
    std::optional<Member> find_by_name(std::string_view display_name) const;
    Member set_contact(std::string_view member_id, bool opt_in, std::string contact_info);
    std::vector<Member> members() const; // ascending member_id

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    mutable std::mutex mutex_;
    std::map<std::string, Member, std::less<>> members_;
    std::map<std::string, std::string, std::less<>> by_name_;
    IdSequence ids_{"m"};
};

struct Session {
    std::string token;
    std::string member_id;
    Timestamp expires_at;
};

/// Bearer-token sessions and per-member login keys. Only BLAKE2b digests of
/// tokens and keys are kept, so snapshots never hold usable credentials.
class SessionManager {
public:
    SessionManager();

    Session issue(std::string_view member_id, Timestamp now, std::chrono::seconds ttl);
    /// Member id for a live token; throws auth for unknown or expired tokens.
    std::string authenticate(std::string_view token, Timestamp now) const;

    std::string issue_login_key(std::string_view member_id);
    bool check_login_key(std::string_view member_id, std::string_view key) const;

    nlohmann::json snapshot(Timestamp now) const;
    void restore(const nlohmann::json& state);

private:
    struct Entry {
        std::string member_id;
        Timestamp expires_at;
    };

    mutable std::mutex mutex_;
    std::map<std::string, Entry, std::less<>> sessions_; // digest -> entry
    std::map<std::string, std::string, std::less<>> login_keys_; // member -> digest
};

/// 32 random bytes, hex encoded.
std::string random_token();

} // namespace tcenter
