#include "tcenter/members.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <fmt/core.h>
#include <sodium.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string to_hex(const unsigned char* data, std::size_t n) {
    std::string out(n * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data, n);
    out.pop_back();
    return out;
}

std::string digest(std::string_view secret) {
    unsigned char out[crypto_generichash_BYTES];
    crypto_generichash(out, sizeof out, reinterpret_cast<const unsigned char*>(secret.data()),
                       secret.size(), nullptr, 0);
    return to_hex(out, sizeof out);
}

} // namespace

std::string random_token() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    unsigned char bytes[32];
    randombytes_buf(bytes, sizeof bytes);
    return to_hex(bytes, sizeof bytes);
}

void to_json(json& j, const Member& m) {
    j = json{{"member_id", m.member_id},
             {"display_name", m.display_name},
             {"languages", m.languages},
             {"contact_opt_in", m.contact_opt_in},
             {"created_at", format_timestamp(m.created_at)}};
    if (m.contact_opt_in) j["contact_info"] = m.contact_info;
}

Member MemberRegistry::add(std::string_view display_name, std::vector<std::string> languages,
                           bool contact_opt_in, std::string contact_info, Timestamp now) {
    std::string name = trim(display_name);
    if (name.empty()) {
        fail(ErrorCode::validation, "display_name is empty", {{"field", "display_name"}});
    }
    std::lock_guard lock(mutex_);
    if (by_name_.contains(name)) {
        fail(ErrorCode::conflict, fmt::format("display name '{}' is taken", name),
             {{"field", "display_name"}});
    }
    Member m{ids_.next(), name, std::move(languages), contact_opt_in, std::move(contact_info),
             now};
    by_name_.emplace(m.display_name, m.member_id);
    return members_.emplace(m.member_id, std::move(m)).first->second;
}

std::optional<Member> MemberRegistry::find(std::string_view member_id) const {
    std::lock_guard lock(mutex_);
    const auto it = members_.find(member_id);
    if (it == members_.end()) return std::nullopt;
    return it->second;
}

std::optional<Member> MemberRegistry::find_by_name(std::string_view display_name) const {
    std::lock_guard lock(mutex_);
    const auto it = by_name_.find(trim(display_name));
    if (it == by_name_.end()) return std::nullopt;
    return members_.find(it->second)->second;
}

Member MemberRegistry::set_contact(std::string_view member_id, bool opt_in,
                                   std::string contact_info) {
    std::lock_guard lock(mutex_);
    const auto it = members_.find(member_id);
    if (it == members_.end()) {
        fail(ErrorCode::not_found, fmt::format("unknown member '{}'", member_id));
    }
    it->second.contact_opt_in = opt_in;
    it->second.contact_info = std::move(contact_info);
    return it->second;
}

std::vector<Member> MemberRegistry::members() const {
    std::lock_guard lock(mutex_);
    std::vector<Member> out;
    for (const auto& [id, m] : members_) out.push_back(m);
    return out;
}

json MemberRegistry::snapshot() const {
    std::lock_guard lock(mutex_);
    json all = json::array();
    for (const auto& [id, m] : members_) {
        json j = m;
        j["contact_info"] = m.contact_info;
        all.push_back(std::move(j));
    }
    return json{{"members", std::move(all)}, {"last_member_id", ids_.last()}};
}

void MemberRegistry::restore(const json& state) {
    std::lock_guard lock(mutex_);
    members_.clear();
    by_name_.clear();
    for (const auto& j : state.at("members")) {
        Member m{j.at("member_id").get<std::string>(),
                 j.at("display_name").get<std::string>(),
                 j.at("languages").get<std::vector<std::string>>(),
                 j.at("contact_opt_in").get<bool>(),
                 j.at("contact_info").get<std::string>(),
                 parse_timestamp(j.at("created_at").get<std::string>())};
        by_name_.emplace(m.display_name, m.member_id);
        members_.emplace(m.member_id, std::move(m));
    }
    ids_.reset(state.at("last_member_id").get<std::uint64_t>());
}

SessionManager::SessionManager() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
}

Session SessionManager::issue(std::string_view member_id, Timestamp now,
                              std::chrono::seconds ttl) {
    Session s{random_token(), std::string(member_id),
              Timestamp{now.millis + std::chrono::milliseconds(ttl).count()}};
    std::lock_guard lock(mutex_);
    // expired entries are pruned lazily here
    std::erase_if(sessions_, [&](const auto& kv) { return kv.second.expires_at <= now; });
    sessions_.emplace(digest(s.token), Entry{s.member_id, s.expires_at});
    return s;
}

std::string SessionManager::authenticate(std::string_view token, Timestamp now) const {
    if (token.empty()) fail(ErrorCode::auth, "missing session token");
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(digest(token));
    if (it == sessions_.end()) fail(ErrorCode::auth, "unknown session token");
    if (it->second.expires_at <= now) fail(ErrorCode::auth, "session expired");
    return it->second.member_id;
}

std::string SessionManager::issue_login_key(std::string_view member_id) {
    std::string key = random_token();
    std::lock_guard lock(mutex_);
    login_keys_[std::string(member_id)] = digest(key);
    return key;
}

bool SessionManager::check_login_key(std::string_view member_id, std::string_view key) const {
    std::lock_guard lock(mutex_);
    const auto it = login_keys_.find(member_id);
    if (it == login_keys_.end()) return false;
    const std::string d = digest(key);
    return d.size() == it->second.size() &&
           sodium_memcmp(d.data(), it->second.data(), d.size()) == 0;
}

json SessionManager::snapshot(Timestamp now) const {
    std::lock_guard lock(mutex_);
    json sessions = json::array();
    for (const auto& [d, e] : sessions_) {
        if (e.expires_at <= now) continue;
        sessions.push_back({{"digest", d},
                            {"member_id", e.member_id},
                            {"expires_at", format_timestamp(e.expires_at)}});
    }
    return json{{"sessions", std::move(sessions)}, {"login_keys", login_keys_}};
}

void SessionManager::restore(const json& state) {
    std::lock_guard lock(mutex_);
    sessions_.clear();
    for (const auto& j : state.at("sessions")) {
        sessions_.emplace(j.at("digest").get<std::string>(),
                          Entry{j.at("member_id").get<std::string>(),
                                parse_timestamp(j.at("expires_at").get<std::string>())});
    }
    login_keys_.clear();
    for (const auto& [member, d] : state.at("login_keys").items()) {
        login_keys_.emplace(member, d.get<std::string>());
    }
}

} // namespace tcenter
