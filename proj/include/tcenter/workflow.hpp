#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "tcenter/clock.hpp"
#include "tcenter/ids.hpp"

namespace tcenter {

struct PriorityWeights {
    double views = 1.0;
    double requests = 2.0;
    double quality = 1.0;
    double untranslated = 3.0;

    // Throws validation unless every weight is finite and >= 0.
    void validate() const;
};

/// Inputs to the priority score of one (item, lang).
struct PriorityInputs {
    std::uint64_t view_count = 0;
    std::uint64_t request_count = 0;
    // Quality in [0,1] of the current translation; nullopt when untranslated.
    std::optional<double> quality;
};

/// w_views*log2(1+views) + w_requests*requests, plus w_untranslated when
/// nothing is translated yet, or w_quality*(1 - quality) otherwise.
double compute_priority(const PriorityInputs& in, const PriorityWeights& weights);

/// Descending score, ties broken by ascending id.
template <typename T, typename Score, typename Id>
void sort_by_priority(std::vector<T>& entries, Score score, Id id) {
    std::stable_sort(entries.begin(), entries.end(), [&](const T& a, const T& b) {
        const double sa = score(a), sb = score(b);
        if (sa != sb) return sa > sb;
        return id(a) < id(b);
    });
}

/// Deterministic uniform index in [0, n) for a given seed. n must be > 0.
std::size_t pick_uniform(std::size_t n, std::uint64_t seed);

struct RequestTarget {
    enum class Kind { item, page };
    Kind kind = Kind::item;
    std::string id;

    auto operator<=>(const RequestTarget&) const = default;
};

struct TranslationRequest {
    std::string request_id;
    RequestTarget target;
    std::string lang;
    std::string requester;
    Timestamp created_at;
    std::vector<std::string> item_ids; // items covered when the request was made
};

struct Watch {
    std::string item_id;
    std::string lang;
    bool notified = false;
};

struct RequestOutcome {
    bool created = false; // false for an idempotent repeat
    std::string request_id;
    // request_count after the call, per covered item
    std::vector<std::pair<std::string, std::uint64_t>> counts;
};

void to_json(nlohmann::json& j, const TranslationRequest& r);
void to_json(nlohmann::json& j, const Watch& w);
void to_json(nlohmann::json& j, const RequestOutcome& o);

/// Translation requests, per-(item, lang) requester sets and member watches.
///
/// request_count(item, lang) is the number of distinct members whose requests
/// cover the pair.
class RequestBook {
public:
    RequestOutcome request(const RequestTarget& target, std::string_view lang,
                           std::string_view requester, std::span<const std::string> item_ids,
                           Timestamp now);

    std::uint64_t request_count(std::string_view item_id, std::string_view lang) const;
    std::vector<TranslationRequest> requests() const;
    std::vector<Watch> watches(std::string_view member_id) const;

    /// Watches of the member whose item satisfies `translated` and that were
    /// not yet notified; each one is flipped to notified before returning.
    template <typename Pred>
    std::vector<Watch> acknowledge(std::string_view member_id, Pred translated) {
        std::lock_guard lock(mutex_);
        std::vector<Watch> pending;
        const auto it = watches_.find(member_id);
        if (it == watches_.end()) return pending;
        for (Watch& w : it->second) {
            if (!w.notified && translated(w.item_id, w.lang)) {
                w.notified = true;
                pending.push_back(w);
            }
        }
        return pending;
    }

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

private:
    using PairKey = std::pair<std::string, std::string>;

    mutable std::mutex mutex_;
    std::vector<TranslationRequest> requests_;
    std::set<std::tuple<std::string, RequestTarget, std::string>> open_; // requester, target, lang
    std::map<PairKey, std::set<std::string>> requesters_;
    std::map<std::string, std::vector<Watch>, std::less<>> watches_;
    IdSequence ids_{"rq"};
};

} // namespace tcenter
