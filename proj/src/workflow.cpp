#include "tcenter/workflow.hpp"

#include <cmath>
#include <random>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

namespace {

std::string_view kind_name(RequestTarget::Kind kind) {
    return kind == RequestTarget::Kind::item ? "item" : "page";
}

} // namespace

void PriorityWeights::validate() const {
    const std::pair<const char*, double> fields[] = {
        {"views", views}, {"requests", requests}, {"quality", quality},
        {"untranslated", untranslated}};
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value) || value < 0.0) {
            fail(ErrorCode::validation,
                 fmt::format("priority weight '{}' must be finite and non-negative, got {}",
                             name, value),
                 {{"field", name}});
        }
    }
}

double compute_priority(const PriorityInputs& in, const PriorityWeights& w) {
    const double views = w.views * std::log2(1.0 + static_cast<double>(in.view_count));
    const double requests = w.requests * static_cast<double>(in.request_count);
    if (!in.quality) return views + requests + w.untranslated;
    return views + requests + w.quality * (1.0 - *in.quality);
}

std::size_t pick_uniform(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng);
}

void to_json(json& j, const TranslationRequest& r) {
    j = json{{"request_id", r.request_id},
             {"target", {{"kind", kind_name(r.target.kind)}, {"id", r.target.id}}},
             {"lang", r.lang},
             {"requester", r.requester},
             {"created_at", format_timestamp(r.created_at)},
             {"item_ids", r.item_ids}};
}

void to_json(json& j, const Watch& w) {
    j = json{{"item_id", w.item_id}, {"lang", w.lang}, {"notified", w.notified}};
}

void to_json(json& j, const RequestOutcome& o) {
    json counts = json::array();
    for (const auto& [id, n] : o.counts) counts.push_back({{"item_id", id}, {"request_count", n}});
    j = json{{"created", o.created}, {"request_id", o.request_id}, {"counts", std::move(counts)}};
}

RequestOutcome RequestBook::request(const RequestTarget& target, std::string_view lang,
                                    std::string_view requester,
                                    std::span<const std::string> item_ids, Timestamp now) {
    std::lock_guard lock(mutex_);
    RequestOutcome out;
    auto key = std::make_tuple(std::string(requester), target, std::string(lang));
    if (open_.contains(key)) {
        for (const auto& r : requests_) {
            if (r.requester == requester && r.target == target && r.lang == lang) {
                out.request_id = r.request_id;
                for (const auto& id : r.item_ids) {
                    out.counts.emplace_back(id, requesters_[PairKey{id, lang}].size());
                }
                break;
            }
        }
        return out;
    }
    open_.insert(std::move(key));
    TranslationRequest r{ids_.next(), target, std::string(lang), std::string(requester), now,
                         {item_ids.begin(), item_ids.end()}};
    auto& watches = watches_[std::string(requester)];
    for (const auto& id : r.item_ids) {
        auto& who = requesters_[PairKey{id, lang}];
        who.insert(std::string(requester));
        out.counts.emplace_back(id, who.size());
        const bool watched = std::any_of(watches.begin(), watches.end(), [&](const Watch& w) {
            return w.item_id == id && w.lang == lang;
        });
        if (!watched) watches.push_back(Watch{id, std::string(lang), false});
    }
    out.created = true;
    out.request_id = r.request_id;
    requests_.push_back(std::move(r));
    return out;
}

std::uint64_t RequestBook::request_count(std::string_view item_id, std::string_view lang) const {
    std::lock_guard lock(mutex_);
    const auto it = requesters_.find(PairKey{item_id, lang});
    return it == requesters_.end() ? 0 : it->second.size();
}

std::vector<TranslationRequest> RequestBook::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::vector<Watch> RequestBook::watches(std::string_view member_id) const {
    std::lock_guard lock(mutex_);
    const auto it = watches_.find(member_id);
    return it == watches_.end() ? std::vector<Watch>{} : it->second;
}

json RequestBook::snapshot() const {
    std::lock_guard lock(mutex_);
    json watches = json::object();
    for (const auto& [member, list] : watches_) watches[member] = list;
    return json{{"requests", requests_}, {"watches", std::move(watches)},
                {"last_request_id", ids_.last()}};
}

void RequestBook::restore(const json& state) {
    std::lock_guard lock(mutex_);
    requests_.clear();
    open_.clear();
    requesters_.clear();
    watches_.clear();
    for (const auto& j : state.at("requests")) {
        const auto kind = j.at("target").at("kind").get<std::string>();
        if (kind != "item" && kind != "page") fail(ErrorCode::validation, "state: bad target");
        TranslationRequest r{j.at("request_id").get<std::string>(),
                             {kind == "item" ? RequestTarget::Kind::item
                                             : RequestTarget::Kind::page,
                              j.at("target").at("id").get<std::string>()},
                             j.at("lang").get<std::string>(),
                             j.at("requester").get<std::string>(),
                             parse_timestamp(j.at("created_at").get<std::string>()),
                             j.at("item_ids").get<std::vector<std::string>>()};
        open_.insert(std::make_tuple(r.requester, r.target, r.lang));
        for (const auto& id : r.item_ids) requesters_[PairKey{id, r.lang}].insert(r.requester);
        requests_.push_back(std::move(r));
    }
    for (const auto& [member, list] : state.at("watches").items()) {
        auto& out = watches_[member];
        for (const auto& j : list) {
            out.push_back(Watch{j.at("item_id").get<std::string>(),
                                j.at("lang").get<std::string>(), j.at("notified").get<bool>()});
        }
    }
    ids_.reset(state.at("last_request_id").get<std::uint64_t>());
}

} // namespace tcenter
