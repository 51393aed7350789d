#include "tcenter/review.hpp"

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

using nlohmann::json;

void RubricScores::validate() const {
    for (const auto& field : kRubricFields) {
        const int value = this->*field.member;
        if (value < 0 || value > field.max) {
            fail(ErrorCode::validation,
                 fmt::format("rubric field '{}' must be within 0..{}, got {}", field.name,
                             field.max, value),
                 {{"field", field.name}, {"max", field.max}, {"value", value}});
        }
    }
}

int rubric_total(const RubricScores& rubric) {
    rubric.validate();
    int total = 0;
    for (const auto& field : kRubricFields) total += rubric.*field.member;
    return total;
}

void to_json(json& j, const RubricScores& r) {
    j = json::object();
    for (const auto& field : kRubricFields) j[std::string(field.name)] = r.*field.member;
}

RubricScores rubric_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::validation, "rubric must be an object");
    RubricScores r;
    for (const auto& field : kRubricFields) {
        const auto it = j.find(field.name);
        if (it == j.end() || !it->is_number_integer()) {
            fail(ErrorCode::validation,
                 fmt::format("rubric field '{}' must be an integer", field.name),
                 {{"field", field.name}});
        }
        const auto value = it->get<std::int64_t>();
        if (value < 0 || value > field.max) {
            fail(ErrorCode::validation,
                 fmt::format("rubric field '{}' must be within 0..{}, got {}", field.name,
                             field.max, value),
                 {{"field", field.name}, {"max", field.max}, {"value", value}});
        }
        r.*field.member = static_cast<int>(value);
    }
    return r;
}

void to_json(json& j, const Review& r) {
    j = json{{"review_id", r.review_id},
             {"translation_id", r.translation_id},
             {"reviewer", r.reviewer},
             {"rubric", r.rubric},
             {"total", rubric_total(r.rubric)},
             {"body", r.body ? json(*r.body) : json(nullptr)},
             {"created_at", format_timestamp(r.created_at)}};
}

Review ReviewBook::submit(std::string_view translation_id, std::string_view translation_author,
                          std::string_view reviewer, const RubricScores& rubric,
                          std::optional<std::string> body, Timestamp now) {
    rubric.validate();
    if (reviewer == translation_author) {
        fail(ErrorCode::validation, "translators cannot review their own translation",
             {{"reason", "self_review"}});
    }
    std::lock_guard lock(mutex_);
    auto& list = reviews_[std::string(translation_id)];
    for (Review& existing : list) {
        if (existing.reviewer == reviewer) {
            existing.rubric = rubric;
            existing.body = std::move(body);
            existing.created_at = now;
            return existing;
        }
    }
    list.push_back(Review{ids_.next(), std::string(translation_id), std::string(reviewer), rubric,
                          std::move(body), now});
    return list.back();
}

std::vector<Review> ReviewBook::reviews_of(std::string_view translation_id) const {
    std::lock_guard lock(mutex_);
    const auto it = reviews_.find(translation_id);
    return it == reviews_.end() ? std::vector<Review>{} : it->second;
}

double ReviewBook::quality(std::optional<std::string_view> translation_id) const {
    if (!translation_id) return kUnreviewedQuality;
    std::lock_guard lock(mutex_);
    const auto it = reviews_.find(*translation_id);
    if (it == reviews_.end() || it->second.empty()) return kUnreviewedQuality;
    // one rounding step, so equal means compare equal
    long sum = 0;
    for (const auto& r : it->second) sum += rubric_total(r.rubric);
    return static_cast<double>(sum) /
           (static_cast<double>(kRubricMaxTotal) * static_cast<double>(it->second.size()));
}

json ReviewBook::snapshot() const {
    std::lock_guard lock(mutex_);
    json all = json::array();
    for (const auto& [tid, list] : reviews_) {
        for (const auto& r : list) all.push_back(r);
    }
    return json{{"reviews", std::move(all)}, {"last_review_id", ids_.last()}};
}

void ReviewBook::restore(const json& state) {
    std::lock_guard lock(mutex_);
    reviews_.clear();
    for (const auto& j : state.at("reviews")) {
        Review r{j.at("review_id").get<std::string>(),
                 j.at("translation_id").get<std::string>(),
                 j.at("reviewer").get<std::string>(),
                 rubric_from_json(j.at("rubric")),
                 std::nullopt,
                 parse_timestamp(j.at("created_at").get<std::string>())};
        if (!j.at("body").is_null()) r.body = j["body"].get<std::string>();
        reviews_[r.translation_id].push_back(std::move(r));
    }
    ids_.reset(state.at("last_review_id").get<std::uint64_t>());
}

} // namespace tcenter
