#pragma once

#include <array>
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

/// Thirteen-point translation quality rubric: structure (0-3), vocabulary
/// cognates (0-3), meanings (0-1), spellings (0-1), style consistency (0-1),
/// punctuation and abbreviations (0-1), message (0-3).
struct RubricScores {
    int structure = 0;
    int cognates = 0;
    int meanings = 0;
    int spellings = 0;
    int consistency = 0;
    int punctuation = 0;
    int message = 0;

    // Throws validation naming the first out-of-range field.
    void validate() const;

    bool operator==(const RubricScores&) const = default;
};

struct RubricField {
    std::string_view name;
    int max;
    int RubricScores::*member;
};

inline constexpr std::array<RubricField, 7> kRubricFields{{
    {"structure", 3, &RubricScores::structure},
    {"cognates", 3, &RubricScores::cognates},
    {"meanings", 1, &RubricScores::meanings},
    {"spellings", 1, &RubricScores::spellings},
    {"consistency", 1, &RubricScores::consistency},
    {"punctuation", 1, &RubricScores::punctuation},
    {"message", 3, &RubricScores::message},
}};

inline constexpr int kRubricMaxTotal = 13;

/// Sum of the seven category scores. Validates first.
int rubric_total(const RubricScores& rubric);

void to_json(nlohmann::json& j, const RubricScores& r);
/// Requires all seven fields as integers; validates ranges.
RubricScores rubric_from_json(const nlohmann::json& j);

struct Review {
    std::string review_id;
    std::string translation_id;
    std::string reviewer;
    RubricScores rubric;
    std::optional<std::string> body;
    Timestamp created_at;
};

void to_json(nlohmann::json& j, const Review& r);

/// Reviews bound to translation versions. One review per (reviewer, translation);
/// resubmitting replaces it.
class ReviewBook {
public:
    Review submit(std::string_view translation_id, std::string_view translation_author,
                  std::string_view reviewer, const RubricScores& rubric,
                  std::optional<std::string> body, Timestamp now);

    std::vector<Review> reviews_of(std::string_view translation_id) const;

    /// Mean of total/13 over the translation's reviews; 0.5 with no reviews
    /// or no translation.
    double quality(std::optional<std::string_view> translation_id) const;

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& state);

    static constexpr double kUnreviewedQuality = 0.5;

private:
    mutable std::mutex mutex_;
    // translation_id -> reviews in submission order of first review
    std::map<std::string, std::vector<Review>, std::less<>> reviews_;
    IdSequence ids_{"rv"};
};

} // namespace tcenter
