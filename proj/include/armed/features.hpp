#pragma once

#include <optional>
#include <string_view>

namespace armed {

/// Boolean evidence the hierarchical judgment runs on. The three optional
/// attribute comparisons are absent when either side lacks the entity;
/// absence is not a mismatch.
struct MatchFeatures {
    bool full_containment = false;
    bool all_chars_containment = false;
    bool core_name_match = false;
    bool efficacy_match = false;    // query efficacy terms all covered by the SPU
    bool efficacy_similar = false;  // at least one shared efficacy term
    bool complementary_usage = false;
    bool category_match = false;
    std::optional<bool> brand_match;
    std::optional<bool> dosage_form_match;
    std::optional<bool> population_match;
    bool core_attribute_mismatch = false;  // some core attribute explicitly differs

    bool operator==(const MatchFeatures&) const = default;
};

/// Looks a feature up by its field name (used by rule guards).
/// Plain bools come back as engaged optionals; unknown names as nullopt.
std::optional<bool> feature_by_name(const MatchFeatures& features, std::string_view name);

bool is_feature_name(std::string_view name);

}  // namespace armed
