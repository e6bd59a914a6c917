#include "armed/judge.hpp"

#include <algorithm>
#include <set>

namespace armed {

namespace {

std::optional<bool> compare_scalar(const std::optional<std::string>& query_side,
                                   const std::optional<std::string>& spu_side) {
    if (!query_side || !spu_side) return std::nullopt;
    return *query_side == *spu_side;
}

bool truthy_term(const std::vector<std::string>& terms) {
    for (const auto& term : terms) {
        if (term == "true" || term == "yes" || term == "1") return true;
    }
    return false;
}

}  // namespace

MatchFeatures derive_features(const QueryInterpretation& interp, const ExtendedSPU& spu) {
    MatchFeatures f;
    const std::string spu_name = normalize_text(spu.standardized_name);
    const std::string& query_text = interp.base.normalized_text;

    f.full_containment = contains_full(spu_name, query_text);
    f.all_chars_containment = contains_all_chars(spu_name, query_text);

    f.core_name_match = interp.entities.core_name && spu.entities.core_name &&
                        *interp.entities.core_name == *spu.entities.core_name;

    if (!interp.entities.efficacy.empty()) {
        std::set<std::string> spu_terms(spu.entities.efficacy.begin(),
                                        spu.entities.efficacy.end());
        std::size_t covered = 0;
        for (const auto& term : interp.entities.efficacy) {
            if (spu_terms.count(term)) ++covered;
        }
        f.efficacy_similar = covered > 0;
        f.efficacy_match = covered == interp.entities.efficacy.size();
    }

    // Explicit flag supplied via SPU extension; never inferred.
    auto comp = spu.extended.find("complementary_usage");
    f.complementary_usage = comp != spu.extended.end() && truthy_term(comp->second);

    const auto category_cmp = compare_scalar(interp.entities.category, spu.entities.category);
    f.category_match = category_cmp.value_or(false);
    f.brand_match = compare_scalar(interp.entities.brand, spu.entities.brand);
    f.dosage_form_match =
        compare_scalar(interp.entities.dosage_form, spu.entities.dosage_form);
    f.population_match =
        compare_scalar(interp.entities.target_population, spu.entities.target_population);

    // Absent comparisons are not mismatches; only an explicit false counts.
    f.core_attribute_mismatch = (f.brand_match && !*f.brand_match) ||
                                (f.dosage_form_match && !*f.dosage_form_match) ||
                                (category_cmp && !*category_cmp);
    return f;
}

Judgment judge_relevance(const MatchFeatures& f, const RecalledRules& recalled) {
    Judgment judgment;
    RelevanceLevel candidate;
    if (f.full_containment && f.efficacy_match) {
        candidate = RelevanceLevel::highly_relevant;
        judgment.branch = 1;
    } else if (f.all_chars_containment && f.efficacy_match) {
        candidate = RelevanceLevel::highly_relevant;
        judgment.branch = 2;
    } else if (f.core_name_match && f.efficacy_match && f.category_match) {
        candidate = RelevanceLevel::highly_relevant;
        judgment.branch = 3;
    } else if (f.efficacy_match && f.core_attribute_mismatch) {
        candidate = RelevanceLevel::moderately_relevant;
        judgment.branch = 4;
    } else if (f.efficacy_similar || f.complementary_usage) {
        candidate = RelevanceLevel::weakly_relevant;
        judgment.branch = 5;
    } else {
        candidate = RelevanceLevel::irrelevant;
        judgment.branch = 6;
    }

    auto applied = apply_rules(candidate, recalled, f);
    judgment.level = applied.level;
    judgment.rule_trace = std::move(applied.trace);
    judgment.rendered = render_result(judgment.level);
    return judgment;
}

std::string render_result(RelevanceLevel level) {
    return std::string("<result>") + level_name(level) + "</result>";
}

}  // namespace armed
