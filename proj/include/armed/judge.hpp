#pragma once

#include <string>
#include <vector>

#include "armed/core.hpp"
#include "armed/features.hpp"
#include "armed/query_pipeline.hpp"
#include "armed/rules.hpp"
#include "armed/spu_pipeline.hpp"

namespace armed {

struct Judgment {
    RelevanceLevel level = RelevanceLevel::irrelevant;
    int branch = 6;  // 1..6, which cascade branch produced the pre-rule candidate
    std::vector<RuleApplication> rule_trace;
    bool cheating = false;  // carried from the SPU consistency report
    std::string rendered;
};

/// String features come from the containment predicates on the standardized
/// SPU name vs the normalized query; semantic features from entity-set
/// comparison. Optional attribute matches stay absent when either side lacks
/// the entity.
MatchFeatures derive_features(const QueryInterpretation& interp, const ExtendedSPU& spu);

/// The hierarchical cascade, evaluated strictly in order:
///   1 full containment + efficacy match            -> highly
///   2 all query chars in name + efficacy match     -> highly
///   3 core name + efficacy + category match        -> highly
///   4 efficacy match but a core attribute differs  -> moderately
///   5 efficacy similar or complementary usage      -> weakly
///   6 otherwise                                    -> irrelevant
/// The candidate then passes through the recalled rules.
Judgment judge_relevance(const MatchFeatures& features, const RecalledRules& recalled);

/// "<result>" + canonical level name + "</result>".
std::string render_result(RelevanceLevel level);

}  // namespace armed
