#pragma once

#include <string>
#include <utility>
#include <vector>

#include "armed/core.hpp"
#include "armed/features.hpp"

namespace armed {

enum class TriggerCondition { present, matches_spu, differs_from_spu };
const char* trigger_condition_name(TriggerCondition condition);

enum class RuleEffectKind { cap_at, force_at_least, disqualify };
const char* rule_effect_name(RuleEffectKind kind);

struct RuleEffect {
    RuleEffectKind kind = RuleEffectKind::cap_at;
    RelevanceLevel level = RelevanceLevel::irrelevant;  // ignored for disqualify

    bool operator==(const RuleEffect&) const = default;
};

/// Entity-triggered relevance constraint. The guard is a conjunction of
/// MatchFeatures field names; an empty guard always holds.
struct ExpertRule {
    std::string id;
    std::string trigger_entity;  // EntitySet field name
    TriggerCondition trigger_condition = TriggerCondition::present;
    std::vector<std::string> guard;
    RuleEffect effect;
    int priority = 0;  // unique within a RuleSet; higher applies first
    std::string text;  // human-readable rule

    bool operator==(const ExpertRule&) const = default;
};

class RuleSet {
public:
    RuleSet() = default;
    explicit RuleSet(std::vector<ExpertRule> rules);  // validates uniqueness

    const std::vector<ExpertRule>& rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }
    std::size_t size() const { return rules_.size(); }

    bool operator==(const RuleSet&) const = default;

private:
    std::vector<ExpertRule> rules_;
};

/// Rule file is JSONL: one rule object per line, blank lines and #-comments
/// allowed. Duplicate ids or priorities are rejected.
RuleSet load_rules(const std::string& path);
RuleSet parse_rules(const std::string& text);
std::string serialize_rules(const RuleSet& rules);

struct RecalledRules {
    std::vector<ExpertRule> rules;  // priority descending
    std::vector<std::pair<std::string, std::string>> trace;  // (rule id, why triggered)
};

/// A rule is recalled iff its trigger entity is present on the query side and
/// its condition holds against the SPU side. Scalar fields compare by
/// normalized equality; list fields by set intersection (differs = disjoint,
/// both non-empty).
RecalledRules recall_rules(const EntitySet& query_entities, const EntitySet& spu_entities,
                           const RuleSet& ruleset);

struct RuleApplication {
    std::string rule_id;
    std::string effect;
    RelevanceLevel from;
    RelevanceLevel to;
};

struct RuleApplyResult {
    RelevanceLevel level;
    std::vector<RuleApplication> trace;
};

/// Folds recalled rules over the candidate in priority order. Caps lower the
/// level, floors raise it but never above any cap applied so far, disqualify
/// drops to irrelevant and stops. Result never exceeds the minimum satisfied cap.
RuleApplyResult apply_rules(RelevanceLevel candidate, const RecalledRules& recalled,
                            const MatchFeatures& features);

}  // namespace armed
