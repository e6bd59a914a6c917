#include "armed/rules.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "armed/errors.hpp"

namespace armed {

bool is_feature_name(std::string_view name) {
    static const std::set<std::string_view> kNames = {
        "full_containment", "all_chars_containment", "core_name_match",
        "efficacy_match",   "efficacy_similar",      "complementary_usage",
        "category_match",   "brand_match",           "dosage_form_match",
        "population_match", "core_attribute_mismatch",
    };
    return kNames.count(name) > 0;
}

std::optional<bool> feature_by_name(const MatchFeatures& f, std::string_view name) {
    if (name == "full_containment") return f.full_containment;
    if (name == "all_chars_containment") return f.all_chars_containment;
    if (name == "core_name_match") return f.core_name_match;
    if (name == "efficacy_match") return f.efficacy_match;
    if (name == "efficacy_similar") return f.efficacy_similar;
    if (name == "complementary_usage") return f.complementary_usage;
    if (name == "category_match") return f.category_match;
    if (name == "brand_match") return f.brand_match;
    if (name == "dosage_form_match") return f.dosage_form_match;
    if (name == "population_match") return f.population_match;
    if (name == "core_attribute_mismatch") return f.core_attribute_mismatch;
    return std::nullopt;
}

const char* trigger_condition_name(TriggerCondition condition) {
    switch (condition) {
        case TriggerCondition::present: return "present";
        case TriggerCondition::matches_spu: return "matches_spu";
        case TriggerCondition::differs_from_spu: return "differs_from_spu";
    }
    return "present";
}

const char* rule_effect_name(RuleEffectKind kind) {
    switch (kind) {
        case RuleEffectKind::cap_at: return "cap_at";
        case RuleEffectKind::force_at_least: return "force_at_least";
        case RuleEffectKind::disqualify: return "disqualify";
    }
    return "cap_at";
}

namespace {

TriggerCondition trigger_condition_from_name(const std::string& name, std::size_t line_no) {
    if (name == "present") return TriggerCondition::present;
    if (name == "matches_spu") return TriggerCondition::matches_spu;
    if (name == "differs_from_spu") return TriggerCondition::differs_from_spu;
    raise(Errc::parse_error,
          "line " + std::to_string(line_no) + ": unknown trigger_condition '" + name + "'");
}

RuleEffectKind effect_kind_from_name(const std::string& name, std::size_t line_no) {
    if (name == "cap_at") return RuleEffectKind::cap_at;
    if (name == "force_at_least") return RuleEffectKind::force_at_least;
    if (name == "disqualify") return RuleEffectKind::disqualify;
    raise(Errc::parse_error,
          "line " + std::to_string(line_no) + ": unknown effect '" + name + "'");
}

std::vector<std::string> parse_guard(const nlohmann::json& value, std::size_t line_no) {
    std::vector<std::string> names;
    if (value.is_null()) return names;
    if (value.is_string()) {
        // "a AND b AND c" (AND case-insensitive)
        std::istringstream in(value.get<std::string>());
        std::string word;
        while (in >> word) {
            std::string lower = word;
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (lower == "and") continue;
            names.push_back(word);
        }
    } else if (value.is_array()) {
        for (const auto& item : value) names.push_back(item.get<std::string>());
    } else {
        raise(Errc::parse_error,
              "line " + std::to_string(line_no) + ": guard must be a string or array");
    }
    for (const auto& name : names) {
        if (!is_feature_name(name)) {
            raise(Errc::parse_error,
                  "line " + std::to_string(line_no) + ": unknown guard feature '" + name + "'");
        }
    }
    return names;
}

}  // namespace

RuleSet::RuleSet(std::vector<ExpertRule> rules) : rules_(std::move(rules)) {
    std::set<std::string> ids;
    std::set<int> priorities;
    for (const auto& rule : rules_) {
        if (!ids.insert(rule.id).second) {
            raise(Errc::duplicate_rule_id, "duplicate rule id '" + rule.id + "'");
        }
        if (!priorities.insert(rule.priority).second) {
            raise(Errc::duplicate_rule_id,
                  "duplicate rule priority " + std::to_string(rule.priority));
        }
    }
}

RuleSet parse_rules(const std::string& text) {
    std::vector<ExpertRule> rules;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": not a JSON object");
        }
        ExpertRule rule;
        rule.id = doc.value("id", "");
        if (rule.id.empty()) {
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": missing rule id");
        }
        rule.trigger_entity = doc.value("trigger_entity", "");
        if (!is_entity_field_name(rule.trigger_entity)) {
            raise(Errc::parse_error, "line " + std::to_string(line_no) +
                                         ": unknown trigger_entity '" + rule.trigger_entity + "'");
        }
        rule.trigger_condition =
            trigger_condition_from_name(doc.value("trigger_condition", "present"), line_no);
        rule.guard = parse_guard(doc.contains("guard") ? doc.at("guard") : nlohmann::json(),
                                 line_no);
        rule.effect.kind = effect_kind_from_name(doc.value("effect", ""), line_no);
        if (rule.effect.kind == RuleEffectKind::disqualify) {
            rule.effect.level = RelevanceLevel::irrelevant;
        } else {
            auto level = level_from_machine_name(doc.value("level", ""));
            if (!level) {
                raise(Errc::parse_error,
                      "line " + std::to_string(line_no) + ": missing or unknown level");
            }
            rule.effect.level = *level;
        }
        if (!doc.contains("priority") || !doc.at("priority").is_number_integer()) {
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": missing priority");
        }
        rule.priority = doc.at("priority").get<int>();
        rule.text = doc.value("text", "");
        rules.push_back(std::move(rule));
    }
    return RuleSet(std::move(rules));
}

RuleSet load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open rule file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_rules(buffer.str());
}

std::string serialize_rules(const RuleSet& ruleset) {
    std::string out;
    for (const auto& rule : ruleset.rules()) {
        nlohmann::ordered_json doc;
        doc["id"] = rule.id;
        doc["trigger_entity"] = rule.trigger_entity;
        doc["trigger_condition"] = trigger_condition_name(rule.trigger_condition);
        std::string guard;
        for (const auto& name : rule.guard) {
            if (!guard.empty()) guard += " AND ";
            guard += name;
        }
        doc["guard"] = guard;
        doc["effect"] = rule_effect_name(rule.effect.kind);
        if (rule.effect.kind != RuleEffectKind::disqualify) {
            doc["level"] = level_machine_name(rule.effect.level);
        }
        doc["priority"] = rule.priority;
        doc["text"] = rule.text;
        out += doc.dump();
        out += '\n';
    }
    return out;
}

RecalledRules recall_rules(const EntitySet& query_entities, const EntitySet& spu_entities,
                           const RuleSet& ruleset) {
    RecalledRules out;
    for (const auto& rule : ruleset.rules()) {
        const EntityFieldView query_side = entity_field(query_entities, rule.trigger_entity);
        if (!query_side.present) continue;
        const EntityFieldView spu_side = entity_field(spu_entities, rule.trigger_entity);

        bool triggered = false;
        std::string why;
        switch (rule.trigger_condition) {
            case TriggerCondition::present:
                triggered = true;
                why = rule.trigger_entity + " present in query";
                break;
            case TriggerCondition::matches_spu:
            case TriggerCondition::differs_from_spu: {
                if (!spu_side.present) break;
                std::set<std::string> a(query_side.values.begin(), query_side.values.end());
                bool overlap = false;
                for (const auto& value : spu_side.values) {
                    if (a.count(value)) {
                        overlap = true;
                        break;
                    }
                }
                if (rule.trigger_condition == TriggerCondition::matches_spu) {
                    triggered = overlap;
                    why = rule.trigger_entity + " matches spu";
                } else {
                    triggered = !overlap;
                    why = rule.trigger_entity + " differs from spu";
                }
                break;
            }
        }
        if (triggered) {
            out.rules.push_back(rule);
            out.trace.emplace_back(rule.id, why);
        }
    }
    std::stable_sort(out.rules.begin(), out.rules.end(),
                     [](const ExpertRule& a, const ExpertRule& b) {
                         return a.priority > b.priority;
                     });
    return out;
}

namespace {

bool guard_holds(const std::vector<std::string>& guard, const MatchFeatures& features) {
    for (const auto& name : guard) {
        auto value = feature_by_name(features, name);
        if (!value || !*value) return false;  // absent optionals fail the guard
    }
    return true;
}

}  // namespace

RuleApplyResult apply_rules(RelevanceLevel candidate, const RecalledRules& recalled,
                            const MatchFeatures& features) {
    RuleApplyResult result;
    result.level = candidate;
    RelevanceLevel running_cap = RelevanceLevel::highly_relevant;

    for (const auto& rule : recalled.rules) {
        if (!guard_holds(rule.guard, features)) continue;
        const RelevanceLevel from = result.level;
        bool stop = false;
        switch (rule.effect.kind) {
            case RuleEffectKind::cap_at:
                running_cap = std::min(running_cap, rule.effect.level);
                result.level = std::min(result.level, rule.effect.level);
                break;
            case RuleEffectKind::force_at_least:
                // A floor can never push past a cap applied earlier.
                result.level = std::min(std::max(result.level, rule.effect.level), running_cap);
                break;
            case RuleEffectKind::disqualify:
                result.level = RelevanceLevel::irrelevant;
                stop = true;
                break;
        }
        result.trace.push_back(
            {rule.id, rule_effect_name(rule.effect.kind), from, result.level});
        if (stop) break;
    }
    return result;
}

}  // namespace armed
