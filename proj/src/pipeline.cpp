#include "armed/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <set>
#include <thread>

#include "armed/errors.hpp"

namespace armed {

namespace {

nlohmann::ordered_json entity_set_to_json(const EntitySet& entities) {
    nlohmann::ordered_json doc;
    auto put = [&](const char* key, const std::optional<std::string>& value) {
        if (value) doc[key] = *value;
    };
    put("brand", entities.brand);
    put("core_name", entities.core_name);
    if (!entities.efficacy.empty()) doc["efficacy"] = entities.efficacy;
    put("category", entities.category);
    put("dosage_form", entities.dosage_form);
    if (!entities.ingredients.empty()) doc["ingredients"] = entities.ingredients;
    put("region", entities.region);
    put("specification", entities.specification);
    put("target_population", entities.target_population);
    return doc;
}

nlohmann::ordered_json rule_trace_to_json(const std::vector<RuleApplication>& trace) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& application : trace) {
        out.push_back({{"rule_id", application.rule_id},
                       {"effect", application.effect},
                       {"from", level_machine_name(application.from)},
                       {"to", level_machine_name(application.to)}});
    }
    return out;
}

nlohmann::ordered_json report_json(const ConsistencyReport& report) {
    nlohmann::ordered_json aspects = nlohmann::ordered_json::array();
    for (const auto& status : report.aspects) {
        aspects.push_back({{"aspect", aspect_name(status.aspect)},
                           {"status", aspect_state_name(status.status)},
                           {"note", status.note}});
    }
    nlohmann::ordered_json doc;
    doc["aspects"] = aspects;
    doc["cheating"] = report.cheating;
    doc["reason"] = report.reason;
    doc["unsupported_name_terms"] = report.unsupported_name_terms;
    return doc;
}

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, long long>>& sink) : sink_(sink) {}

    template <typename F>
    auto run(const char* stage, F&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(stage, start);
        } else {
            auto result = fn();
            record(stage, start);
            return result;
        }
    }

private:
    void record(const char* stage, std::chrono::steady_clock::time_point start) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        sink_.emplace_back(stage, elapsed);
    }

    std::vector<std::pair<std::string, long long>>& sink_;
};

}  // namespace

nlohmann::ordered_json assessment_to_json(const AssessmentResult& result, bool include_timing) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json judgment;
    judgment["level"] = level_name(result.judgment.level);
    judgment["eval_level"] = eval_level_name(to_eval_level(result.judgment.level));
    judgment["branch"] = result.judgment.branch;
    judgment["cheating"] = result.judgment.cheating;
    judgment["rendered"] = result.judgment.rendered;
    judgment["rule_trace"] = rule_trace_to_json(result.judgment.rule_trace);
    doc["judgment"] = judgment;

    nlohmann::ordered_json interpretation;
    interpretation["query"] = result.interpretation.base.raw_text;
    interpretation["normalized_query"] = result.interpretation.base.normalized_text;
    interpretation["entities"] = entity_set_to_json(result.interpretation.entities);
    interpretation["alternative_expressions"] = result.interpretation.alternative_expressions;
    interpretation["keywords"] = result.interpretation.keywords;
    interpretation["topics"] = result.interpretation.topics;
    interpretation["hierarchies"] = result.interpretation.hierarchies;
    interpretation["intent"] = result.interpretation.intent;
    doc["interpretation"] = interpretation;

    doc["consistency"] = report_json(result.consistency);
    doc["log"] = result.log;
    if (include_timing) {
        nlohmann::ordered_json timing;
        for (const auto& [stage, ms] : result.timing_ms) timing[stage] = ms;
        doc["timing_ms"] = timing;
    }
    return doc;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    if (!config_.lexicon_path.empty()) lexicon_ = Lexicon::load(config_.lexicon_path);
    if (!config_.rules_path.empty()) rules_ = load_rules(config_.rules_path);
    if (!config_.image_attrs_path.empty()) image_store_ = ImageAttrStore(config_.image_attrs_path);
    if (!config_.prompts_path.empty()) {
        prompt_templates_ = load_prompt_templates(config_.prompts_path);
    }
    backends_ = config_.build_backends();
    if (!config_.evidence_fixture.empty()) {
        evidence_ = std::make_unique<FixtureEvidenceProvider>(config_.evidence_fixture);
    } else if (!config_.evidence_url.empty()) {
        evidence_ = std::make_unique<HttpEvidenceProvider>(config_.evidence_url,
                                                           config_.evidence_token);
    }
    categories_ = config_.categories.empty() ? default_categories() : config_.categories;

    std::set<std::string> triggers;
    for (const auto& rule : rules_.rules()) triggers.insert(rule.trigger_entity);
    for (const auto& trigger : triggers) {
        if (!rules_hint_.empty()) rules_hint_ += ",";
        rules_hint_ += trigger;
    }
}

AssessmentResult Pipeline::assess(const std::string& query_raw, const RawSPU& spu,
                                  const std::vector<ImageAttributes>& inline_image_attrs) const {
    AssessmentResult result;
    StageTimer timer(result.timing_ms);
    auto* log = &result.log;

    const Query query = timer.run("normalize", [&] { return Query::make(query_raw); });
    const AugmentedQuery augmented =
        timer.run("augment", [&] { return augment_query(query, lexicon_); });

    std::vector<EvidenceSnippet> snippets = timer.run("retrieve", [&] {
        std::vector<EvidenceSnippet> out;
        if (evidence_) {
            try {
                out = evidence_->retrieve(augmented.augmented_text);
            } catch (const Error& e) {
                log->push_back(std::string("evidence retrieval failed: ") + e.what());
            }
        }
        return out;
    });
    snippets = timer.run("score", [&] {
        return score_evidence(augmented, std::move(snippets), backends_, log);
    });
    snippets = timer.run("filter", [&] {
        return filter_evidence(augmented, std::move(snippets), config_.tau, backends_, log);
    });
    result.interpretation = timer.run("interpret", [&] {
        return interpret_query(augmented, snippets, backends_, rules_hint_,
                               config_.max_evidence_chars, log);
    });

    std::vector<ImageAttributes> image_attrs = inline_image_attrs;
    if (image_attrs.empty() && !spu.image_attr_refs.empty()) {
        image_attrs = image_store_.for_refs(spu.image_attr_refs);
    }
    result.consistency = timer.run("detect_cheating", [&] {
        return detect_cheating(spu, image_attrs, backends_, log);
    });
    const std::string standardized = timer.run("standardize", [&] {
        return standardize_name(spu, result.consistency, backends_, log);
    });
    const ExtendedSPU extended = timer.run("extend", [&] {
        return extend_spu(spu, standardized, result.consistency, image_attrs, backends_, log);
    });

    const MatchFeatures features = timer.run(
        "features", [&] { return derive_features(result.interpretation, extended); });
    const RecalledRules recalled = timer.run("rules", [&] {
        return recall_rules(result.interpretation.entities, extended.entities, rules_);
    });
    result.judgment = timer.run("judge", [&] { return judge_relevance(features, recalled); });
    result.judgment.cheating = result.consistency.cheating;
    return result;
}

std::vector<std::pair<std::string, EvalLevel>> Pipeline::run_benchmark(
    const std::vector<BenchmarkRecord>& records) const {
    std::vector<std::pair<std::string, EvalLevel>> out(records.size());
    std::atomic<std::size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(config_.concurrency, static_cast<int>(records.size())));

    auto work = [&] {
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= records.size()) break;
            const BenchmarkRecord& record = records[index];
            RawSPU spu;
            spu.raw_name = record.spu_name;
            spu.cpv = record.cpv;
            spu.category = record.category;
            EvalLevel prediction = EvalLevel::failed;
            try {
                auto result = assess(record.query, spu, record.image_attrs);
                prediction = to_eval_level(result.judgment.level);
            } catch (const Error&) {
                prediction = EvalLevel::failed;  // aborts count against the loss rate
            }
            out[index] = {record.id, prediction};
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& thread : pool) thread.join();
    }
    return out;
}

}  // namespace armed
