#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "armed/config.hpp"
#include "armed/distill.hpp"
#include "armed/judge.hpp"

namespace armed {

struct AssessmentResult {
    Judgment judgment;
    QueryInterpretation interpretation;
    ConsistencyReport consistency;
    std::vector<std::pair<std::string, long long>> timing_ms;  // per stage
    std::vector<std::string> log;  // degradation events
};

/// Canonical JSON is timing-free so identical inputs and mock scripts yield
/// byte-identical output; pass include_timing for diagnostics.
nlohmann::ordered_json assessment_to_json(const AssessmentResult& result,
                                          bool include_timing = false);

/// End-to-end orchestration: query augmentation and evidence filtering, SPU
/// consistency/standardization/extension, feature derivation, rule recall and
/// the hierarchical judgment. Everything behind the injected backends is
/// deterministic.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    /// The only aborting error is StandardizationRequired; every other backend
    /// problem degrades and is logged into the result.
    AssessmentResult assess(const std::string& query_raw, const RawSPU& spu,
                            const std::vector<ImageAttributes>& inline_image_attrs = {}) const;

    /// Runs the pipeline over benchmark records with the configured
    /// concurrency; output order matches input order. Aborted records become
    /// failed predictions.
    std::vector<std::pair<std::string, EvalLevel>> run_benchmark(
        const std::vector<BenchmarkRecord>& records) const;

    const PipelineConfig& config() const { return config_; }
    const RuleSet& rules() const { return rules_; }
    const BackendSet& backends() const { return backends_; }
    const std::vector<std::string>& prompt_templates() const { return prompt_templates_; }
    const std::vector<std::string>& categories() const { return categories_; }

private:
    PipelineConfig config_;
    Lexicon lexicon_;
    RuleSet rules_;
    std::string rules_hint_;
    BackendSet backends_;
    std::unique_ptr<EvidenceProvider> evidence_;
    ImageAttrStore image_store_;
    std::vector<std::string> prompt_templates_;
    std::vector<std::string> categories_;
};

}  // namespace armed
