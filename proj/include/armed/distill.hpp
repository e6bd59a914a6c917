#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armed/backend.hpp"
#include "armed/core.hpp"

namespace armed {

struct VoteItem {
    std::string id;
    std::string query;
    std::string spu_name;
};

struct VoteRecord {
    std::string item_id;
    std::vector<EvalLevel> labels;  // one per prompt; failed for unparseable output
    std::optional<EvalLevel> majority;  // absent on a top-count tie
    bool unanimous = false;             // all N labels equal and none failed
    int margin = 0;                     // majority count minus runner-up count
    std::string prompt;                 // canonical prompt (first template), kept for SFT export
};

struct MajorityOutcome {
    std::optional<EvalLevel> majority;
    bool unanimous = false;
    int margin = 0;
};

/// Plurality over non-failed labels. Failed labels shrink the effective count
/// rather than voting. Exact top-count ties yield no majority and margin 0.
MajorityOutcome majority(const std::vector<EvalLevel>& labels);

/// Renders every template for the item, runs the judge backend, parses each
/// response. Transport failures become failed labels, never an abort.
VoteRecord vote(const VoteItem& item, const std::vector<std::string>& prompt_templates,
                const BackendSet& backends);

enum class Provenance { unanimous, majority_k, expert_validated };
const char* provenance_name(Provenance provenance);
std::optional<Provenance> provenance_from_name(std::string_view name);

struct DistillSample {
    std::string item_id;
    std::string prompt;
    EvalLevel target = EvalLevel::highly;
    double confidence = 0.0;  // margin / N
    Provenance provenance = Provenance::majority_k;
};

struct CurationPolicy {
    int min_margin = 0;
    bool require_unanimous = true;
};

/// Keeps records that satisfy the policy; tied records never qualify.
std::vector<DistillSample> curate(const std::vector<VoteRecord>& records,
                                  const CurationPolicy& policy);

struct AgreementStats {
    double unanimous_fraction = 0.0;
    double disagreement_overall = 0.0;
    double disagreement_given_unanimous = 0.0;
    double non_highly_fraction_unanimous = 0.0;
    double non_highly_fraction_split = 0.0;
};

/// gold maps item_id -> label and is required for the disagreement fields
/// (they stay 0 without it). Throws EmptyInput on an empty record list.
AgreementStats agreement_stats(const std::vector<VoteRecord>& records,
                               const std::map<std::string, EvalLevel>* gold = nullptr);

/// Writes JSONL {prompt, completion, confidence, provenance}; the completion
/// is the rendered four-level representative of the target. Partial output is
/// removed on failure. Returns lines written.
std::size_t export_sft(const std::vector<DistillSample>& samples, const std::string& path);
std::vector<DistillSample> import_sft(const std::string& path);

/// Prompt template file: JSON array of template strings with {query}/{spu}
/// placeholders.
std::vector<std::string> load_prompt_templates(const std::string& path);

/// Items file: JSONL of {"id", "query", "spu_name"}.
std::vector<VoteItem> load_vote_items(const std::string& path);

void write_vote_log(const std::vector<VoteRecord>& records, const std::string& path);
std::vector<VoteRecord> load_vote_log(const std::string& path);

}  // namespace armed
