#pragma once

#include <map>
#include <string>
#include <vector>

namespace armed {

// Prompt formats are stable so mock scripts can key on them (prefix matching
// usually keys on everything up to the first variable-free line break).

std::string similarity_prompt(const std::string& query_text, const std::string& source_id,
                              const std::string& snippet_text);

std::string consistency_prompt(const std::string& query_text, const std::string& source_id,
                               const std::string& snippet_text);

std::string ner_prompt(const std::string& augmented_text, const std::string& evidence_digest,
                       const std::string& rules_hint);

std::string image_attrs_prompt(const std::string& raw_name,
                               const std::vector<std::string>& image_refs);

std::string standardize_prompt(const std::string& raw_name,
                               const std::vector<std::string>& unsupported_terms);

std::string extend_prompt(const std::string& standardized_name,
                          const std::map<std::string, std::string>& cpv,
                          const std::string& image_summary);

/// Replaces every {query} and {spu} placeholder in a judge template.
std::string render_judge_prompt(const std::string& prompt_template, const std::string& query,
                                const std::string& spu_name);

}  // namespace armed
