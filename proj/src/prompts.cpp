#include "armed/prompts.hpp"

namespace armed {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string similarity_prompt(const std::string& query_text, const std::string& source_id,
                              const std::string& snippet_text) {
    return "score similarity\nquery: " + query_text + "\nevidence[" + source_id +
           "]: " + snippet_text + "\nanswer with a decimal between 0 and 1";
}

std::string consistency_prompt(const std::string& query_text, const std::string& source_id,
                               const std::string& snippet_text) {
    return "judge consistency\nquery: " + query_text + "\nevidence[" + source_id +
           "]: " + snippet_text + "\nanswer consistent or inconsistent";
}

std::string ner_prompt(const std::string& augmented_text, const std::string& evidence_digest,
                       const std::string& rules_hint) {
    return "extract entities\nquery: " + augmented_text + "\nevidence: " + evidence_digest +
           "\nrules: " + rules_hint + "\nanswer with a json object";
}

std::string image_attrs_prompt(const std::string& raw_name,
                               const std::vector<std::string>& image_refs) {
    return "extract image attributes\nspu: " + raw_name + "\nimages: " + join(image_refs, ",") +
           "\nanswer with a json array of attribute objects";
}

std::string standardize_prompt(const std::string& raw_name,
                               const std::vector<std::string>& unsupported_terms) {
    return "standardize name\nspu: " + raw_name + "\nunsupported: " +
           join(unsupported_terms, ",") + "\nanswer with the cleaned product name";
}

std::string extend_prompt(const std::string& standardized_name,
                          const std::map<std::string, std::string>& cpv,
                          const std::string& image_summary) {
    std::string cpv_text;
    for (const auto& [key, value] : cpv) {
        if (!cpv_text.empty()) cpv_text += ";";
        cpv_text += key + "=" + value;
    }
    return "extend attributes\nspu: " + standardized_name + "\ncpv: " + cpv_text +
           "\nimage: " + image_summary + "\nanswer with a json object";
}

std::string render_judge_prompt(const std::string& prompt_template, const std::string& query,
                                const std::string& spu_name) {
    std::string out = prompt_template;
    replace_all(out, "{query}", query);
    replace_all(out, "{spu}", spu_name);
    return out;
}

}  // namespace armed
