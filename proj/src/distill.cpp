#include "armed/distill.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "armed/errors.hpp"
#include "armed/judge.hpp"
#include "armed/prompts.hpp"

namespace armed {

const char* provenance_name(Provenance provenance) {
    switch (provenance) {
        case Provenance::unanimous: return "unanimous";
        case Provenance::majority_k: return "majority_k";
        case Provenance::expert_validated: return "expert_validated";
    }
    return "majority_k";
}

std::optional<Provenance> provenance_from_name(std::string_view name) {
    if (name == "unanimous") return Provenance::unanimous;
    if (name == "majority_k") return Provenance::majority_k;
    if (name == "expert_validated") return Provenance::expert_validated;
    return std::nullopt;
}

MajorityOutcome majority(const std::vector<EvalLevel>& labels) {
    if (labels.empty()) raise(Errc::empty_input, "majority needs at least one label");
    std::array<int, 3> counts{0, 0, 0};  // highly, less, irrelevant
    for (EvalLevel label : labels) {
        switch (label) {
            case EvalLevel::highly: ++counts[0]; break;
            case EvalLevel::less: ++counts[1]; break;
            case EvalLevel::irrelevant: ++counts[2]; break;
            case EvalLevel::failed: break;  // a parse failure is not an opinion
        }
    }
    int best = -1;
    int best_count = 0;
    int second_count = 0;
    for (int i = 0; i < 3; ++i) {
        if (counts[i] > best_count) {
            second_count = best_count;
            best_count = counts[i];
            best = i;
        } else if (counts[i] > second_count) {
            second_count = counts[i];
        }
    }
    MajorityOutcome outcome;
    if (best_count == 0 || best_count == second_count) {
        // all failed, or an exact top tie
        return outcome;
    }
    static constexpr EvalLevel kLevels[3] = {EvalLevel::highly, EvalLevel::less,
                                             EvalLevel::irrelevant};
    outcome.majority = kLevels[best];
    outcome.margin = best_count - second_count;
    outcome.unanimous = best_count == static_cast<int>(labels.size());
    return outcome;
}

VoteRecord vote(const VoteItem& item, const std::vector<std::string>& prompt_templates,
                const BackendSet& backends) {
    if (prompt_templates.empty()) raise(Errc::empty_input, "vote needs at least one prompt");
    VoteRecord record;
    record.item_id = item.id;
    record.prompt = render_judge_prompt(prompt_templates.front(), item.query, item.spu_name);
    for (const auto& prompt_template : prompt_templates) {
        const std::string prompt = render_judge_prompt(prompt_template, item.query, item.spu_name);
        EvalLevel label = EvalLevel::failed;
        try {
            auto response = backends.complete(Role::judge, prompt);
            auto parsed = parse_result(response.text);
            if (parsed.level) label = to_eval_level(*parsed.level);
        } catch (const Error&) {
            label = EvalLevel::failed;
        }
        record.labels.push_back(label);
    }
    auto outcome = majority(record.labels);
    record.majority = outcome.majority;
    record.unanimous = outcome.unanimous;
    record.margin = outcome.margin;
    return record;
}

std::vector<DistillSample> curate(const std::vector<VoteRecord>& records,
                                  const CurationPolicy& policy) {
    std::vector<DistillSample> samples;
    for (const auto& record : records) {
        if (!record.majority) continue;
        if (policy.require_unanimous && !record.unanimous) continue;
        if (record.margin < policy.min_margin) continue;
        DistillSample sample;
        sample.item_id = record.item_id;
        sample.prompt = record.prompt;
        sample.target = *record.majority;
        sample.confidence =
            record.labels.empty() ? 0.0
                                  : static_cast<double>(record.margin) /
                                        static_cast<double>(record.labels.size());
        sample.provenance = record.unanimous ? Provenance::unanimous : Provenance::majority_k;
        samples.push_back(std::move(sample));
    }
    return samples;
}

AgreementStats agreement_stats(const std::vector<VoteRecord>& records,
                               const std::map<std::string, EvalLevel>* gold) {
    if (records.empty()) raise(Errc::empty_input, "agreement stats need at least one record");
    AgreementStats stats;
    std::size_t unanimous = 0;
    std::size_t with_gold = 0, disagree = 0;
    std::size_t unanimous_with_gold = 0, unanimous_disagree = 0;
    std::size_t unanimous_non_highly = 0;
    std::size_t split_with_majority = 0, split_non_highly = 0;

    for (const auto& record : records) {
        if (record.unanimous) ++unanimous;
        if (record.majority) {
            if (record.unanimous) {
                if (*record.majority != EvalLevel::highly) ++unanimous_non_highly;
            } else {
                ++split_with_majority;
                if (*record.majority != EvalLevel::highly) ++split_non_highly;
            }
            if (gold) {
                auto it = gold->find(record.item_id);
                if (it != gold->end()) {
                    ++with_gold;
                    const bool wrong = *record.majority != it->second;
                    if (wrong) ++disagree;
                    if (record.unanimous) {
                        ++unanimous_with_gold;
                        if (wrong) ++unanimous_disagree;
                    }
                }
            }
        }
    }

    auto frac = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    stats.unanimous_fraction = frac(unanimous, records.size());
    stats.disagreement_overall = frac(disagree, with_gold);
    stats.disagreement_given_unanimous = frac(unanimous_disagree, unanimous_with_gold);
    stats.non_highly_fraction_unanimous = frac(unanimous_non_highly, unanimous);
    stats.non_highly_fraction_split = frac(split_non_highly, split_with_majority);
    return stats;
}

std::size_t export_sft(const std::vector<DistillSample>& samples, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) raise(Errc::io_error, "cannot open for writing: " + tmp);
        for (const auto& sample : samples) {
            nlohmann::ordered_json doc;
            doc["prompt"] = sample.prompt;
            doc["completion"] = render_result(canonical_relevance(sample.target));
            doc["confidence"] = sample.confidence;
            doc["provenance"] = provenance_name(sample.provenance);
            out << doc.dump() << '\n';
        }
        if (!out) {
            out.close();
            std::remove(tmp.c_str());
            raise(Errc::io_error, "write failed: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        raise(Errc::io_error, "cannot move export into place: " + path);
    }
    return samples.size();
}

std::vector<DistillSample> import_sft(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open sft file: " + path);
    std::vector<DistillSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error, "sft line " + std::to_string(line_no) + " is invalid");
        }
        DistillSample sample;
        sample.prompt = doc.value("prompt", "");
        auto parsed = parse_result(doc.value("completion", ""));
        if (!parsed.level) {
            raise(Errc::parse_error,
                  "sft line " + std::to_string(line_no) + " has an unparseable completion");
        }
        sample.target = to_eval_level(*parsed.level);
        sample.confidence = doc.value("confidence", 0.0);
        auto provenance = provenance_from_name(doc.value("provenance", ""));
        sample.provenance = provenance.value_or(Provenance::majority_k);
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::vector<std::string> load_prompt_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open prompt templates: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        raise(Errc::parse_error, "prompt templates must be a JSON array: " + path);
    }
    std::vector<std::string> templates;
    for (const auto& item : doc) templates.push_back(item.get<std::string>());
    if (templates.empty()) raise(Errc::empty_input, "prompt template file is empty: " + path);
    return templates;
}

std::vector<VoteItem> load_vote_items(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open vote items: " + path);
    std::vector<VoteItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error, "items line " + std::to_string(line_no) + " is invalid");
        }
        VoteItem item;
        item.id = doc.value("id", "");
        item.query = doc.value("query", "");
        item.spu_name = doc.value("spu_name", "");
        if (item.id.empty() || item.query.empty() || item.spu_name.empty()) {
            raise(Errc::schema_error,
                  "items line " + std::to_string(line_no) + " needs id, query and spu_name");
        }
        items.push_back(std::move(item));
    }
    return items;
}

void write_vote_log(const std::vector<VoteRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot open vote log for writing: " + path);
    for (const auto& record : records) {
        nlohmann::ordered_json doc;
        doc["item_id"] = record.item_id;
        nlohmann::ordered_json labels = nlohmann::ordered_json::array();
        for (EvalLevel label : record.labels) labels.push_back(eval_level_name(label));
        doc["labels"] = labels;
        doc["majority"] =
            record.majority ? nlohmann::ordered_json(eval_level_name(*record.majority))
                            : nlohmann::ordered_json(nullptr);
        doc["unanimous"] = record.unanimous;
        doc["margin"] = record.margin;
        doc["prompt"] = record.prompt;
        out << doc.dump() << '\n';
    }
}

std::vector<VoteRecord> load_vote_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open vote log: " + path);
    std::vector<VoteRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error, "vote log line " + std::to_string(line_no) + " is invalid");
        }
        VoteRecord record;
        record.item_id = doc.value("item_id", "");
        for (const auto& label : doc.value("labels", nlohmann::json::array())) {
            auto level = eval_level_from_name(label.get<std::string>());
            if (!level) {
                raise(Errc::schema_error,
                      "vote log line " + std::to_string(line_no) + " has an unknown label");
            }
            record.labels.push_back(*level);
        }
        if (doc.contains("majority") && !doc["majority"].is_null()) {
            record.majority = eval_level_from_name(doc["majority"].get<std::string>());
        }
        record.unanimous = doc.value("unanimous", false);
        record.margin = doc.value("margin", 0);
        record.prompt = doc.value("prompt", "");
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace armed
