#include "armed/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "armed/errors.hpp"

namespace armed {

const std::vector<std::string>& default_categories() {
    static const std::vector<std::string> kCategories = {
        "Chinese and Western Medicines",
        "Medical Devices (Pharmacy)",
        "Beauty and Personal Care (Pharmacy)",
        "Nutrition and Health Products",
        "Adult Products (Pharmacy)",
        "Health and Wellness",
        "Others",
    };
    return kCategories;
}

namespace {

nlohmann::ordered_json image_attrs_to_json(const ImageAttributes& attrs) {
    nlohmann::ordered_json doc;
    if (attrs.brand) doc["brand"] = *attrs.brand;
    if (attrs.product_name) doc["product_name"] = *attrs.product_name;
    if (!attrs.efficacy.empty()) doc["efficacy"] = attrs.efficacy;
    if (attrs.dosage) doc["dosage"] = *attrs.dosage;
    if (attrs.user_group) doc["user_group"] = *attrs.user_group;
    if (!attrs.image_ref.empty()) doc["image_ref"] = attrs.image_ref;
    return doc;
}

ImageAttributes image_attrs_from_record_json(const nlohmann::json& doc) {
    ImageAttributes attrs;
    auto scalar = [&](const char* key) -> std::optional<std::string> {
        if (doc.contains(key) && doc.at(key).is_string() && !doc.at(key).get<std::string>().empty()) {
            return doc.at(key).get<std::string>();
        }
        return std::nullopt;
    };
    attrs.brand = scalar("brand");
    attrs.product_name = scalar("product_name");
    attrs.dosage = scalar("dosage");
    attrs.user_group = scalar("user_group");
    if (doc.contains("efficacy") && doc.at("efficacy").is_array()) {
        for (const auto& item : doc.at("efficacy")) {
            if (item.is_string()) attrs.efficacy.push_back(item.get<std::string>());
        }
    } else if (doc.contains("efficacy") && doc.at("efficacy").is_string()) {
        attrs.efficacy = split_terms(doc.at("efficacy").get<std::string>());
    }
    attrs.image_ref = doc.value("image_ref", "");
    return attrs;
}

}  // namespace

std::vector<BenchmarkRecord> load_benchmark(const std::string& path,
                                            const std::vector<std::string>& category_vocab) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open benchmark: " + path);
    const std::vector<std::string>& vocab =
        category_vocab.empty() ? default_categories() : category_vocab;
    const std::set<std::string> vocab_set(vocab.begin(), vocab.end());

    std::vector<BenchmarkRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::schema_error,
                  "benchmark line " + std::to_string(line_no) + ": not a JSON object");
        }
        BenchmarkRecord record;
        record.id = doc.value("id", "");
        record.query = doc.value("query", "");
        record.spu_name = doc.value("spu_name", "");
        record.category = doc.value("category", "");
        if (record.id.empty() || record.query.empty() || record.spu_name.empty()) {
            raise(Errc::schema_error, "benchmark line " + std::to_string(line_no) +
                                          ": id, query and spu_name are required");
        }
        if (!seen_ids.insert(record.id).second) {
            raise(Errc::schema_error, "benchmark line " + std::to_string(line_no) +
                                          ": duplicate id '" + record.id + "'");
        }
        if (!vocab_set.count(record.category)) {
            raise(Errc::schema_error, "benchmark line " + std::to_string(line_no) +
                                          ": unknown category '" + record.category + "'");
        }
        auto gold = eval_level_from_name(doc.value("gold", ""));
        if (!gold || *gold == EvalLevel::failed) {
            raise(Errc::schema_error, "benchmark line " + std::to_string(line_no) +
                                          ": gold must be highly_relevant, less_relevant or "
                                          "irrelevant");
        }
        record.gold = *gold;
        if (doc.contains("cpv") && doc.at("cpv").is_object()) {
            for (auto it = doc.at("cpv").begin(); it != doc.at("cpv").end(); ++it) {
                if (it.value().is_string()) record.cpv[it.key()] = it.value().get<std::string>();
            }
        }
        if (doc.contains("image_attrs") && doc.at("image_attrs").is_array()) {
            for (const auto& item : doc.at("image_attrs")) {
                if (item.is_object()) record.image_attrs.push_back(image_attrs_from_record_json(item));
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

void write_benchmark(const std::vector<BenchmarkRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path);
    for (const auto& record : records) {
        nlohmann::ordered_json doc;
        doc["id"] = record.id;
        doc["query"] = record.query;
        doc["spu_name"] = record.spu_name;
        if (!record.cpv.empty()) {
            nlohmann::ordered_json cpv;
            for (const auto& [key, value] : record.cpv) cpv[key] = value;
            doc["cpv"] = cpv;
        }
        if (!record.image_attrs.empty()) {
            nlohmann::ordered_json attrs = nlohmann::ordered_json::array();
            for (const auto& item : record.image_attrs) attrs.push_back(image_attrs_to_json(item));
            doc["image_attrs"] = attrs;
        }
        doc["category"] = record.category;
        doc["gold"] = eval_level_name(record.gold);
        out << doc.dump() << '\n';
    }
}

FailedPolicy FailedPolicy::parse(std::string_view name) {
    FailedPolicy policy;
    if (name == "count_wrong") {
        policy.kind = FailedPolicyKind::count_wrong;
    } else if (name == "exclude") {
        policy.kind = FailedPolicyKind::exclude;
    } else if (name == "default_highly") {
        policy.kind = FailedPolicyKind::default_label;
        policy.label = EvalLevel::highly;
    } else if (name == "default_less") {
        policy.kind = FailedPolicyKind::default_label;
        policy.label = EvalLevel::less;
    } else if (name == "default_irrelevant") {
        policy.kind = FailedPolicyKind::default_label;
        policy.label = EvalLevel::irrelevant;
    } else {
        raise(Errc::config_error, "unknown failed policy: " + std::string(name));
    }
    return policy;
}

std::string FailedPolicy::name() const {
    switch (kind) {
        case FailedPolicyKind::count_wrong: return "count_wrong";
        case FailedPolicyKind::exclude: return "exclude";
        case FailedPolicyKind::default_label:
            switch (label) {
                case EvalLevel::highly: return "default_highly";
                case EvalLevel::less: return "default_less";
                case EvalLevel::irrelevant: return "default_irrelevant";
                case EvalLevel::failed: break;
            }
    }
    return "count_wrong";
}

long MetricBlock::failed_count() const {
    long failed = 0;
    for (const auto& row : confusion) failed += row[3];
    return failed;
}

namespace {

int class_index(EvalLevel level) {
    switch (level) {
        case EvalLevel::highly: return 0;
        case EvalLevel::less: return 1;
        case EvalLevel::irrelevant: return 2;
        case EvalLevel::failed: return 3;
    }
    return 3;
}

MetricBlock compute_block(const std::vector<std::pair<EvalLevel, EvalLevel>>& pairs,
                          FailedPolicy policy) {
    MetricBlock block;
    block.n = static_cast<long>(pairs.size());
    for (const auto& [gold, pred] : pairs) {
        block.confusion[class_index(gold)][class_index(pred)] += 1;
    }

    const long failed = block.failed_count();
    const long non_failed = block.n - failed;
    long raw_correct = 0;
    for (int i = 0; i < 3; ++i) raw_correct += block.confusion[i][i];

    block.loss_rate = block.n == 0 ? 0.0 : static_cast<double>(failed) / block.n;
    block.accuracy_wo_failed =
        non_failed == 0 ? 0.0 : static_cast<double>(raw_correct) / non_failed;

    // Effective 3x3 matrix under the policy drives per-class metrics and accuracy_all.
    std::array<std::array<long, 3>, 3> effective{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) effective[r][c] = block.confusion[r][c];
    }
    std::array<long, 3> recall_denominator{};
    long accuracy_denominator = block.n;
    switch (policy.kind) {
        case FailedPolicyKind::count_wrong:
            // Failed predictions stay wrong: full gold counts in the denominators.
            for (int r = 0; r < 3; ++r) {
                recall_denominator[r] =
                    effective[r][0] + effective[r][1] + effective[r][2] + block.confusion[r][3];
            }
            break;
        case FailedPolicyKind::default_label: {
            const int c = class_index(policy.label);
            for (int r = 0; r < 3; ++r) effective[r][c] += block.confusion[r][3];
            for (int r = 0; r < 3; ++r) {
                recall_denominator[r] = effective[r][0] + effective[r][1] + effective[r][2];
            }
            break;
        }
        case FailedPolicyKind::exclude:
            for (int r = 0; r < 3; ++r) {
                recall_denominator[r] = effective[r][0] + effective[r][1] + effective[r][2];
            }
            accuracy_denominator = non_failed;
            break;
    }

    long effective_correct = 0;
    for (int i = 0; i < 3; ++i) effective_correct += effective[i][i];
    block.accuracy_all = accuracy_denominator == 0
                             ? 0.0
                             : static_cast<double>(effective_correct) / accuracy_denominator;

    for (int c = 0; c < 3; ++c) {
        long column = 0;
        for (int r = 0; r < 3; ++r) column += effective[r][c];
        const long diagonal = effective[c][c];
        ClassMetrics metrics;
        metrics.precision = column == 0 ? 0.0 : static_cast<double>(diagonal) / column;
        metrics.recall = recall_denominator[c] == 0
                             ? 0.0
                             : static_cast<double>(diagonal) / recall_denominator[c];
        metrics.f1 = metrics.precision + metrics.recall == 0.0
                         ? 0.0
                         : 2.0 * metrics.precision * metrics.recall /
                               (metrics.precision + metrics.recall);
        block.per_class[c] = metrics;
    }
    return block;
}

}  // namespace

EvalReport evaluate(const std::map<std::string, EvalLevel>& predictions,
                    const std::vector<BenchmarkRecord>& gold_records, FailedPolicy policy) {
    std::vector<std::pair<EvalLevel, EvalLevel>> pairs;
    std::map<std::string, std::vector<std::pair<EvalLevel, EvalLevel>>> per_category;
    pairs.reserve(gold_records.size());
    for (const auto& record : gold_records) {
        auto it = predictions.find(record.id);
        if (it == predictions.end()) {
            raise(Errc::schema_error,
                  "missing prediction for id '" + record.id + "' (failed must be explicit)");
        }
        pairs.emplace_back(record.gold, it->second);
        per_category[record.category].emplace_back(record.gold, it->second);
    }

    EvalReport report;
    report.policy = policy;
    report.overall = compute_block(pairs, policy);
    for (const auto& [category, category_pairs] : per_category) {
        report.per_category[category] = compute_block(category_pairs, policy);
    }
    return report;
}

namespace {

nlohmann::ordered_json block_to_json(const MetricBlock& block) {
    static const char* kClassNames[3] = {"highly_relevant", "less_relevant", "irrelevant"};
    nlohmann::ordered_json doc;
    doc["n"] = block.n;
    doc["loss_rate"] = block.loss_rate;
    doc["accuracy_all"] = block.accuracy_all;
    doc["accuracy_wo_failed"] = block.accuracy_wo_failed;
    nlohmann::ordered_json confusion;
    confusion["rows"] = {"highly_relevant", "less_relevant", "irrelevant"};
    confusion["cols"] = {"highly_relevant", "less_relevant", "irrelevant", "failed"};
    nlohmann::ordered_json counts = nlohmann::ordered_json::array();
    for (const auto& row : block.confusion) {
        counts.push_back(std::vector<long>(row.begin(), row.end()));
    }
    confusion["counts"] = counts;
    doc["confusion"] = confusion;
    nlohmann::ordered_json per_class;
    for (int c = 0; c < 3; ++c) {
        per_class[kClassNames[c]] = {{"precision", block.per_class[c].precision},
                                     {"recall", block.per_class[c].recall},
                                     {"f1", block.per_class[c].f1}};
    }
    doc["per_class"] = per_class;
    return doc;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["failed_policy"] = report.policy.name();
    doc["overall"] = block_to_json(report.overall);
    nlohmann::ordered_json per_category;
    for (const auto& [category, block] : report.per_category) {
        per_category[category] = block_to_json(block);
    }
    doc["per_category"] = per_category;
    return doc;
}

std::string report_to_table(const EvalReport& report) {
    std::string out;
    char line[512];
    std::snprintf(line, sizeof(line), "%-40s %5s %8s %7s %7s %7s %7s %7s %7s %7s %7s %7s %8s %9s\n",
                  "category", "n", "loss", "H-P", "H-R", "H-F1", "L-P", "L-R", "L-F1", "I-P",
                  "I-R", "I-F1", "ALL", "w/oFAILED");
    out += line;
    auto add_row = [&](const std::string& name, const MetricBlock& block) {
        std::snprintf(line, sizeof(line),
                      "%-40s %5ld %7.2f%% %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f "
                      "%8.4f %9.4f\n",
                      name.c_str(), block.n, block.loss_rate * 100.0,
                      block.per_class[0].precision, block.per_class[0].recall,
                      block.per_class[0].f1, block.per_class[1].precision,
                      block.per_class[1].recall, block.per_class[1].f1,
                      block.per_class[2].precision, block.per_class[2].recall,
                      block.per_class[2].f1, block.accuracy_all, block.accuracy_wo_failed);
        out += line;
    };
    add_row("ALL", report.overall);
    for (const auto& [category, block] : report.per_category) add_row(category, block);
    return out;
}

namespace {

/// Fisher-Yates with explicit index draws so the order is identical across
/// standard libraries.
void deterministic_shuffle(std::vector<std::size_t>& indices, std::mt19937_64& rng) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
}

}  // namespace

std::vector<BenchmarkRecord> build_hard_subset(const std::vector<BenchmarkRecord>& records,
                                               const HardParams& params) {
    if (records.empty()) raise(Errc::empty_input, "hard subset needs records");
    std::array<std::vector<std::size_t>, 3> buckets;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& record = records[i];
        const std::size_t query_len = utf8::length(normalize_text(record.query));
        const std::size_t spu_len = utf8::length(normalize_text(record.spu_name));
        if (query_len <= params.max_query_chars && spu_len >= params.min_spu_chars) {
            buckets[class_index(record.gold)].push_back(i);
        }
    }
    std::size_t per_class = SIZE_MAX;
    for (int c = 0; c < 3; ++c) {
        if (buckets[c].empty()) {
            raise(Errc::cannot_balance,
                  std::string("no hard candidates for class ") +
                      eval_level_name(static_cast<EvalLevel>(c)));
        }
        per_class = std::min(per_class, buckets[c].size());
    }

    std::mt19937_64 rng(params.seed);
    std::vector<BenchmarkRecord> out;
    for (int c = 0; c < 3; ++c) {
        deterministic_shuffle(buckets[c], rng);
        std::vector<std::size_t> chosen(buckets[c].begin(),
                                        buckets[c].begin() + static_cast<long>(per_class));
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t index : chosen) out.push_back(records[index]);
    }
    return out;
}

OnlineMetrics online_metrics(std::int64_t clicks, std::int64_t impressions,
                             std::int64_t conversions) {
    if (clicks < 0 || impressions < 0 || conversions < 0) {
        raise(Errc::schema_error, "counts must be non-negative");
    }
    if (impressions == 0) raise(Errc::undefined_metric, "impressions are zero");
    if (clicks == 0 && conversions > 0) {
        raise(Errc::data_inconsistency, "conversions without clicks");
    }
    OnlineMetrics metrics;
    metrics.ctr = static_cast<double>(clicks) / static_cast<double>(impressions);
    if (clicks > 0) {
        metrics.cvr = static_cast<double>(conversions) / static_cast<double>(clicks);
    }
    metrics.cxr = static_cast<double>(conversions) / static_cast<double>(impressions);
    return metrics;
}

}  // namespace armed
