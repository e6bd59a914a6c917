#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "armed/errors.hpp"
#include "armed/pipeline.hpp"
#include "armed/service.hpp"

namespace {

using namespace armed;

PipelineConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return PipelineConfig{};
    return PipelineConfig::load(path);
}

RawSPU load_spu_file(const std::string& path, std::vector<ImageAttributes>& inline_attrs) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open spu file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(Errc::schema_error, "spu file must be a JSON object: " + path);
    }
    RawSPU spu;
    spu.raw_name = doc.value("raw_name", "");
    if (spu.raw_name.empty()) raise(Errc::schema_error, "spu raw_name is required");
    spu.category = doc.value("category", "Others");
    if (doc.contains("cpv") && doc.at("cpv").is_object()) {
        for (auto it = doc.at("cpv").begin(); it != doc.at("cpv").end(); ++it) {
            if (it.value().is_string()) spu.cpv[it.key()] = it.value().get<std::string>();
        }
    }
    if (doc.contains("image_attr_refs") && doc.at("image_attr_refs").is_array()) {
        for (const auto& ref : doc.at("image_attr_refs")) {
            spu.image_attr_refs.push_back(ref.get<std::string>());
        }
    }
    if (doc.contains("image_attrs") && doc.at("image_attrs").is_array()) {
        for (const auto& item : doc.at("image_attrs")) {
            ImageAttributes attrs;
            auto scalar = [&](const char* key) -> std::optional<std::string> {
                if (item.contains(key) && item.at(key).is_string() &&
                    !item.at(key).get<std::string>().empty()) {
                    return item.at(key).get<std::string>();
                }
                return std::nullopt;
            };
            attrs.brand = scalar("brand");
            attrs.product_name = scalar("product_name");
            attrs.dosage = scalar("dosage");
            attrs.user_group = scalar("user_group");
            if (item.contains("efficacy") && item.at("efficacy").is_array()) {
                for (const auto& term : item.at("efficacy")) {
                    if (term.is_string()) attrs.efficacy.push_back(term.get<std::string>());
                }
            }
            attrs.image_ref = item.value("image_ref", "");
            inline_attrs.push_back(std::move(attrs));
        }
    }
    return spu;
}

std::map<std::string, EvalLevel> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open predictions: " + path);
    std::map<std::string, EvalLevel> preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::schema_error,
                  "predictions line " + std::to_string(line_no) + " is not a JSON object");
        }
        const std::string id = doc.value("id", "");
        auto level = eval_level_from_name(doc.value("pred", ""));
        if (id.empty() || !level) {
            raise(Errc::schema_error,
                  "predictions line " + std::to_string(line_no) + " needs id and pred");
        }
        preds[id] = *level;
    }
    return preds;
}

int cmd_judge(const std::string& config_path, const std::string& query,
              const std::string& spu_file, bool as_json, bool with_timing) {
    Pipeline pipeline(load_config_or_default(config_path));
    std::vector<ImageAttributes> inline_attrs;
    RawSPU spu = load_spu_file(spu_file, inline_attrs);
    auto result = pipeline.assess(query, spu, inline_attrs);
    if (as_json) {
        std::cout << assessment_to_json(result, with_timing).dump(2) << "\n";
    } else {
        std::cout << "level:    " << level_name(result.judgment.level) << "\n"
                  << "eval:     " << eval_level_name(to_eval_level(result.judgment.level)) << "\n"
                  << "branch:   " << result.judgment.branch << "\n"
                  << "cheating: " << (result.judgment.cheating ? "yes" : "no") << "\n"
                  << "rendered: " << result.judgment.rendered << "\n";
        for (const auto& application : result.judgment.rule_trace) {
            std::cout << "rule:     " << application.rule_id << " (" << application.effect
                      << ") " << level_name(application.from) << " -> "
                      << level_name(application.to) << "\n";
        }
        for (const auto& entry : result.log) std::cout << "log:      " << entry << "\n";
        if (with_timing) {
            for (const auto& [stage, ms] : result.timing_ms) {
                std::cout << "timing:   " << stage << " " << ms << "ms\n";
            }
        }
    }
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& benchmark_path,
             const std::string& preds_path, const std::string& policy_name, bool as_json,
             const std::string& out_path) {
    PipelineConfig config = load_config_or_default(config_path);
    FailedPolicy policy =
        policy_name.empty() ? config.failed_policy : FailedPolicy::parse(policy_name);
    auto records = load_benchmark(benchmark_path, config.categories);
    auto preds = load_predictions(preds_path);
    auto report = evaluate(preds, records, policy);
    const std::string json_text = report_to_json(report).dump(2);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) raise(Errc::io_error, "cannot write report: " + out_path);
        out << json_text << "\n";
    }
    if (as_json) {
        std::cout << json_text << "\n";
    } else {
        std::cout << report_to_table(report);
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& benchmark_path,
            const std::string& out_path, int threads) {
    PipelineConfig config = load_config_or_default(config_path);
    if (threads > 0) config.concurrency = threads;
    Pipeline pipeline(std::move(config));
    auto records = load_benchmark(benchmark_path, pipeline.config().categories);
    auto predictions = pipeline.run_benchmark(records);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise(Errc::io_error, "cannot write predictions: " + out_path);
    for (const auto& [id, level] : predictions) {
        nlohmann::ordered_json doc;
        doc["id"] = id;
        doc["pred"] = eval_level_name(level);
        out << doc.dump() << "\n";
    }
    std::cerr << "assessed " << predictions.size() << " records -> " << out_path << "\n";
    return 0;
}

int cmd_hard(const std::string& config_path, const std::string& benchmark_path,
             std::uint64_t seed, int max_query_chars, int min_spu_chars,
             const std::string& out_path, bool as_json) {
    PipelineConfig config = load_config_or_default(config_path);
    HardParams params = config.hard;
    params.seed = seed;
    if (max_query_chars > 0) params.max_query_chars = static_cast<std::size_t>(max_query_chars);
    if (min_spu_chars > 0) params.min_spu_chars = static_cast<std::size_t>(min_spu_chars);
    auto records = load_benchmark(benchmark_path, config.categories);
    auto subset = build_hard_subset(records, params);
    if (!out_path.empty()) write_benchmark(subset, out_path);
    if (as_json) {
        nlohmann::ordered_json doc;
        doc["total"] = subset.size();
        doc["per_class"] = subset.size() / 3;
        doc["seed"] = params.seed;
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "hard subset: " << subset.size() << " records (" << subset.size() / 3
                  << " per class, seed " << params.seed << ")\n";
    }
    return 0;
}

int cmd_vote(const std::string& config_path, const std::string& items_path,
             const std::string& prompts_path, const std::string& out_path) {
    PipelineConfig config = load_config_or_default(config_path);
    Pipeline pipeline(std::move(config));
    auto items = load_vote_items(items_path);
    auto templates = prompts_path.empty() ? pipeline.prompt_templates()
                                          : load_prompt_templates(prompts_path);
    if (templates.empty()) raise(Errc::config_error, "no prompt templates configured");
    std::vector<VoteRecord> records;
    records.reserve(items.size());
    for (const auto& item : items) {
        records.push_back(vote(item, templates, pipeline.backends()));
    }
    write_vote_log(records, out_path);
    std::size_t unanimous = 0;
    for (const auto& record : records) {
        if (record.unanimous) ++unanimous;
    }
    std::cerr << "voted on " << records.size() << " items (" << unanimous << " unanimous) -> "
              << out_path << "\n";
    return 0;
}

int cmd_curate(const std::string& votes_path, int min_margin, bool require_unanimous,
               const std::string& out_path) {
    auto records = load_vote_log(votes_path);
    CurationPolicy policy;
    policy.min_margin = min_margin;
    policy.require_unanimous = require_unanimous;
    auto samples = curate(records, policy);
    const std::size_t written = export_sft(samples, out_path);
    std::cerr << "curated " << written << " of " << records.size() << " records -> " << out_path
              << "\n";
    return 0;
}

int cmd_online_metrics(std::int64_t clicks, std::int64_t impressions, std::int64_t conversions,
                       bool as_json) {
    auto metrics = online_metrics(clicks, impressions, conversions);
    if (as_json) {
        nlohmann::ordered_json doc;
        doc["ctr"] = metrics.ctr;
        doc["cvr"] = metrics.cvr ? nlohmann::ordered_json(*metrics.cvr)
                                 : nlohmann::ordered_json(nullptr);
        doc["cxr"] = metrics.cxr;
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "ctr: " << metrics.ctr << "\n";
        if (metrics.cvr) {
            std::cout << "cvr: " << *metrics.cvr << "\n";
        } else {
            std::cout << "cvr: undefined (no clicks)\n";
        }
        std::cout << "cxr: " << metrics.cxr << "\n";
    }
    return 0;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port) {
    Pipeline pipeline(load_config_or_default(config_path));
    JudgeService service(pipeline, pipeline.config().concurrency);
    std::cerr << "serving on " << host << ":" << port << "\n";
    service.run(host, port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relevance assessment engine for medical-product search"};
    app.require_subcommand(1);

    std::string config_path, query, spu_file, benchmark_path, preds_path, out_path;
    std::string items_path, prompts_path, votes_path, policy_name, host = "0.0.0.0";
    bool as_json = false, with_timing = false, require_unanimous = true;
    int threads = 0, port = 8080, min_margin = 0;
    int max_query_chars = 0, min_spu_chars = 0;
    std::uint64_t seed = 0;
    std::int64_t clicks = 0, impressions = 0, conversions = 0;

    auto* judge_cmd = app.add_subcommand("judge", "Assess one query/SPU pair");
    judge_cmd->add_option("--query", query, "Raw query text")->required();
    judge_cmd->add_option("--spu-file", spu_file, "JSON file with the SPU")->required();
    judge_cmd->add_option("--config", config_path, "Pipeline config file");
    judge_cmd->add_flag("--json", as_json, "Emit JSON");
    judge_cmd->add_flag("--timing", with_timing, "Include per-stage timings");

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against a benchmark");
    eval_cmd->add_option("--benchmark", benchmark_path, "Benchmark JSONL")->required();
    eval_cmd->add_option("--preds", preds_path, "Predictions JSONL {id, pred}")->required();
    eval_cmd->add_option("--failed-policy", policy_name,
                         "count_wrong | exclude | default_highly | default_less | "
                         "default_irrelevant");
    eval_cmd->add_option("--config", config_path, "Pipeline config file");
    eval_cmd->add_option("--out", out_path, "Write the JSON report here");
    eval_cmd->add_flag("--json", as_json, "Emit JSON instead of the table");

    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline over a benchmark");
    run_cmd->add_option("--benchmark", benchmark_path, "Benchmark JSONL")->required();
    run_cmd->add_option("--out", out_path, "Predictions JSONL to write")->required();
    run_cmd->add_option("--config", config_path, "Pipeline config file");
    run_cmd->add_option("--threads", threads, "Concurrency override");

    auto* hard_cmd = app.add_subcommand("hard", "Build the balanced hard subset");
    hard_cmd->add_option("--benchmark", benchmark_path, "Benchmark JSONL")->required();
    hard_cmd->add_option("--seed", seed, "Shuffle seed")->required();
    hard_cmd->add_option("--max-query-chars", max_query_chars, "Query length cap");
    hard_cmd->add_option("--min-spu-chars", min_spu_chars, "SPU length floor");
    hard_cmd->add_option("--config", config_path, "Pipeline config file");
    hard_cmd->add_option("--out", out_path, "Write the subset JSONL here");
    hard_cmd->add_flag("--json", as_json, "Emit JSON");

    auto* vote_cmd = app.add_subcommand("vote", "Multi-prompt teacher voting");
    vote_cmd->add_option("--items", items_path, "Items JSONL {id, query, spu_name}")->required();
    vote_cmd->add_option("--prompts", prompts_path, "Prompt template JSON array");
    vote_cmd->add_option("--config", config_path, "Pipeline config file");
    vote_cmd->add_option("--out", out_path, "Vote log JSONL to write")->required();

    auto* curate_cmd = app.add_subcommand("curate", "Curate vote records into SFT data");
    curate_cmd->add_option("--votes", votes_path, "Vote log JSONL")->required();
    curate_cmd->add_option("--min-margin", min_margin, "Minimum vote margin");
    curate_cmd->add_option("--require-unanimous", require_unanimous, "Keep unanimous only");
    curate_cmd->add_option("--out", out_path, "SFT JSONL to write")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP judging service");
    serve_cmd->add_option("--port", port, "Listen port")->required();
    serve_cmd->add_option("--host", host, "Bind host");
    serve_cmd->add_option("--config", config_path, "Pipeline config file");

    auto* online_cmd = app.add_subcommand("online-metrics", "CTR/CVR/CXR arithmetic");
    online_cmd->add_option("--clicks", clicks, "Click count")->required();
    online_cmd->add_option("--impressions", impressions, "Impression count")->required();
    online_cmd->add_option("--conversions", conversions, "Conversion count")->required();
    online_cmd->add_flag("--json", as_json, "Emit JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (judge_cmd->parsed()) {
            return cmd_judge(config_path, query, spu_file, as_json, with_timing);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(config_path, benchmark_path, preds_path, policy_name, as_json,
                            out_path);
        }
        if (run_cmd->parsed()) return cmd_run(config_path, benchmark_path, out_path, threads);
        if (hard_cmd->parsed()) {
            return cmd_hard(config_path, benchmark_path, seed, max_query_chars, min_spu_chars,
                            out_path, as_json);
        }
        if (vote_cmd->parsed()) return cmd_vote(config_path, items_path, prompts_path, out_path);
        if (curate_cmd->parsed()) {
            return cmd_curate(votes_path, min_margin, require_unanimous, out_path);
        }
        if (serve_cmd->parsed()) return cmd_serve(config_path, host, port);
        if (online_cmd->parsed()) {
            return cmd_online_metrics(clicks, impressions, conversions, as_json);
        }
    } catch (const armed::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
