#include "armed/query_pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "armed/errors.hpp"
#include "armed/prompts.hpp"

namespace armed {

namespace {

void log_line(std::vector<std::string>* log, std::string message) {
    if (log) log->push_back(std::move(message));
}

}  // namespace

Lexicon::Lexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
    for (auto& entry : entries_) {
        entry.trigger = normalize_text(entry.trigger);
        entry.keywords = normalize_terms(entry.keywords);
    }
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open lexicon: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        raise(Errc::parse_error, "lexicon must be a JSON array: " + path);
    }
    std::vector<LexiconEntry> entries;
    for (const auto& item : doc) {
        LexiconEntry entry;
        entry.trigger = item.value("trigger", "");
        entry.prefix = item.value("match", "exact") == std::string("prefix");
        if (item.contains("keywords")) {
            for (const auto& kw : item.at("keywords")) entry.keywords.push_back(kw.get<std::string>());
        }
        if (entry.trigger.empty()) raise(Errc::parse_error, "lexicon entry missing trigger");
        entries.push_back(std::move(entry));
    }
    return Lexicon(std::move(entries));
}

const LexiconEntry* Lexicon::match(const std::string& normalized_query) const {
    for (const auto& entry : entries_) {
        if (entry.prefix) {
            if (normalized_query.compare(0, entry.trigger.size(), entry.trigger) == 0) {
                return &entry;
            }
        } else if (normalized_query == entry.trigger) {
            return &entry;
        }
    }
    return nullptr;
}

AugmentedQuery augment_query(const Query& query, const Lexicon& lexicon) {
    AugmentedQuery out;
    out.base = query;
    out.augmented_text = query.normalized_text;
    if (const LexiconEntry* entry = lexicon.match(query.normalized_text)) {
        out.appended_keywords = entry->keywords;
        for (const auto& keyword : entry->keywords) {
            if (!out.augmented_text.empty()) out.augmented_text += ' ';
            out.augmented_text += keyword;
        }
    }
    return out;
}

FixtureEvidenceProvider::FixtureEvidenceProvider(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open evidence fixture: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error,
                  "evidence fixture line " + std::to_string(line_no) + " is not a JSON object");
        }
        Entry entry;
        entry.normalized_query = normalize_text(doc.value("query", ""));
        entry.snippet.source_id = doc.value("source_id", "");
        entry.snippet.text = doc.value("text", "");
        entries_.push_back(std::move(entry));
    }
}

std::vector<EvidenceSnippet> FixtureEvidenceProvider::retrieve(const std::string& query_text) {
    const std::string key = normalize_text(query_text);
    std::vector<EvidenceSnippet> out;
    for (const auto& entry : entries_) {
        if (entry.normalized_query == key) out.push_back(entry.snippet);
    }
    return out;
}

HttpEvidenceProvider::HttpEvidenceProvider(std::string url, std::string token)
    : url_(std::move(url)), token_(std::move(token)) {}

std::vector<EvidenceSnippet> HttpEvidenceProvider::retrieve(const std::string& query_text) {
    auto scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) {
        raise(Errc::config_error, "evidence url must include a scheme: " + url_);
    }
    auto path_start = url_.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

    httplib::Client client(base);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    nlohmann::ordered_json body = {{"query", query_text}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) raise(Errc::transport, "evidence provider unreachable");
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("snippets")) {
        raise(Errc::transport, "evidence provider response missing snippets");
    }
    std::vector<EvidenceSnippet> out;
    for (const auto& item : doc["snippets"]) {
        EvidenceSnippet snippet;
        snippet.source_id = item.value("source_id", "");
        snippet.text = item.value("text", "");
        out.push_back(std::move(snippet));
    }
    return out;
}

std::vector<EvidenceSnippet> score_evidence(const AugmentedQuery& query,
                                            std::vector<EvidenceSnippet> snippets,
                                            const BackendSet& backends,
                                            std::vector<std::string>* log) {
    for (auto& snippet : snippets) {
        double score = 0.0;
        try {
            auto response = backends.complete(
                Role::similarity,
                similarity_prompt(query.augmented_text, snippet.source_id, snippet.text));
            std::size_t consumed = 0;
            score = std::stod(response.text, &consumed);
            // trailing garbage after the decimal is tolerated
            if (score < 0.0 || score > 1.0) {
                log_line(log, "similarity score out of range for " + snippet.source_id +
                                  ", clamped: " + response.text);
                score = std::clamp(score, 0.0, 1.0);
            }
        } catch (const Error& e) {
            log_line(log, "similarity backend failed for " + snippet.source_id +
                              ", scored 0: " + e.what());
            score = 0.0;
        } catch (const std::exception&) {
            log_line(log, "similarity response unparseable for " + snippet.source_id +
                              ", scored 0");
            score = 0.0;
        }
        snippet.similarity = score;
    }
    return snippets;
}

std::vector<EvidenceSnippet> filter_evidence(const AugmentedQuery& query,
                                             std::vector<EvidenceSnippet> scored, double tau,
                                             const BackendSet& backends,
                                             std::vector<std::string>* log) {
    std::vector<EvidenceSnippet> survivors;
    for (auto& snippet : scored) {
        const double similarity = snippet.similarity.value_or(0.0);
        if (similarity < tau) {
            log_line(log, "evidence " + snippet.source_id + " dropped by similarity gate (" +
                              std::to_string(similarity) + " < tau)");
            continue;
        }
        bool keep = false;
        try {
            auto response = backends.complete(
                Role::consistency,
                consistency_prompt(query.augmented_text, snippet.source_id, snippet.text));
            const std::string verdict = normalize_text(response.text);
            if (verdict.find("inconsistent") != std::string::npos) {
                log_line(log, "evidence " + snippet.source_id + " judged inconsistent, dropped");
            } else if (verdict.find("consistent") != std::string::npos) {
                keep = true;
            } else {
                log_line(log, "consistency verdict unrecognized for " + snippet.source_id +
                                  ", dropped: " + response.text);
            }
        } catch (const Error& e) {
            log_line(log, "consistency backend failed for " + snippet.source_id +
                              ", dropped: " + e.what());
        }
        if (keep) {
            snippet.consistent = true;
            survivors.push_back(std::move(snippet));
        }
    }
    return survivors;
}

namespace {

/// Truncates to a codepoint budget without splitting a UTF-8 sequence.
std::string truncate_codepoints(const std::string& text, std::size_t max_codepoints) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < text.size() && count < max_codepoints) {
        char32_t cp;
        std::size_t len;
        i += utf8::decode(text, i, cp, len) ? len : 1;
        ++count;
    }
    return text.substr(0, i);
}

std::vector<std::string> terms_of(const nlohmann::json& value) {
    std::vector<std::string> out;
    if (value.is_string()) {
        out = split_terms(value.get<std::string>());
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_string()) continue;
            for (auto& term : split_terms(item.get<std::string>())) out.push_back(std::move(term));
        }
        out = normalize_terms(out);
    }
    return out;
}

std::optional<std::string> scalar_of(const nlohmann::json& value) {
    if (value.is_string()) {
        std::string n = normalize_text(value.get<std::string>());
        if (!n.empty()) return n;
    }
    return std::nullopt;
}

}  // namespace

QueryInterpretation interpret_query(const AugmentedQuery& query,
                                    const std::vector<EvidenceSnippet>& evidence,
                                    const BackendSet& backends, const std::string& rules_hint,
                                    std::size_t max_evidence_chars,
                                    std::vector<std::string>* log) {
    QueryInterpretation out;
    out.base = query.base;

    std::string digest;
    for (const auto& snippet : evidence) {
        if (!digest.empty()) digest += "; ";
        digest += snippet.text;
    }
    digest = truncate_codepoints(digest, max_evidence_chars);

    nlohmann::json doc;
    try {
        auto response =
            backends.complete(Role::ner, ner_prompt(query.augmented_text, digest, rules_hint));
        doc = nlohmann::json::parse(response.text, nullptr, false);
    } catch (const Error& e) {
        log_line(log, std::string("ner backend failed, continuing with string matching only: ") +
                          e.what());
        doc = nlohmann::json::value_t::discarded;
    }

    if (doc.is_discarded() || !doc.is_object()) {
        if (!doc.is_discarded()) {
            log_line(log, "ner response is not a JSON object, continuing with string matching only");
        }
    } else {
        out.entities.brand = scalar_of(doc.value("brand", nlohmann::json()));
        out.entities.core_name = scalar_of(doc.value("core_name", nlohmann::json()));
        out.entities.category = scalar_of(doc.value("category", nlohmann::json()));
        out.entities.dosage_form = scalar_of(doc.value("dosage_form", nlohmann::json()));
        out.entities.region = scalar_of(doc.value("region", nlohmann::json()));
        out.entities.specification = scalar_of(doc.value("specification", nlohmann::json()));
        out.entities.target_population = scalar_of(doc.value("target_population", nlohmann::json()));
        out.entities.efficacy = terms_of(doc.value("efficacy", nlohmann::json()));
        out.entities.ingredients = terms_of(doc.value("ingredients", nlohmann::json()));
        out.alternative_expressions = terms_of(doc.value("alternative_expressions", nlohmann::json()));
        out.keywords = terms_of(doc.value("keywords", nlohmann::json()));
        out.topics = terms_of(doc.value("topics", nlohmann::json()));
        out.hierarchies = terms_of(doc.value("hierarchies", nlohmann::json()));
        if (auto intent = scalar_of(doc.value("intent", nlohmann::json()))) out.intent = *intent;
    }

    if (!evidence.empty() && out.intent.empty()) out.intent = "unspecified";
    return out;
}

}  // namespace armed
