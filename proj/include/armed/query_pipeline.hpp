#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "armed/backend.hpp"
#include "armed/core.hpp"

namespace armed {

struct AugmentedQuery {
    Query base;
    std::vector<std::string> appended_keywords;
    std::string augmented_text;  // normalized base text + keywords, space-joined
};

struct EvidenceSnippet {
    std::string source_id;
    std::string text;
    std::optional<double> similarity;  // set by score_evidence
    std::optional<bool> consistent;    // set on snippets that passed the similarity gate
};

struct QueryInterpretation {
    Query base;
    EntitySet entities;
    std::vector<std::string> alternative_expressions;
    std::vector<std::string> keywords;
    std::vector<std::string> topics;
    std::vector<std::string> hierarchies;
    std::string intent;
};

struct LexiconEntry {
    std::string trigger;  // normalized
    bool prefix = false;  // false: exact match only
    std::vector<std::string> keywords;
};

/// Category-keyword lexicon. File format: JSON array of
/// {"trigger": str, "match": "exact"|"prefix", "keywords": [str...]} in
/// priority order (first match wins).
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::vector<LexiconEntry> entries);
    static Lexicon load(const std::string& path);

    const LexiconEntry* match(const std::string& normalized_query) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<LexiconEntry> entries_;
};

/// Appends the keywords of the first matching lexicon entry; no match leaves
/// the query unchanged.
AugmentedQuery augment_query(const Query& query, const Lexicon& lexicon);

/// Supplies web-search evidence for a query string.
class EvidenceProvider {
public:
    virtual ~EvidenceProvider() = default;
    virtual std::vector<EvidenceSnippet> retrieve(const std::string& query_text) = 0;
};

/// JSONL fixture of {"query":..., "source_id":..., "text":...}; retrieval
/// matches on the normalized query string.
class FixtureEvidenceProvider : public EvidenceProvider {
public:
    explicit FixtureEvidenceProvider(const std::string& path);
    std::vector<EvidenceSnippet> retrieve(const std::string& query_text) override;

private:
    struct Entry {
        std::string normalized_query;
        EvidenceSnippet snippet;
    };
    std::vector<Entry> entries_;
};

/// POSTs {"query": ...} and expects {"snippets": [{"source_id","text"}...]}.
class HttpEvidenceProvider : public EvidenceProvider {
public:
    explicit HttpEvidenceProvider(std::string url, std::string token = "");
    std::vector<EvidenceSnippet> retrieve(const std::string& query_text) override;

private:
    std::string url_;
    std::string token_;
};

/// Scores each snippet with the similarity backend. Backend failure or an
/// unparseable score marks the snippet 0 (fail-closed); out-of-range scores
/// are clamped. Order and count preserved.
std::vector<EvidenceSnippet> score_evidence(const AugmentedQuery& query,
                                            std::vector<EvidenceSnippet> snippets,
                                            const BackendSet& backends,
                                            std::vector<std::string>* log = nullptr);

/// Stage 1 drops snippets below tau; stage 2 drops survivors the consistency
/// backend judges inconsistent (or cannot judge). Output is a subsequence of
/// the input.
std::vector<EvidenceSnippet> filter_evidence(const AugmentedQuery& query,
                                             std::vector<EvidenceSnippet> scored, double tau,
                                             const BackendSet& backends,
                                             std::vector<std::string>* log = nullptr);

/// Builds the structured interpretation from the NER backend's JSON response.
/// Malformed output degrades to an empty interpretation (logged); the
/// pipeline then falls back to string-level matching only.
QueryInterpretation interpret_query(const AugmentedQuery& query,
                                    const std::vector<EvidenceSnippet>& evidence,
                                    const BackendSet& backends, const std::string& rules_hint,
                                    std::size_t max_evidence_chars = 2000,
                                    std::vector<std::string>* log = nullptr);

}  // namespace armed
