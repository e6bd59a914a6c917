#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace armed {

/// Four-level relevance verdict. Ordered: irrelevant < weakly < moderately < highly,
/// so std::min/std::max act as meet/join on the level lattice.
enum class RelevanceLevel {
    irrelevant = 0,
    weakly_relevant = 1,
    moderately_relevant = 2,
    highly_relevant = 3,
};

/// Three-level benchmark label plus the failed bucket for unparseable output.
enum class EvalLevel {
    highly,
    less,
    irrelevant,
    failed,
};

/// Canonical display name, e.g. "Highly Relevant".
const char* level_name(RelevanceLevel level);

/// Machine name, e.g. "highly_relevant".
const char* level_machine_name(RelevanceLevel level);
std::optional<RelevanceLevel> level_from_machine_name(std::string_view name);

/// highly_relevant -> highly; moderately/weakly -> less; irrelevant -> irrelevant.
EvalLevel to_eval_level(RelevanceLevel level);

const char* eval_level_name(EvalLevel level);
std::optional<EvalLevel> eval_level_from_name(std::string_view name);

/// Representative four-level value for a benchmark label
/// (highly -> highly_relevant, less -> moderately_relevant, irrelevant -> irrelevant).
/// Throws schema_error for failed.
RelevanceLevel canonical_relevance(EvalLevel level);

namespace utf8 {

/// Decodes the codepoint starting at `pos`. Returns false on an invalid or
/// truncated sequence (callers then treat the single byte as opaque).
bool decode(std::string_view text, std::size_t pos, char32_t& cp, std::size_t& length);

void append(std::string& out, char32_t cp);

/// Codepoint count with invalid bytes counted as one unit each.
std::size_t length(std::string_view text);

}  // namespace utf8

struct NormalizeOptions {
    /// Codepoints dropped outright: brackets ()[]【】「」 and , . ; : / \ -
    std::u32string strip = U"()[]【】「」,.;:/\\-";
};

/// Case-folds (ASCII + Latin-1 + full-width Latin), maps full-width forms to
/// half-width, drops the configured bracket/punctuation set, and collapses
/// whitespace runs to single spaces with no leading/trailing space.
/// Idempotent; never grows the string.
std::string normalize_text(std::string_view raw);
std::string normalize_text(std::string_view raw, const NormalizeOptions& options);

/// True iff `query` is a contiguous substring of `spu_name`. Empty query matches.
/// Both sides are expected to be normalized already.
bool contains_full(std::string_view spu_name, std::string_view query);

/// True iff the codepoint multiset of `query` (spaces excluded) is contained in
/// the codepoint multiset of `spu_name`. Empty query matches.
bool contains_all_chars(std::string_view spu_name, std::string_view query);

/// Splits a raw attribute value on , ， 、 ; ； then normalizes each term,
/// dropping empties and duplicates (first occurrence wins).
std::vector<std::string> split_terms(std::string_view raw);

/// Normalizes every term of an already-split list; dedupes, drops empties.
std::vector<std::string> normalize_terms(const std::vector<std::string>& terms);

/// Space-separated tokens of a normalized string.
std::vector<std::string> tokenize(std::string_view normalized);

struct Query {
    std::string raw_text;
    std::string normalized_text;

    /// Throws schema_error when raw is empty.
    static Query make(std::string raw);
};

struct RawSPU {
    std::string raw_name;
    std::vector<std::string> image_attr_refs;
    std::map<std::string, std::string> cpv;
    std::string category;
};

struct EntitySet {
    std::optional<std::string> brand;
    std::optional<std::string> core_name;
    std::vector<std::string> efficacy;
    std::optional<std::string> category;
    std::optional<std::string> dosage_form;
    std::vector<std::string> ingredients;
    std::optional<std::string> region;
    std::optional<std::string> specification;
    std::optional<std::string> target_population;

    bool empty() const;
    bool operator==(const EntitySet&) const = default;
};

/// Values of one EntitySet field viewed uniformly as a term set
/// (scalar fields become singleton sets). `present` is false for an unset
/// scalar or an empty list.
struct EntityFieldView {
    bool present = false;
    std::vector<std::string> values;
};

/// Valid names: brand, core_name, efficacy, category, dosage_form,
/// ingredients, region, specification, target_population.
bool is_entity_field_name(std::string_view name);
EntityFieldView entity_field(const EntitySet& entities, std::string_view name);

}  // namespace armed
