#include "armed/core.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "armed/errors.hpp"

namespace armed {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::timeout: return "Timeout";
        case Errc::transport: return "TransportError";
        case Errc::no_backend_for_role: return "NoBackendForRole";
        case Errc::no_scripted_response: return "NoScriptedResponse";
        case Errc::parse_error: return "ParseError";
        case Errc::duplicate_rule_id: return "DuplicateRuleId";
        case Errc::schema_error: return "SchemaError";
        case Errc::empty_input: return "EmptyInput";
        case Errc::cannot_balance: return "CannotBalance";
        case Errc::undefined_metric: return "UndefinedMetric";
        case Errc::data_inconsistency: return "DataInconsistency";
        case Errc::standardization_required: return "StandardizationRequired";
        case Errc::config_error: return "ConfigError";
        case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

bool errc_retryable(Errc code) {
    return code == Errc::timeout || code == Errc::transport;
}

const char* level_name(RelevanceLevel level) {
    switch (level) {
        case RelevanceLevel::highly_relevant: return "Highly Relevant";
        case RelevanceLevel::moderately_relevant: return "Moderately Relevant";
        case RelevanceLevel::weakly_relevant: return "Weakly Relevant";
        case RelevanceLevel::irrelevant: return "Irrelevant";
    }
    return "Irrelevant";
}

const char* level_machine_name(RelevanceLevel level) {
    switch (level) {
        case RelevanceLevel::highly_relevant: return "highly_relevant";
        case RelevanceLevel::moderately_relevant: return "moderately_relevant";
        case RelevanceLevel::weakly_relevant: return "weakly_relevant";
        case RelevanceLevel::irrelevant: return "irrelevant";
    }
    return "irrelevant";
}

std::optional<RelevanceLevel> level_from_machine_name(std::string_view name) {
    if (name == "highly_relevant") return RelevanceLevel::highly_relevant;
    if (name == "moderately_relevant") return RelevanceLevel::moderately_relevant;
    if (name == "weakly_relevant") return RelevanceLevel::weakly_relevant;
    if (name == "irrelevant") return RelevanceLevel::irrelevant;
    return std::nullopt;
}

EvalLevel to_eval_level(RelevanceLevel level) {
    switch (level) {
        case RelevanceLevel::highly_relevant: return EvalLevel::highly;
        case RelevanceLevel::moderately_relevant: return EvalLevel::less;
        case RelevanceLevel::weakly_relevant: return EvalLevel::less;
        case RelevanceLevel::irrelevant: return EvalLevel::irrelevant;
    }
    return EvalLevel::irrelevant;
}

const char* eval_level_name(EvalLevel level) {
    switch (level) {
        case EvalLevel::highly: return "highly_relevant";
        case EvalLevel::less: return "less_relevant";
        case EvalLevel::irrelevant: return "irrelevant";
        case EvalLevel::failed: return "failed";
    }
    return "failed";
}

std::optional<EvalLevel> eval_level_from_name(std::string_view name) {
    if (name == "highly_relevant") return EvalLevel::highly;
    if (name == "less_relevant") return EvalLevel::less;
    if (name == "irrelevant") return EvalLevel::irrelevant;
    if (name == "failed") return EvalLevel::failed;
    return std::nullopt;
}

RelevanceLevel canonical_relevance(EvalLevel level) {
    switch (level) {
        case EvalLevel::highly: return RelevanceLevel::highly_relevant;
        case EvalLevel::less: return RelevanceLevel::moderately_relevant;
        case EvalLevel::irrelevant: return RelevanceLevel::irrelevant;
        case EvalLevel::failed: break;
    }
    raise(Errc::schema_error, "failed has no relevance-level representative");
}

namespace utf8 {

bool decode(std::string_view text, std::size_t pos, char32_t& cp, std::size_t& length) {
    if (pos >= text.size()) return false;
    const auto b0 = static_cast<unsigned char>(text[pos]);
    if (b0 < 0x80) {
        cp = b0;
        length = 1;
        return true;
    }
    std::size_t need = 0;
    char32_t acc = 0;
    if ((b0 & 0xE0) == 0xC0) {
        need = 1;
        acc = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        need = 2;
        acc = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        need = 3;
        acc = b0 & 0x07;
    } else {
        return false;
    }
    if (pos + need >= text.size()) return false;
    for (std::size_t i = 1; i <= need; ++i) {
        const auto b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) return false;
        acc = (acc << 6) | (b & 0x3F);
    }
    // reject overlong encodings and out-of-range values
    static constexpr char32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
    if (acc < kMin[need] || acc > 0x10FFFF) return false;
    cp = acc;
    length = need + 1;
    return true;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::size_t length(std::string_view text) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp;
        std::size_t len;
        i += decode(text, i, cp, len) ? len : 1;
        ++n;
    }
    return n;
}

}  // namespace utf8

namespace {

bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v';
}

char32_t fold_case(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    // Latin-1 uppercase block, skipping the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
    static const NormalizeOptions kDefault;
    return normalize_text(raw, kDefault);
}

std::string normalize_text(std::string_view raw, const NormalizeOptions& options) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    bool emitted = false;
    std::size_t i = 0;
    while (i < raw.size()) {
        char32_t cp;
        std::size_t len;
        if (!utf8::decode(raw, i, cp, len)) {
            // Opaque byte: passed through untouched.
            if (pending_space && emitted) out.push_back(' ');
            pending_space = false;
            out.push_back(raw[i]);
            emitted = true;
            ++i;
            continue;
        }
        i += len;
        if (cp == 0x3000) cp = U' ';  // ideographic space
        if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;  // full-width -> half-width
        if (is_space_cp(cp)) {
            pending_space = true;
            continue;
        }
        if (options.strip.find(cp) != std::u32string::npos) continue;
        cp = fold_case(cp);
        if (pending_space && emitted) out.push_back(' ');
        pending_space = false;
        utf8::append(out, cp);
        emitted = true;
    }
    return out;
}

bool contains_full(std::string_view spu_name, std::string_view query) {
    return spu_name.find(query) != std::string_view::npos;
}

bool contains_all_chars(std::string_view spu_name, std::string_view query) {
    std::unordered_map<char32_t, int> need;
    std::size_t i = 0;
    while (i < query.size()) {
        char32_t cp;
        std::size_t len;
        if (!utf8::decode(query, i, cp, len)) {
            cp = 0x110000u + static_cast<unsigned char>(query[i]);
            len = 1;
        }
        i += len;
        if (cp != U' ') ++need[cp];
    }
    if (need.empty()) return true;
    std::size_t remaining = 0;
    for (const auto& [cp, n] : need) remaining += static_cast<std::size_t>(n);
    i = 0;
    while (i < spu_name.size() && remaining > 0) {
        char32_t cp;
        std::size_t len;
        if (!utf8::decode(spu_name, i, cp, len)) {
            cp = 0x110000u + static_cast<unsigned char>(spu_name[i]);
            len = 1;
        }
        i += len;
        auto it = need.find(cp);
        if (it != need.end() && it->second > 0) {
            --it->second;
            --remaining;
        }
    }
    return remaining == 0;
}

std::vector<std::string> split_terms(std::string_view raw) {
    static const std::u32string kSeparators = U",;，、；";
    std::vector<std::string> parts;
    std::string current;
    std::size_t i = 0;
    while (i < raw.size()) {
        char32_t cp;
        std::size_t len;
        if (!utf8::decode(raw, i, cp, len)) {
            current.push_back(raw[i]);
            ++i;
            continue;
        }
        if (kSeparators.find(cp) != std::u32string::npos) {
            parts.push_back(std::move(current));
            current.clear();
        } else {
            current.append(raw.substr(i, len));
        }
        i += len;
    }
    parts.push_back(std::move(current));
    return normalize_terms(parts);
}

std::vector<std::string> normalize_terms(const std::vector<std::string>& terms) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& term : terms) {
        std::string n = normalize_text(term);
        if (n.empty()) continue;
        if (seen.insert(n).second) out.push_back(std::move(n));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto end = normalized.find(' ', start);
        if (end == std::string_view::npos) end = normalized.size();
        if (end > start) tokens.emplace_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

Query Query::make(std::string raw) {
    if (raw.empty()) raise(Errc::schema_error, "query raw_text must be non-empty");
    Query q;
    q.normalized_text = normalize_text(raw);
    q.raw_text = std::move(raw);
    return q;
}

bool EntitySet::empty() const {
    return !brand && !core_name && efficacy.empty() && !category && !dosage_form &&
           ingredients.empty() && !region && !specification && !target_population;
}

bool is_entity_field_name(std::string_view name) {
    static const std::unordered_set<std::string_view> kNames = {
        "brand",  "core_name",     "efficacy", "category", "dosage_form",
        "ingredients", "region", "specification", "target_population",
    };
    return kNames.count(name) > 0;
}

EntityFieldView entity_field(const EntitySet& entities, std::string_view name) {
    auto scalar = [](const std::optional<std::string>& v) {
        EntityFieldView view;
        if (v && !v->empty()) {
            view.present = true;
            view.values = {*v};
        }
        return view;
    };
    auto list = [](const std::vector<std::string>& v) {
        EntityFieldView view;
        view.present = !v.empty();
        view.values = v;
        return view;
    };
    if (name == "brand") return scalar(entities.brand);
    if (name == "core_name") return scalar(entities.core_name);
    if (name == "efficacy") return list(entities.efficacy);
    if (name == "category") return scalar(entities.category);
    if (name == "dosage_form") return scalar(entities.dosage_form);
    if (name == "ingredients") return list(entities.ingredients);
    if (name == "region") return scalar(entities.region);
    if (name == "specification") return scalar(entities.specification);
    if (name == "target_population") return scalar(entities.target_population);
    raise(Errc::schema_error, "unknown entity field: " + std::string(name));
}

}  // namespace armed
