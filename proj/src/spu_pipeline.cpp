#include "armed/spu_pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "armed/errors.hpp"
#include "armed/prompts.hpp"

namespace armed {

const char* aspect_name(Aspect aspect) {
    switch (aspect) {
        case Aspect::brand: return "brand";
        case Aspect::product_name: return "product_name";
        case Aspect::efficacy: return "efficacy";
        case Aspect::dosage: return "dosage";
        case Aspect::user_group: return "user_group";
    }
    return "brand";
}

const char* aspect_state_name(AspectState state) {
    switch (state) {
        case AspectState::consistent: return "consistent";
        case AspectState::partially_consistent: return "partially_consistent";
        case AspectState::inconsistent: return "inconsistent";
    }
    return "inconsistent";
}

const AspectStatus& ConsistencyReport::aspect(Aspect a) const {
    for (const auto& status : aspects) {
        if (status.aspect == a) return status;
    }
    raise(Errc::schema_error, std::string("report missing aspect ") + aspect_name(a));
}

namespace {

void log_line(std::vector<std::string>* log, std::string message) {
    if (log) log->push_back(std::move(message));
}

ImageAttributes image_attrs_from_json(const nlohmann::json& doc) {
    ImageAttributes attrs;
    auto scalar = [&](const char* key) -> std::optional<std::string> {
        if (doc.contains(key) && doc.at(key).is_string()) {
            std::string value = doc.at(key).get<std::string>();
            if (!value.empty()) return value;
        }
        return std::nullopt;
    };
    attrs.brand = scalar("brand");
    attrs.product_name = scalar("product_name");
    attrs.dosage = scalar("dosage");
    attrs.user_group = scalar("user_group");
    if (doc.contains("efficacy")) {
        const auto& eff = doc.at("efficacy");
        if (eff.is_string()) {
            attrs.efficacy = split_terms(eff.get<std::string>());
        } else if (eff.is_array()) {
            std::vector<std::string> raw;
            for (const auto& item : eff) {
                if (item.is_string()) raw.push_back(item.get<std::string>());
            }
            attrs.efficacy = normalize_terms(raw);
        }
    }
    attrs.image_ref = doc.value("image_ref", "");
    return attrs;
}

/// Most frequent normalized non-empty value; ties resolved by first occurrence.
std::optional<std::string> majority_value(const std::vector<std::string>& values) {
    std::unordered_map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& value : values) {
        std::string n = normalize_text(value);
        if (n.empty()) continue;
        if (counts[n]++ == 0) order.push_back(n);
    }
    std::optional<std::string> best;
    int best_count = 0;
    for (const auto& candidate : order) {
        if (counts[candidate] > best_count) {
            best = candidate;
            best_count = counts[candidate];
        }
    }
    return best;
}

struct MergedImageSide {
    std::optional<std::string> brand;
    std::optional<std::string> product_name;
    std::vector<std::string> efficacy;
    std::optional<std::string> dosage;
    std::optional<std::string> user_group;
};

MergedImageSide merge_image_attrs(const std::vector<ImageAttributes>& attrs) {
    MergedImageSide merged;
    std::vector<std::string> brands, names, dosages, groups, efficacy;
    for (const auto& record : attrs) {
        if (record.brand) brands.push_back(*record.brand);
        if (record.product_name) names.push_back(*record.product_name);
        if (record.dosage) dosages.push_back(*record.dosage);
        if (record.user_group) groups.push_back(*record.user_group);
        for (const auto& term : record.efficacy) efficacy.push_back(term);
    }
    merged.brand = majority_value(brands);
    merged.product_name = majority_value(names);
    merged.dosage = majority_value(dosages);
    merged.user_group = majority_value(groups);
    merged.efficacy = normalize_terms(efficacy);
    return merged;
}

std::vector<std::string> cpv_terms(const RawSPU& spu, std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
        auto it = spu.cpv.find(key);
        if (it != spu.cpv.end()) {
            auto terms = split_terms(it->second);
            if (!terms.empty()) return terms;
        }
    }
    return {};
}

std::vector<std::string> token_union(const std::vector<std::string>& terms) {
    std::vector<std::string> tokens;
    for (const auto& term : terms) {
        for (auto& token : tokenize(term)) tokens.push_back(std::move(token));
    }
    return normalize_terms(tokens);
}

std::string join_terms(const std::vector<std::string>& terms) {
    std::string out;
    for (const auto& term : terms) {
        if (!out.empty()) out += ",";
        out += term;
    }
    return out;
}

/// Jaccard-style three-way status over term sets (non-brand aspects).
AspectStatus term_set_status(Aspect aspect, const std::vector<std::string>& name_side,
                             const std::vector<std::string>& image_side) {
    AspectStatus status{aspect, AspectState::consistent, ""};
    if (name_side.empty() && image_side.empty()) {
        status.note = "no claims on either side";
        return status;
    }
    if (name_side.empty() || image_side.empty()) {
        status.status = AspectState::partially_consistent;
        status.note = name_side.empty() ? "no name-side claim" : "not shown in images";
        return status;
    }
    std::set<std::string> a(name_side.begin(), name_side.end());
    std::set<std::string> b(image_side.begin(), image_side.end());
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    if (inter.size() == a.size() && inter.size() == b.size()) {
        status.note = "exact match";
    } else if (!inter.empty()) {
        status.status = AspectState::partially_consistent;
        status.note = "shared: " + join_terms(inter);
    } else {
        status.status = AspectState::inconsistent;
        status.note = "no overlap";
    }
    return status;
}

}  // namespace

ImageAttrStore::ImageAttrStore(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open image attribute fixture: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            raise(Errc::parse_error,
                  "image attribute fixture line " + std::to_string(line_no) + " is invalid");
        }
        ImageAttributes attrs = image_attrs_from_json(doc);
        const std::string spu_id = doc.value("spu_id", "");
        if (!spu_id.empty()) by_spu_.emplace(spu_id, attrs);
        if (!attrs.image_ref.empty()) by_ref_[attrs.image_ref] = attrs;
    }
}

std::vector<ImageAttributes> ImageAttrStore::for_spu(const std::string& spu_id) const {
    std::vector<ImageAttributes> out;
    auto [begin, end] = by_spu_.equal_range(spu_id);
    for (auto it = begin; it != end; ++it) out.push_back(it->second);
    return out;
}

std::vector<ImageAttributes> ImageAttrStore::for_refs(const std::vector<std::string>& refs) const {
    std::vector<ImageAttributes> out;
    for (const auto& ref : refs) {
        auto it = by_ref_.find(ref);
        if (it != by_ref_.end()) out.push_back(it->second);
    }
    return out;
}

ConsistencyReport detect_cheating(const RawSPU& spu,
                                  const std::vector<ImageAttributes>& image_attrs,
                                  const BackendSet& backends, std::vector<std::string>* log) {
    std::vector<ImageAttributes> attrs = image_attrs;
    if (attrs.empty() && !spu.image_attr_refs.empty() && backends.has(Role::cheating)) {
        try {
            auto response = backends.complete(
                Role::cheating, image_attrs_prompt(spu.raw_name, spu.image_attr_refs),
                spu.image_attr_refs);
            nlohmann::json doc = nlohmann::json::parse(response.text, nullptr, false);
            if (doc.is_object()) {
                attrs.push_back(image_attrs_from_json(doc));
            } else if (doc.is_array()) {
                for (const auto& item : doc) {
                    if (item.is_object()) attrs.push_back(image_attrs_from_json(item));
                }
            } else {
                log_line(log, "image attribute extraction returned no usable JSON");
            }
        } catch (const Error& e) {
            log_line(log, std::string("image attribute extraction failed: ") + e.what());
        }
    }

    ConsistencyReport report;
    if (attrs.empty()) {
        for (Aspect aspect : {Aspect::brand, Aspect::product_name, Aspect::efficacy,
                              Aspect::dosage, Aspect::user_group}) {
            report.aspects.push_back(
                {aspect, AspectState::partially_consistent, "no image evidence"});
        }
        report.cheating = false;
        report.reason = "no image evidence";
        log_line(log, "no image evidence for spu, consistency check degraded");
        return report;
    }

    const MergedImageSide image = merge_image_attrs(attrs);
    const std::string name_normalized = normalize_text(spu.raw_name);

    // Name-side brand claims: CPV brand terms plus image brands visible in the name.
    std::vector<std::string> name_brands = cpv_terms(spu, {"brand"});
    if (image.brand && contains_full(name_normalized, *image.brand)) {
        name_brands.push_back(*image.brand);
        name_brands = normalize_terms(name_brands);
    }
    std::vector<std::string> image_brands;
    if (image.brand) image_brands.push_back(*image.brand);

    AspectStatus brand_status{Aspect::brand, AspectState::consistent, ""};
    if (name_brands.empty() && image_brands.empty()) {
        brand_status.note = "no brand claims";
    } else if (name_brands.empty() || image_brands.empty()) {
        brand_status.status = AspectState::partially_consistent;
        brand_status.note = name_brands.empty() ? "brand only visible in images"
                                                : "brand claims not verifiable from images";
    } else {
        std::set<std::string> shown(image_brands.begin(), image_brands.end());
        std::vector<std::string> unsupported;
        for (const auto& claim : name_brands) {
            if (!shown.count(claim)) unsupported.push_back(claim);
        }
        if (unsupported.empty()) {
            brand_status.note = "all brand claims supported by images";
        } else {
            brand_status.status = AspectState::inconsistent;
            brand_status.note = "unsupported in images: " + join_terms(unsupported);
            report.unsupported_name_terms = unsupported;
        }
    }
    report.aspects.push_back(brand_status);

    report.aspects.push_back(term_set_status(
        Aspect::product_name, tokenize(name_normalized),
        image.product_name ? tokenize(*image.product_name) : std::vector<std::string>{}));
    report.aspects.push_back(
        term_set_status(Aspect::efficacy, cpv_terms(spu, {"efficacy"}), image.efficacy));
    report.aspects.push_back(term_set_status(
        Aspect::dosage, token_union(cpv_terms(spu, {"dosage", "specification"})),
        image.dosage ? tokenize(*image.dosage) : std::vector<std::string>{}));
    report.aspects.push_back(term_set_status(
        Aspect::user_group, token_union(cpv_terms(spu, {"user_group", "target_population"})),
        image.user_group ? tokenize(*image.user_group) : std::vector<std::string>{}));

    report.cheating =
        report.aspect(Aspect::brand).status == AspectState::inconsistent ||
        report.aspect(Aspect::product_name).status == AspectState::inconsistent;
    if (report.cheating) {
        report.reason = report.unsupported_name_terms.empty()
                            ? "product name inconsistent with images"
                            : "brand claims unsupported by images: " +
                                  join_terms(report.unsupported_name_terms);
        log_line(log, "cheating flagged: " + report.reason);
    } else {
        report.reason = "no cheating signal";
    }
    return report;
}

namespace {

std::string scrub_terms(std::string name, const std::vector<std::string>& terms) {
    for (const auto& term : terms) {
        if (term.empty()) continue;
        std::size_t pos = 0;
        while ((pos = name.find(term, pos)) != std::string::npos) {
            name.erase(pos, term.size());
        }
    }
    return normalize_text(name);
}

}  // namespace

std::string standardize_name(const RawSPU& spu, const ConsistencyReport& report,
                             const BackendSet& backends, std::vector<std::string>* log) {
    if (report.cheating) {
        std::string response_text;
        try {
            auto response = backends.complete(
                Role::standardize,
                standardize_prompt(spu.raw_name, report.unsupported_name_terms));
            response_text = response.text;
        } catch (const Error& e) {
            raise(Errc::standardization_required,
                  std::string("cheating flagged but standardization backend failed: ") +
                      e.what());
        }
        std::string name = scrub_terms(normalize_text(response_text),
                                       report.unsupported_name_terms);
        if (name.empty()) {
            raise(Errc::standardization_required,
                  "cheating flagged and no safe standardized name remains");
        }
        return name;
    }

    try {
        auto response = backends.complete(Role::standardize, standardize_prompt(spu.raw_name, {}));
        std::string name = normalize_text(response.text);
        if (!name.empty()) return name;
        log_line(log, "standardize backend returned empty name, using normalized raw name");
    } catch (const Error& e) {
        log_line(log, std::string("standardize backend unavailable, using normalized raw name: ") +
                          e.what());
    }
    return normalize_text(spu.raw_name);
}

ExtendedSPU extend_spu(const RawSPU& spu, std::string standardized_name,
                       ConsistencyReport report,
                       const std::vector<ImageAttributes>& image_attrs,
                       const BackendSet& backends, std::vector<std::string>* log) {
    if (standardized_name.empty()) {
        raise(Errc::schema_error, "standardized name must be non-empty");
    }
    ExtendedSPU out;
    out.base = spu;
    out.standardized_name = std::move(standardized_name);
    out.report = std::move(report);

    const MergedImageSide image = merge_image_attrs(image_attrs);
    std::string image_summary;
    auto add_summary = [&](const char* key, const std::string& value) {
        if (value.empty()) return;
        if (!image_summary.empty()) image_summary += ";";
        image_summary += std::string(key) + "=" + value;
    };
    if (image.brand) add_summary("brand", *image.brand);
    if (image.product_name) add_summary("product_name", *image.product_name);
    add_summary("efficacy", join_terms(image.efficacy));
    if (image.dosage) add_summary("dosage", *image.dosage);
    if (image.user_group) add_summary("user_group", *image.user_group);

    // Lowest precedence first: backend extension, then image, then CPV.
    std::map<std::string, std::vector<std::string>> merged;
    if (backends.has(Role::extend)) {
        try {
            auto response = backends.complete(
                Role::extend, extend_prompt(out.standardized_name, spu.cpv, image_summary));
            nlohmann::json doc = nlohmann::json::parse(response.text, nullptr, false);
            if (doc.is_object()) {
                for (auto it = doc.begin(); it != doc.end(); ++it) {
                    std::vector<std::string> terms;
                    if (it.value().is_string()) {
                        terms = split_terms(it.value().get<std::string>());
                    } else if (it.value().is_array()) {
                        std::vector<std::string> raw;
                        for (const auto& item : it.value()) {
                            if (item.is_string()) raw.push_back(item.get<std::string>());
                        }
                        terms = normalize_terms(raw);
                    }
                    std::string key = normalize_text(it.key());
                    std::replace(key.begin(), key.end(), ' ', '_');
                    if (!key.empty() && !terms.empty()) merged[key] = std::move(terms);
                }
            } else {
                log_line(log, "extend backend returned no usable JSON, skipped");
            }
        } catch (const Error& e) {
            log_line(log, std::string("extend backend failed, using cpv + image only: ") +
                              e.what());
        }
    }

    if (image.brand) merged["brand"] = {*image.brand};
    if (image.product_name) merged["product_name"] = {*image.product_name};
    if (!image.efficacy.empty()) merged["efficacy"] = image.efficacy;
    if (image.dosage) merged["dosage"] = {*image.dosage};
    if (image.user_group) merged["user_group"] = {*image.user_group};

    for (const auto& [raw_key, raw_value] : spu.cpv) {
        std::string key = normalize_text(raw_key);
        std::replace(key.begin(), key.end(), ' ', '_');
        auto terms = split_terms(raw_value);
        if (!key.empty() && !terms.empty()) merged[key] = std::move(terms);
    }
    out.extended = std::move(merged);

    auto first_of = [&](std::initializer_list<const char*> keys) -> std::optional<std::string> {
        for (const char* key : keys) {
            auto it = out.extended.find(key);
            if (it != out.extended.end() && !it->second.empty()) return it->second.front();
        }
        return std::nullopt;
    };
    auto list_of = [&](const char* key) -> std::vector<std::string> {
        auto it = out.extended.find(key);
        return it == out.extended.end() ? std::vector<std::string>{} : it->second;
    };

    out.entities.brand = first_of({"brand"});
    out.entities.core_name = first_of({"core_name", "product_name"});
    if (!out.entities.core_name) out.entities.core_name = out.standardized_name;
    out.entities.efficacy = list_of("efficacy");
    if (!spu.category.empty()) out.entities.category = normalize_text(spu.category);
    out.entities.dosage_form = first_of({"dosage_form"});
    out.entities.ingredients = list_of("ingredients");
    out.entities.region = first_of({"region"});
    out.entities.specification = first_of({"specification", "dosage"});
    out.entities.target_population = first_of({"target_population", "user_group"});
    return out;
}

}  // namespace armed
