#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armed/backend.hpp"
#include "armed/core.hpp"

namespace armed {

/// Product attributes read off one merchant-uploaded image.
struct ImageAttributes {
    std::optional<std::string> brand;
    std::optional<std::string> product_name;
    std::vector<std::string> efficacy;
    std::optional<std::string> dosage;
    std::optional<std::string> user_group;
    std::string image_ref;
};

enum class Aspect { brand, product_name, efficacy, dosage, user_group };
const char* aspect_name(Aspect aspect);

enum class AspectState { consistent, partially_consistent, inconsistent };
const char* aspect_state_name(AspectState state);

struct AspectStatus {
    Aspect aspect;
    AspectState status;
    std::string note;
};

struct ConsistencyReport {
    std::vector<AspectStatus> aspects;  // exactly 5, fixed aspect order
    bool cheating = false;              // brand or product-name aspect inconsistent
    std::string reason;
    /// Brand claims in the name/CPV with no image support; standardization
    /// must scrub these when cheating is flagged.
    std::vector<std::string> unsupported_name_terms;

    const AspectStatus& aspect(Aspect a) const;
};

struct ExtendedSPU {
    RawSPU base;
    std::string standardized_name;
    EntitySet entities;
    std::map<std::string, std::vector<std::string>> extended;  // attribute key -> terms
    ConsistencyReport report;
};

/// JSONL fixture of {"spu_id", "image_ref", "brand", "product_name",
/// "efficacy", "dosage", "user_group"}; looked up by spu_id or image_ref.
class ImageAttrStore {
public:
    ImageAttrStore() = default;
    explicit ImageAttrStore(const std::string& path);

    std::vector<ImageAttributes> for_spu(const std::string& spu_id) const;
    std::vector<ImageAttributes> for_refs(const std::vector<std::string>& refs) const;

private:
    std::multimap<std::string, ImageAttributes> by_spu_;
    std::map<std::string, ImageAttributes> by_ref_;
};

/// Compares name-side claims (CPV plus the name itself) against image-derived
/// attributes per aspect. Multiple image records are merged first: term union
/// on efficacy, majority vote on scalar fields. With no image evidence at all
/// the report degrades to all-PartiallyConsistent, cheating=false.
ConsistencyReport detect_cheating(const RawSPU& spu,
                                  const std::vector<ImageAttributes>& image_attrs,
                                  const BackendSet& backends,
                                  std::vector<std::string>* log = nullptr);

/// Produces the clean standardized name. When cheating is flagged the result
/// is guaranteed not to contain any reported unsupported term; backend failure
/// in that state aborts with StandardizationRequired. Without a cheating flag
/// backend failure falls back to the normalized raw name.
std::string standardize_name(const RawSPU& spu, const ConsistencyReport& report,
                             const BackendSet& backends,
                             std::vector<std::string>* log = nullptr);

/// Merges CPV, image attributes and backend-extended attributes into the
/// extended map (precedence CPV > image > backend per key) and fills the
/// entity set. Backend failure degrades to CPV + image only.
ExtendedSPU extend_spu(const RawSPU& spu, std::string standardized_name,
                       ConsistencyReport report,
                       const std::vector<ImageAttributes>& image_attrs,
                       const BackendSet& backends, std::vector<std::string>* log = nullptr);

}  // namespace armed
