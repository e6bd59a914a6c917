#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "armed/core.hpp"
#include "armed/spu_pipeline.hpp"

namespace armed {

struct BenchmarkRecord {
    std::string id;
    std::string query;
    std::string spu_name;
    std::vector<ImageAttributes> image_attrs;  // optional, inline
    std::map<std::string, std::string> cpv;    // optional
    std::string category;
    EvalLevel gold = EvalLevel::highly;  // never failed
};

/// Default category vocabulary used when a config supplies none.
const std::vector<std::string>& default_categories();

/// Benchmark JSONL: one record per line with gold in
/// {"highly_relevant","less_relevant","irrelevant"}. Duplicate ids, unknown
/// gold labels and unknown categories are rejected with a line number.
std::vector<BenchmarkRecord> load_benchmark(const std::string& path,
                                            const std::vector<std::string>& category_vocab = {});
void write_benchmark(const std::vector<BenchmarkRecord>& records, const std::string& path);

enum class FailedPolicyKind { count_wrong, default_label, exclude };

struct FailedPolicy {
    FailedPolicyKind kind = FailedPolicyKind::default_label;
    EvalLevel label = EvalLevel::highly;  // only for default_label

    /// Accepts count_wrong, exclude, default_highly, default_less, default_irrelevant.
    static FailedPolicy parse(std::string_view name);
    std::string name() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricBlock {
    // rows: gold {highly, less, irrelevant}; cols: predicted {highly, less, irrelevant, failed}
    std::array<std::array<long, 4>, 3> confusion{};
    std::array<ClassMetrics, 3> per_class{};
    double accuracy_all = 0.0;
    double loss_rate = 0.0;
    double accuracy_wo_failed = 0.0;
    long n = 0;

    long failed_count() const;
};

struct EvalReport {
    FailedPolicy policy;
    MetricBlock overall;
    std::map<std::string, MetricBlock> per_category;
};

/// Standard per-class precision/recall/F1 with 0-on-empty-denominator
/// conventions. Every gold id must have a prediction (failed counts as one).
EvalReport evaluate(const std::map<std::string, EvalLevel>& predictions,
                    const std::vector<BenchmarkRecord>& gold_records, FailedPolicy policy);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

struct HardParams {
    std::size_t max_query_chars = 6;
    std::size_t min_spu_chars = 20;
    std::uint64_t seed = 0;
};

/// Short queries against long SPU names, downsampled to an exact 1:1:1 class
/// balance with a deterministic seeded shuffle.
std::vector<BenchmarkRecord> build_hard_subset(const std::vector<BenchmarkRecord>& records,
                                               const HardParams& params);

struct OnlineMetrics {
    double ctr = 0.0;
    std::optional<double> cvr;  // undefined when there are no clicks
    double cxr = 0.0;
};

/// ctr = clicks/impressions, cvr = conversions/clicks, cxr = conversions/impressions.
/// Zero impressions raise UndefinedMetric; conversions without clicks raise
/// DataInconsistency; zero clicks with zero conversions leave cvr undefined.
OnlineMetrics online_metrics(std::int64_t clicks, std::int64_t impressions,
                             std::int64_t conversions);

}  // namespace armed
