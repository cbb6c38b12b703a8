#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sct/metrics/metrics.hpp"
#include "sct/metrics/stats.hpp"

namespace sct::metrics {

struct SubjectMetrics {
    double ssim = 0.0;
    double pearson = 0.0;
    double spearman = 0.0;
    double dice = 0.0;
    double jaccard = 0.0;
    double psnr_db = 0.0;
    double mae_skull_hu = 0.0;
    bool overlap_degenerate = false;

    bool operator==(const SubjectMetrics&) const = default;
};

/// Column order of every table and serialization.
inline constexpr std::array<std::string_view, 7> kMetricNames = {"ssim", "pearson",  "spearman",    "dice",
                                                                 "jaccard", "psnr_db", "mae_skull_hu"};

double metric_value(const SubjectMetrics& m, std::string_view name);
double& metric_value(SubjectMetrics& m, std::string_view name);

struct SubjectResult {
    std::string id;
    SubjectMetrics metrics;
};

struct MetricsReport {
    std::vector<SubjectResult> subjects;  ///< in input order
    SubjectMetrics mean;
    std::map<std::string, TTestResult> tests;  ///< keyed by metric name; empty without a baseline
};

/// Everything needed to score one subject. Intensity metrics compare `pred_ct` with
/// normalize_ct(truth_hu) over the whole volume; MAE is restricted to `truth_skull`.
struct SubjectEvaluation {
    std::string id;
    const Volume* pred_ct = nullptr;  ///< NORM_CT
    const BinaryMask* pred_skull = nullptr;
    const Volume* truth_hu = nullptr;  ///< HU
    const BinaryMask* truth_skull = nullptr;
};

SubjectMetrics evaluate_subject(const SubjectEvaluation& s, const SsimOptions& opt = {});

/// Per-subject metrics and their means. With a baseline over the same subject ids in the
/// same order, each metric also gets a paired t-test (this report minus baseline).
MetricsReport build_report(std::span<const SubjectEvaluation> subjects, const MetricsReport* baseline = nullptr,
                           const SsimOptions& opt = {});

/// Paired t-tests of `a` against `b` per metric; replaces a's tests in the returned copy.
MetricsReport compare_reports(const MetricsReport& a, const MetricsReport& b);

/// Infinite values are written as the strings "inf" / "-inf".
nlohmann::ordered_json to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

/// Aligned table: one row per subject, then "Avg", then "p-value" when tests are present.
std::string to_table(const MetricsReport& r);

}  // namespace sct::metrics
